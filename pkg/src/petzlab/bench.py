"""Experiment runner: settings registry, sweeps, invariant audits, CSV output.

The CLI reproduces the decoder-comparison curve families as CSV data:

    petzlab sweep --config <file>
    petzlab audit --setting <name> --points <n>

Exit codes: 0 success, 2 invariant violation, 3 config error. The
environment variable ``PETZLAB_WORKERS`` overrides the configured worker
count. CSV output is deterministic byte-for-byte for a fixed config;
measured wall times are written only when timing output is requested.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import decoders, infomeasures, optdec
from .errors import ParseError, PetzlabError, ValidationError
from .matcore import matrix_power_on_support
from .quantum import (
    DensityOperator,
    KrausChannel,
    channel_on_purification,
    make_channel,
    make_code_source,
    purify,
)

DECODER_SERIES = ("sw", "petz", "twirled", "optimal", "none")
BOUND_SERIES = ("lower_sw", "lower_twirled", "upper_bk", "sw_original")

# The optimal-decoder series is skipped (flagged) when the reduced SDP
# variable would exceed this edge length.
SDP_DIM_LIMIT = 128

QUAD_TOL = 1e-9


@dataclass(frozen=True)
class Setting:
    """A named (code source, channel family) experiment."""

    name: str
    code: str
    channel_kind: str
    n_qubits: int

    def build(self, p: float) -> tuple[DensityOperator, KrausChannel]:
        rho = make_code_source(self.code)
        ch = make_channel(self.channel_kind, p, n=self.n_qubits)
        return rho, ch


SETTINGS = {
    "bitflip3": Setting("bitflip3", "bitflip3", "bitflip", 3),
    "lncy4": Setting("lncy4", "lncy4", "amplitude_damping", 4),
    "fivequbit": Setting("fivequbit", "fivequbit", "amplitude_damping", 5),
    "identity": Setting("identity", "bitflip3", "identity", 3),
}


@dataclass(frozen=True)
class SweepConfig:
    setting: str
    p_start: float = 0.0
    p_stop: float = 1.0
    p_count: int = 101
    decoders: tuple[str, ...] = DECODER_SERIES
    bounds: tuple[str, ...] = BOUND_SERIES
    tol: float = 1e-7
    out: str = "curves.csv"
    workers: int = 1

    def grid(self) -> np.ndarray:
        if self.p_count == 1:
            return np.array([self.p_start])
        return np.linspace(self.p_start, self.p_stop, self.p_count)


@dataclass(frozen=True)
class CurvePoint:
    setting: str
    p: float
    series: str
    value: float
    seconds: float
    flags: str


_CONFIG_KEYS = (
    "setting",
    "p_start",
    "p_stop",
    "p_count",
    "decoders",
    "bounds",
    "tol",
    "out",
    "workers",
)


def parse_config(text: str) -> SweepConfig:
    """Parse the flat ``key = value`` sweep-config format.

    Blank lines and ``#`` comments are ignored. Unknown and duplicated keys
    are errors; so are values outside their documented ranges.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, 1)
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ParseError("missing key before '='", lineno, 1)
        if key not in _CONFIG_KEYS:
            raise ValidationError(key, "unknown config key")
        if key in raw:
            raise ValidationError(key, "duplicated config key")
        raw[key] = value

    if "setting" not in raw:
        raise ValidationError("setting", "required key is missing")
    setting = raw["setting"]
    if setting not in SETTINGS:
        raise ValidationError("setting", f"unknown setting {setting!r}")

    def parse_float(key: str, default: float) -> float:
        if key not in raw:
            return default
        try:
            return float(raw[key])
        except ValueError:
            raise ValidationError(key, f"not a number: {raw[key]!r}")

    def parse_int(key: str, default: int) -> int:
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError:
            raise ValidationError(key, f"not an integer: {raw[key]!r}")

    def parse_list(key: str, default: tuple[str, ...], allowed: tuple[str, ...]):
        if key not in raw:
            return default
        items = tuple(s.strip() for s in raw[key].split(",") if s.strip())
        for item in items:
            if item not in allowed:
                raise ValidationError(key, f"unknown series {item!r}")
        if len(set(items)) != len(items):
            raise ValidationError(key, "repeated series")
        return items

    cfg = SweepConfig(
        setting=setting,
        p_start=parse_float("p_start", 0.0),
        p_stop=parse_float("p_stop", 1.0),
        p_count=parse_int("p_count", 101),
        decoders=parse_list("decoders", DECODER_SERIES, DECODER_SERIES),
        bounds=parse_list("bounds", BOUND_SERIES, BOUND_SERIES),
        tol=parse_float("tol", 1e-7),
        out=raw.get("out", "curves.csv"),
        workers=parse_int("workers", 1),
    )
    if not 0.0 <= cfg.p_start <= 1.0:
        raise ValidationError("p_start", f"must be in [0, 1], got {cfg.p_start}")
    if not 0.0 <= cfg.p_stop <= 1.0:
        raise ValidationError("p_stop", f"must be in [0, 1], got {cfg.p_stop}")
    if cfg.p_stop < cfg.p_start:
        raise ValidationError("p_stop", "p_stop is smaller than p_start")
    if cfg.p_count < 1:
        raise ValidationError("p_count", f"must be >= 1, got {cfg.p_count}")
    if not cfg.tol > 0:
        raise ValidationError("tol", f"must be positive, got {cfg.tol}")
    if cfg.workers < 1:
        raise ValidationError("workers", f"must be >= 1, got {cfg.workers}")
    if not cfg.decoders and not cfg.bounds:
        raise ValidationError("decoders", "decoder and bound lists are both empty")
    if not cfg.out:
        raise ValidationError("out", "output path is empty")
    return cfg


def _series_values(setting: str, p: float, wanted: tuple[str, ...], tol: float):
    """Compute all requested series at one grid point."""
    rho, ch = SETTINGS[setting].build(p)
    pur = purify(rho)
    sigma_rb = channel_on_purification(pur, ch)
    kernel = decoders.RotatedFidelity(sigma_rb)
    sigma_r = sigma_rb.marginal("R")

    out: list[CurvePoint] = []
    for series in wanted:
        start = time.perf_counter()
        flags = "ok"
        try:
            if series == "petz":
                value = min(1.0, max(0.0, kernel.petz()))
            elif series == "twirled":
                value = min(1.0, max(0.0, kernel.twirled(QUAD_TOL)))
            elif series == "sw":
                dec, _ = decoders.build_sw(rho, ch)
                value = decoders.fe_of_decoder(rho, ch, dec)
            elif series == "none":
                value = decoders.fe_of_decoder(
                    rho, ch, decoders.identity_decoder(rho.dim)
                )
            elif series == "optimal":
                prob, _ = optdec.reduce_problem(rho, ch)
                if prob.dim > SDP_DIM_LIMIT:
                    out.append(
                        CurvePoint(
                            setting,
                            p,
                            series,
                            math.nan,
                            time.perf_counter() - start,
                            f"skipped:sdp_dim_{prob.dim}",
                        )
                    )
                    continue
                value = optdec.solve_sdp(prob, tol=tol).primal
            elif series == "lower_sw":
                w_r = matrix_power_on_support(sigma_r, -1.0)
                value = 2.0 ** infomeasures.min_petz_mi_order2(sigma_rb, w_r)
            elif series == "lower_twirled":
                value = 2.0 ** (-infomeasures.epsilon_sw(sigma_rb))
            elif series == "upper_bk":
                value = math.sqrt(kernel.petz())
            elif series == "sw_original":
                eps = max(0.0, infomeasures.epsilon_sw(sigma_rb))
                value = infomeasures.sw_original_bound(eps)
            else:
                raise ValidationError("series", f"unknown series {series!r}")
        except PetzlabError as exc:
            value = math.nan
            flags = f"error:{type(exc).__name__}"
        out.append(
            CurvePoint(setting, p, series, value, time.perf_counter() - start, flags)
        )
    return out


def _worker(args) -> list[CurvePoint]:
    return _series_values(*args)


def run_sweep(cfg: SweepConfig) -> list[CurvePoint]:
    """Evaluate every requested series on the p-grid.

    Grid points are independent work items; results are collected in
    deterministic order regardless of completion order, and a failing
    point is recorded with its error, never dropped.
    """
    wanted = tuple(cfg.decoders) + tuple(cfg.bounds)
    workers = int(os.environ.get("PETZLAB_WORKERS", cfg.workers))
    jobs = [(cfg.setting, float(p), wanted, cfg.tol) for p in cfg.grid()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_worker, jobs))
    else:
        chunks = [_worker(job) for job in jobs]
    return [point for chunk in chunks for point in chunk]


def emit_csv(points, path, timing: bool = False) -> None:
    """Write curve points as CSV, sorted by (setting, series, p).

    Columns: setting,p,series,value,seconds,flags; UTF-8, LF line endings,
    12 significant digits. The seconds column is zeroed unless ``timing``
    is set, keeping default output byte-deterministic across runs.
    """
    rows = sorted(points, key=lambda c: (c.setting, c.series, c.p))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("setting,p,series,value,seconds,flags\n")
        for c in rows:
            seconds = c.seconds if timing else 0.0
            fh.write(
                f"{c.setting},{c.p:.12g},{c.series},{c.value:.12g},"
                f"{seconds:.12g},{c.flags}\n"
            )


@dataclass(frozen=True)
class AuditRow:
    setting: str
    p: float
    check: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AuditReport:
    rows: tuple[AuditRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[AuditRow]:
        return [r for r in self.rows if not r.passed]


THM2_TOL = 1e-8
CHAIN_TOL = 1e-8
BK_TOL = 1e-6
BETA0_TOL = 1e-10


def audit_invariants(setting: str, points: int = 21, include_sdp: bool = True) -> AuditReport:
    """Per-point checks of the closed-form and inequality-chain guarantees.

    Checks, per grid point: closed-form/simulation agreement for the Petz
    decoder, the Petz >= twirled >= 2^D chain, the SW >= 2^I >= 2^(-eps)
    chain, and (optionally) the optimality bracket; plus one normalization
    check of the beta0 quadrature.
    """
    if setting not in SETTINGS:
        raise ValidationError("setting", f"unknown setting {setting!r}")
    rows: list[AuditRow] = []
    norm = decoders.beta0_quadrature(lambda t: 1.0, 1e-12)
    rows.append(
        AuditRow(
            setting,
            math.nan,
            "beta0_normalization",
            abs(norm - 1.0) <= BETA0_TOL,
            f"integral={norm:.15g}",
        )
    )
    grid = np.linspace(0.0, 1.0, points) if points > 1 else np.array([0.0])
    for p in grid:
        p = float(p)
        rho, ch = SETTINGS[setting].build(p)
        pur = purify(rho)
        sigma_rb = channel_on_purification(pur, ch)
        kernel = decoders.RotatedFidelity(sigma_rb)
        f_petz = kernel.petz()
        f_twirled = kernel.twirled(QUAD_TOL)

        f_petz_sim = decoders.fe_of_decoder(rho, ch, decoders.build_petz(rho, ch))
        rows.append(
            AuditRow(
                setting,
                p,
                "thm2_petz_closed_form",
                abs(f_petz_sim - f_petz) <= THM2_TOL,
                f"|{f_petz_sim:.12g} - {f_petz:.12g}|",
            )
        )

        eps = infomeasures.epsilon_sw(sigma_rb)
        lower = 2.0 ** (-eps)
        rows.append(
            AuditRow(
                setting,
                p,
                "cor2c_chain",
                f_petz >= f_twirled - CHAIN_TOL and f_twirled >= lower - CHAIN_TOL,
                f"{f_petz:.12g} >= {f_twirled:.12g} >= {lower:.12g}",
            )
        )

        dec_sw, _ = decoders.build_sw(rho, ch)
        f_sw = decoders.fe_of_decoder(rho, ch, dec_sw)
        sigma_r = sigma_rb.marginal("R")
        w_r = matrix_power_on_support(sigma_r, -1.0)
        lower_sw = 2.0 ** infomeasures.min_petz_mi_order2(sigma_rb, w_r)
        rows.append(
            AuditRow(
                setting,
                p,
                "cor1b_chain",
                f_sw >= lower_sw - CHAIN_TOL and lower_sw >= lower - CHAIN_TOL,
                f"{f_sw:.12g} >= {lower_sw:.12g} >= {lower:.12g}",
            )
        )

        if include_sdp:
            prob, _ = optdec.reduce_problem(rho, ch)
            if prob.dim <= SDP_DIM_LIMIT:
                try:
                    report = optdec.bk_bracket_check(rho, ch, tol=BK_TOL)
                    rows.append(
                        AuditRow(
                            setting,
                            p,
                            "bk_bracket",
                            True,
                            f"{report.f_opt_squared:.12g} <= {report.f_petz:.12g}"
                            f" <= {report.f_opt:.12g}",
                        )
                    )
                except PetzlabError as exc:
                    rows.append(AuditRow(setting, p, "bk_bracket", False, str(exc)))
    return AuditReport(rows=tuple(rows))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="petzlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep_p = sub.add_parser("sweep", help="run a parameter sweep and emit CSV")
    sweep_p.add_argument("--config", required=True, help="path to a sweep config file")
    sweep_p.add_argument(
        "--timing", action="store_true", help="write measured wall times to the CSV"
    )

    audit_p = sub.add_parser("audit", help="run per-point invariant checks")
    audit_p.add_argument("--setting", required=True, help="setting name")
    audit_p.add_argument("--points", type=int, default=21, help="grid size")
    audit_p.add_argument(
        "--no-sdp", action="store_true", help="skip the optimality-bracket check"
    )

    args = parser.parse_args(argv)

    if args.command == "sweep":
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        except (OSError, ParseError, ValidationError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 3
        points = run_sweep(cfg)
        emit_csv(points, cfg.out, timing=args.timing)
        errored = [c for c in points if c.flags.startswith("error")]
        for c in errored:
            print(f"point failed: {c.setting} p={c.p} {c.series}: {c.flags}", file=sys.stderr)
        print(f"wrote {len(points)} points to {cfg.out}")
        return 0

    try:
        report = audit_invariants(args.setting, args.points, include_sdp=not args.no_sdp)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    for row in report.rows:
        status = "pass" if row.passed else "FAIL"
        p_str = "-" if math.isnan(row.p) else f"{row.p:.4g}"
        print(f"[{status}] {row.setting} p={p_str} {row.check}: {row.detail}")
    if not report.ok:
        print(f"{len(report.failures())} invariant violations", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

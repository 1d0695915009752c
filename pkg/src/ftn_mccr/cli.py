"""Sweep driver: figure presets, parameter sweeps, slope estimates, CSV/JSON output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .allocation import ALLOCATION_MODES
from .ensemble import DEFAULT_SEED, TrialConfig, default_cache, run_ensemble
from .pulse import DEFAULT_L, DEFAULT_T

__all__ = [
    "COLUMNS",
    "SWEEP_VARIABLES",
    "PRESETS",
    "Curve",
    "SweepSpec",
    "SlopeFit",
    "preset",
    "run_sweep",
    "emit",
    "format_table",
    "read_table",
    "estimate_dof_slope",
    "slope_ratio",
    "main",
]

log = logging.getLogger(__name__)

COLUMNS = (
    "sweep_var", "sweep_value", "K", "M", "N", "L", "delta", "beta", "eps", "snr_db",
    "allocation_mode", "trials", "seed", "mean_mccr_bits_per_cu", "mean_se_bits_per_s_hz",
    "std_error", "capacity_bound_bits_per_s_hz", "status",
)
INT_COLUMNS = {"K", "M", "N", "L", "trials", "seed"}
FLOAT_COLUMNS = {
    "sweep_value", "delta", "beta", "eps", "snr_db", "mean_mccr_bits_per_cu",
    "mean_se_bits_per_s_hz", "std_error", "capacity_bound_bits_per_s_hz",
}

SWEEP_VARIABLES = ("N", "snr_db", "delta", "eps")

FIG_N_VALUES = (10, 20, 50, 100, 200, 300, 400, 500)
FIG3_SNR_VALUES = tuple(float(s) for s in range(0, 31, 2))
FIG4_DELTA_VALUES = (0.5, 0.55, 0.6, 0.65, 0.67, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0)


@dataclass(frozen=True)
class Curve:
    label: str
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    base: TrialConfig
    curves: tuple = (Curve("base"),)
    capacity_bound: bool = False
    redraw: bool = False

    def validate(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        diffs = np.diff(np.asarray(self.values, dtype=float))
        if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep values must be strictly monotone")
        if not self.curves:
            raise ValueError("a sweep needs at least one curve")
        for curve in self.curves:
            bad = set(curve.overrides) - set(TrialConfig.__dataclass_fields__)
            if bad:
                raise ValueError(f"curve {curve.label!r} overrides unknown fields {sorted(bad)}")


def preset(name: str, trials: int | None = None, seed: int | None = None) -> SweepSpec:
    """Parameter sets of the four figures."""
    base = dict(T=DEFAULT_T, L=DEFAULT_L, beta=0.5, eps=1e-6)
    if trials is not None:
        base["trials"] = trials
    if seed is not None:
        base["seed"] = seed
    if name == "fig1":
        mimo, siso = dict(K=2, M=2), dict(K=1, M=1)
        return SweepSpec(
            variable="N",
            values=FIG_N_VALUES,
            base=TrialConfig(snr_db=20.0, **base),
            curves=(
                Curve("MIMO FTN optimal", dict(mimo, delta=0.67, allocation_mode="optimal")),
                Curve("MIMO FTN uniform", dict(mimo, delta=0.67, allocation_mode="uniform")),
                Curve("MIMO Nyquist", dict(mimo, delta=1.0)),
                Curve("SISO FTN", dict(siso, delta=0.67)),
                Curve("SISO Nyquist", dict(siso, delta=1.0)),
            ),
        )
    if name == "fig2":
        curves = tuple(
            Curve(f"delta={d} eps={e:g}", dict(delta=d, eps=e)) for d in (0.67, 1.0) for e in (1e-6, 1e-9)
        )
        return SweepSpec(
            variable="N", values=FIG_N_VALUES, base=TrialConfig(K=2, M=2, snr_db=10.0, **base), curves=curves
        )
    if name == "fig3":
        curves = tuple(
            Curve(f"{k}x{k} delta={d} beta={b}", dict(K=k, M=k, delta=d, beta=b))
            for (d, b) in ((0.67, 0.5), (1.0, 0.5), (0.67, 0.6))
            for k in (1, 2)
        )
        return SweepSpec(variable="snr_db", values=FIG3_SNR_VALUES, base=TrialConfig(N=100, **base), curves=curves)
    if name == "fig4":
        curves = tuple(Curve(f"N={n}", dict(N=n)) for n in (20, 200, 2000))
        return SweepSpec(
            variable="delta",
            values=FIG4_DELTA_VALUES,
            base=TrialConfig(K=2, M=2, snr_db=20.0, **base),
            curves=curves,
            capacity_bound=True,
        )
    raise ValueError(f"unknown preset {name!r}; expected fig1..fig4")


PRESETS = ("fig1", "fig2", "fig3", "fig4")


def _curve_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _coerce(variable, value):
    return int(value) if variable == "N" else float(value)


def run_sweep(spec: SweepSpec, *, workers: int = 1, cache=None) -> list[dict]:
    """One row per (curve, sweep value), curves in order, values in sweep order.

    Curves share the base seed, so curves with the same antenna counts see
    the same channel draws, unless ``spec.redraw`` asks for an independent
    seed per curve. A failing point is recorded in its row's ``status``.
    """
    spec.validate()
    cache = cache or default_cache()
    rows = []
    for index, curve in enumerate(spec.curves):
        base = spec.base.with_(**curve.overrides)
        if spec.redraw:
            base = base.with_(seed=_curve_seed(base.seed, index))
        for value in spec.values:
            row = {
                "curve": curve.label,
                "sweep_var": spec.variable,
                "sweep_value": float(value),
                "capacity_bound_bits_per_s_hz": None,
            }
            try:
                cfg = base.with_(**{spec.variable: _coerce(spec.variable, value)})
                res = run_ensemble(cfg, capacity_bound=spec.capacity_bound, cache=cache, workers=workers)
            except Exception as exc:  # recorded per row; the sweep goes on
                log.warning("curve %r at %s=%s failed: %s", curve.label, spec.variable, value, exc)
                cfg_fields = {k: getattr(base, k) for k in ("K", "M", "N", "L", "delta", "beta", "eps", "snr_db")}
                cfg_fields.update(allocation_mode=base.allocation_mode, trials=base.trials, seed=base.seed)
                if spec.variable in cfg_fields:
                    cfg_fields[spec.variable] = value
                row.update(cfg_fields)
                row.update(
                    mean_mccr_bits_per_cu=None, mean_se_bits_per_s_hz=None, std_error=None,
                    status=f"error: {exc}".replace("\n", " "),
                )
                rows.append(row)
                continue
            row.update(
                K=cfg.K, M=cfg.M, N=cfg.N, L=cfg.L, delta=cfg.delta, beta=cfg.beta, eps=cfg.eps,
                snr_db=cfg.snr_db, allocation_mode=cfg.allocation_mode, trials=res.trials_used, seed=cfg.seed,
                mean_mccr_bits_per_cu=res.mean_mccr,
                mean_se_bits_per_s_hz=res.mean_spectral_efficiency,
                std_error=res.std_error,
                capacity_bound_bits_per_s_hz=res.mean_capacity_bound,
                status="ok" if res.clamped_trials == 0 else f"ok; clamped {res.clamped_trials}",
            )
            rows.append(row)
    return rows


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def format_table(rows: Sequence[dict], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("cannot emit an empty table")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        out = []
        for row in rows:
            item = {"curve": row.get("curve")}
            for col in COLUMNS:
                val = row.get(col)
                if isinstance(val, (np.floating, np.integer)):
                    val = val.item()
                item[col] = val
            out.append(item)
        # repr of a float round-trips exactly, so json.dumps keeps full precision
        return json.dumps({"columns": list(COLUMNS), "rows": out}, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def emit(rows: Sequence[dict], path: str, fmt: str = "csv") -> None:
    """Write the table to ``path`` (``-`` for stdout)."""
    text = format_table(rows, fmt)
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write output file {path!r}: {exc.strerror or exc}") from exc


def read_table(path: str) -> list[dict]:
    """Parse a CSV written by :func:`emit` back into typed rows."""
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for col in COLUMNS:
                val = raw[col]
                if val == "":
                    row[col] = None
                elif col in INT_COLUMNS:
                    row[col] = int(val)
                elif col in FLOAT_COLUMNS:
                    row[col] = float(val)
                else:
                    row[col] = val
            rows.append(row)
    return rows


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    n_points: int
    window: tuple


def estimate_dof_slope(rows: Sequence[dict], window: tuple | None = None) -> SlopeFit:
    """Least-squares slope of mean spectral efficiency against SNR in dB.

    ``window`` is an inclusive ``(lo, hi)`` SNR range; by default the top
    10 dB of the sweep.
    """
    pts = [
        (float(r["snr_db"]), float(r["mean_se_bits_per_s_hz"]))
        for r in rows
        if r.get("mean_se_bits_per_s_hz") is not None
    ]
    if not pts:
        raise ValueError("no usable rows")
    snr = np.array([p[0] for p in pts])
    se = np.array([p[1] for p in pts])
    if window is None:
        window = (float(snr.max()) - 10.0, float(snr.max()))
    sel = (snr >= window[0] - 1e-9) & (snr <= window[1] + 1e-9)
    if np.count_nonzero(sel) < 3:
        raise ValueError(f"need at least 3 points in the SNR window {window}, got {np.count_nonzero(sel)}")
    slope, intercept = np.polyfit(snr[sel], se[sel], 1)
    return SlopeFit(float(slope), float(intercept), int(np.count_nonzero(sel)), tuple(window))


def slope_ratio(rows_a: Sequence[dict], rows_b: Sequence[dict], window: tuple | None = None) -> float:
    """Slope of curve ``a`` divided by the slope of curve ``b``."""
    return estimate_dof_slope(rows_a, window).slope / estimate_dof_slope(rows_b, window).slope


def _curve_key(row):
    return (row["K"], row["M"], row["N"], row["delta"], row["beta"], row["eps"], row["allocation_mode"])


def group_curves(rows: Sequence[dict]) -> dict:
    groups: dict = {}
    for row in rows:
        groups.setdefault(_curve_key(row), []).append(row)
    return groups


# -- command line -------------------------------------------------------------------

_CONFIG_KEYS = {
    "preset": str, "var": str, "values": str, "trials": int, "seed": lambda s: int(s, 0), "out": str,
    "format": str, "alloc": str, "capacity_bound": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "redraw": lambda s: s.strip().lower() in ("1", "true", "yes", "on"), "workers": int,
    "K": int, "M": int, "N": int, "L": int, "delta": float, "beta": float, "T": float,
    "snr_db": float, "eps": float,
}

_DEFAULTS = dict(
    preset=None, var=None, values=None, trials=1000, seed=DEFAULT_SEED, out="-", format="csv",
    alloc="optimal", capacity_bound=False, redraw=False, workers=1,
    K=2, M=2, N=500, L=DEFAULT_L, delta=0.67, beta=0.5, T=DEFAULT_T, snr_db=20.0, eps=1e-6,
)


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _CONFIG_KEYS[key](val)
    return out


def parse_values(text: str, variable: str) -> tuple:
    """``"10,20,50"`` or an inclusive range ``"0:30:2"``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(s) for s in text.split(":"))
        vals = np.arange(start, stop + 0.5 * step, step)
        vals = [round(float(v), 12) for v in vals]
    else:
        vals = [float(s) for s in text.split(",") if s.strip()]
    return tuple(_coerce(variable, v) for v in vals)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftn-mccr", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run a sweep (default command)")
    run.add_argument("--config", help="key=value file; command-line flags take precedence")
    run.add_argument("--preset", choices=PRESETS)
    run.add_argument("--var", choices=SWEEP_VARIABLES)
    run.add_argument("--values", help="comma list or inclusive start:stop:step")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=lambda s: int(s, 0))
    run.add_argument("--out", help="output path, '-' for stdout")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--alloc", choices=ALLOCATION_MODES)
    run.add_argument("--capacity-bound", dest="capacity_bound", action="store_const", const=True)
    run.add_argument("--redraw", action="store_const", const=True,
                     help="independent channel draws per curve instead of a shared seed family")
    run.add_argument("--workers", type=int)
    for name, typ in (("K", int), ("M", int), ("N", int), ("L", int), ("delta", float),
                      ("beta", float), ("T", float), ("snr-db", float), ("eps", float)):
        run.add_argument(f"--{name}", dest=name.replace("-", "_"), type=typ)
    run.add_argument("-v", "--verbose", action="store_true")

    slope = sub.add_parser("slope", help="high-SNR slopes of the curves in a CSV over snr_db")
    slope.add_argument("table")
    slope.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    return parser


def _resolve(args) -> dict:
    settings = dict(_DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def spec_from_settings(s: dict) -> SweepSpec:
    if s["preset"]:
        spec = preset(s["preset"], trials=s["trials"], seed=s["seed"])
        extra = {}
        if s["capacity_bound"]:
            extra["capacity_bound"] = True
        if s["redraw"]:
            extra["redraw"] = True
        if extra:
            spec = SweepSpec(**{**spec.__dict__, **extra})
        return spec
    if not s["var"] or not s["values"]:
        raise ValueError("either --preset or both --var and --values are required")
    base = TrialConfig(
        K=s["K"], M=s["M"], N=s["N"], L=s["L"], delta=s["delta"], beta=s["beta"], T=s["T"],
        snr_db=s["snr_db"], eps=s["eps"], trials=s["trials"], seed=s["seed"], allocation_mode=s["alloc"],
    )
    return SweepSpec(
        variable=s["var"],
        values=parse_values(s["values"], s["var"]),
        base=base,
        capacity_bound=bool(s["capacity_bound"]),
        redraw=bool(s["redraw"]),
    )


def _cmd_run(args) -> int:
    settings = _resolve(args)
    spec = spec_from_settings(settings)
    spec.validate()
    rows = run_sweep(spec, workers=settings["workers"])
    emit(rows, settings["out"], settings["format"])
    failed = [r for r in rows if not str(r["status"]).startswith("ok")]
    for r in failed:
        print(f"row failed: {r['curve']} {r['sweep_var']}={r['sweep_value']}: {r['status']}", file=sys.stderr)
    return 1 if failed else 0


def _cmd_slope(args) -> int:
    rows = read_table(args.table)
    groups = group_curves([r for r in rows if r["sweep_var"] == "snr_db"])
    if not groups:
        raise ValueError("table has no snr_db sweep")
    window = tuple(args.window) if args.window else None
    fits = {key: estimate_dof_slope(g, window) for key, g in groups.items()}
    ref_key = next((k for k in fits if k[0] == 1 and k[1] == 1 and k[3] == 1.0), next(iter(fits)))
    ref = fits[ref_key].slope
    print("K M N delta beta eps alloc slope_bits_per_s_hz_per_db ratio_to_reference")
    for key, fit in fits.items():
        print(" ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in key), f"{fit.slope:.6g}", f"{fit.slope / ref:.4f}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("run", "slope", "-h", "--help"):
        argv.insert(0, "run")
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        if args.command == "slope":
            return _cmd_slope(args)
        return _cmd_run(args)
    except (ValueError, OSError) as exc:
        print(f"ftn-mccr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

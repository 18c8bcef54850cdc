"""Command-line entry point: ``multiergodic <subcommand> ...``.

Exit codes: 0 success, 2 bad arguments or malformed input, 3 computation
error, 4 file-system error. Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, averaging, observables, rotations, weights
from .averaging import AverageSpec, Continuous, Discrete

CSV_HEADER = ("scale", "value", "target", "abs_error", "floor")
FIG_GRID = (10, 20, 50, 100, 200, 500, 1000, 2000)
PRESETS = ("fig1_golden", "fig2_liouville", "cex_degree3", "cex_resonant", "shells", "bump_growth")


class ConfigError(ValueError):
    """Input that parses as JSON but does not describe a valid experiment."""


class UsageError(Exception):
    pass


# --- JSON helpers ---------------------------------------------------------------

def read_float(v) -> float:
    """Accept JSON numbers, hex-float strings and decimal strings."""
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float.fromhex(v) if "0x" in v.lower() else float(v)
        except ValueError:
            pass
    raise ConfigError(f"expected a number, got {v!r}")


def hexf(x: float) -> str:
    return float(x).hex()


def _rotation_from(v) -> rotations.RotationVector:
    if isinstance(v, str):
        named = {
            "golden": rotations.golden,
            "liouville": rotations.liouville_truncated,
            "liouville_series": rotations.liouville_series,
        }
        if v in named:
            return named[v]()
        if "/" in v:
            q = Fraction(v)
            return rotations.rational(q.numerator, q.denominator)
        return rotations.RotationVector((read_float(v),))
    if isinstance(v, dict):
        return rotations.RotationVector(tuple(read_float(p) for p in v["phases"]), v.get("tag"))
    if isinstance(v, list):
        return rotations.RotationVector(tuple(read_float(p) for p in v))
    return rotations.RotationVector((read_float(v),))


def _observable_from(v, seed: int) -> observables.FourierObservable:
    if isinstance(v, str):
        v = {"kind": v}
    if "coeffs" in v:
        return observables.FourierObservable.from_dict(v)
    kind = v.get("kind")
    if kind == "sin":
        return observables.make_sin(int(v.get("d", 1)), int(v.get("axis", 0)))
    if kind == "weak_regularity":
        return observables.make_weak_regularity_series(int(v.get("Kmax", 100)))
    if kind == "constant":
        return observables.constant(read_float(v["value"]), int(v.get("d", 1)))
    if kind == "random_analytic":
        return observables.make_random_analytic(
            int(v["d"]), read_float(v["sigma"]), int(v["cutoff"]), int(v.get("seed", seed))
        )
    raise ConfigError(f"unknown observable {v!r}")


def spec_from_dict(data: dict, seed: int = 0) -> tuple[AverageSpec, str]:
    """Build an :class:`AverageSpec` (at a placeholder scale) and return it with its mode kind."""
    try:
        try:
            w = weights.make_weight(data.get("weight", "bump"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        obs = tuple(_observable_from(o, seed) for o in data["observables"])
        joint = rotations.make_joint([_rotation_from(r) for r in data["rotations"]])
        theta0 = data.get("theta0", [0.0])
        theta0 = [read_float(t) for t in (theta0 if isinstance(theta0, list) else [theta0])]
        kind = data.get("mode", "discrete")
        scale = data.get("scale")
        if kind == "discrete":
            mode = Discrete(int(read_float(scale)) if scale is not None else 1)
        elif kind == "continuous":
            mode = Continuous(read_float(scale) if scale is not None else 1.0,
                              int(data.get("nodes_per_period", 8)))
        else:
            raise ConfigError(f"mode must be discrete or continuous, got {kind!r}")
        return AverageSpec(w, obs, joint, theta0, mode), kind
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, AttributeError) as exc:
        raise ConfigError(str(exc)) from None


def spec_to_dict(spec: AverageSpec) -> dict:
    out = {
        "weight": spec.weight.name,
        "observables": [f.to_dict() for f in spec.observables],
        "rotations": [
            {"phases": [hexf(p) for p in r.phases], "tag": r.tag} for r in spec.joint.components
        ],
        "theta0": [hexf(t) for t in spec.theta0],
    }
    if isinstance(spec.mode, Discrete):
        out.update(mode="discrete", scale=spec.mode.N)
    else:
        out.update(mode="continuous", scale=hexf(spec.mode.T), nodes_per_period=spec.mode.nodes_per_period)
    return out


@dataclass
class ExperimentConfig:
    name: str
    spec: dict
    scales: list
    fit_models: list = field(default_factory=list)
    output: str = ""
    fit_range: list | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        try:
            cfg = cls(
                name=str(data["name"]),
                spec=dict(data["spec"]),
                scales=list(data["scales"]),
                fit_models=list(data.get("fit_models", [])),
                output=str(data.get("output") or data["name"]),
                fit_range=data.get("fit_range"),
            )
        except KeyError as exc:
            raise ConfigError(f"missing field {exc.args[0]!r}") from None
        for m in cfg.fit_models:
            if m not in ("power", "stretched_exp", "log_stretched_exp"):
                raise ConfigError(f"unknown fit model {m!r}")
        return cfg

    def to_dict(self) -> dict:
        scales = [s if isinstance(s, int) else hexf(read_float(s)) for s in self.scales]
        out = {
            "name": self.name,
            "spec": self.spec,
            "scales": scales,
            "fit_models": self.fit_models,
            "output": self.output,
        }
        if self.fit_range is not None:
            out["fit_range"] = [hexf(read_float(v)) for v in self.fit_range]
        return out


# --- output -------------------------------------------------------------------------

def fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def curve_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow([fmt(r.scale), fmt(r.value), fmt(r.target), fmt(r.abs_error), fmt(r.floor)])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in row])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: Path | None, name: str) -> str | None:
    """Write ``text`` to ``out/name`` when an output directory is set, else to stdout."""
    if out is None:
        sys.stdout.write(text)
        return None
    target = Path(out) / name
    atomic_write(target, text)
    return str(target)


# --- experiment driver ---------------------------------------------------------------

def fit_curve(results, models, fit_range=None) -> list[dict]:
    out = []
    try:
        env = analysis.envelope(results)
        if fit_range is not None:
            env = analysis.window(env, read_float(fit_range[0]), read_float(fit_range[1]))
    except analysis.FitError as exc:
        return [{"model": m, "error": str(exc)} for m in models]
    for m in models:
        try:
            fit = analysis.fit_power(env) if m == "power" else analysis.fit_stretched(env, m)
            out.append(fit.to_dict())
        except analysis.FitError as exc:
            out.append({"model": m, "error": str(exc)})
    return out


def run_experiment(cfg: ExperimentConfig, out: Path, seed: int, threads: int) -> list[str]:
    spec, _ = spec_from_dict(cfg.spec, seed)
    scales = [read_float(s) for s in cfg.scales]
    results = averaging.error_curve(spec, scales, threads=threads)
    csv_name = cfg.output if cfg.output.endswith(".csv") else cfg.output + ".csv"
    written = [emit(curve_csv(results), out, csv_name)]
    if cfg.fit_models:
        fits = fit_curve(results, cfg.fit_models, cfg.fit_range)
        written.append(emit(dumps({"name": cfg.name, "fits": fits}), out, csv_name[:-4] + ".fits.json"))
    return [w for w in written if w]


def _fig_config(name, weight, obs, rots, models) -> ExperimentConfig:
    spec = {
        "weight": weight,
        "observables": obs,
        "rotations": rots,
        "theta0": [0.1],
        "mode": "discrete",
    }
    return ExperimentConfig(name=name, spec=spec, scales=list(FIG_GRID), fit_models=models, output=name)


def preset_configs(name: str) -> list[ExperimentConfig]:
    sin = {"kind": "sin"}
    if name == "fig1_golden":
        rots = ["golden", 1.0]
        return [
            _fig_config("fig1_golden_bump", "bump", [sin, sin], rots, ["power", "stretched_exp"]),
            _fig_config("fig1_golden_uniform", "uniform", [sin, sin], rots, ["power", "stretched_exp"]),
        ]
    if name == "fig2_liouville":
        obs = [{"kind": "weak_regularity", "Kmax": 100}, sin]
        rots = ["liouville", 1.0]
        return [
            _fig_config("fig2_liouville_bump", "bump", obs, rots, ["power", "stretched_exp"]),
            _fig_config("fig2_liouville_uniform", "uniform", obs, rots, ["power", "stretched_exp"]),
        ]
    return []


def run_preset(name: str, out: Path, seed: int, threads: int) -> list[str]:
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    out = Path(out)
    cfgs = preset_configs(name)
    if cfgs:
        written = []
        for cfg in cfgs:
            written += run_experiment(cfg, out, seed, threads)
        return written
    if name == "cex_degree3":
        rows, curve = [], []
        ups = 4 / math.pi
        for n in range(5, 201):
            T = n / math.pi
            H = averaging.counterexample_H(T)
            ref = abs(math.sin(8 * n)) / (4 * math.pi * ups * n * (ups**2 * n * n - 1))
            rows.append((n, T, H, abs(H), ref))
            curve.append((T, abs(H)))
        fit = analysis.fit_power(analysis.envelope(curve))
        return [
            emit(table_csv(("n", "T", "H", "abs_H", "closed_form_abs"), rows), out, "cex_degree3.csv"),
            emit(dumps({"name": "cex_degree3", "fits": [fit.to_dict()]}), out, "cex_degree3.fits.json"),
        ]
    if name == "cex_resonant":
        phi = rotations.golden().phases[0]
        results = []
        for T in np.geomspace(10, 1e4, 31):
            v = averaging.resonant_H(float(T), phi)
            results.append(averaging.AverageResult(v, 0.0, abs(v), float(T), 0.0))
        rows = [(r.scale, r.value, abs(r.value - 0.5)) for r in results]
        return [
            emit(curve_csv(results), out, "cex_resonant.csv"),
            emit(table_csv(("scale", "value", "distance_to_half"), rows), out, "cex_resonant_limit.csv"),
        ]
    if name == "shells":
        rows = [(nu, rotations.shell_count(2, nu)) for nu in range(1, 21)]
        return [emit(table_csv(("nu", "count"), rows), out, "shells.csv")]
    rows = []
    for n in range(weights.MAX_DERIVATIVE_ORDER + 1):
        l1 = weights.bump_derivative_l1(n)
        ratio = math.log(l1) / (n * math.log(n)) if n >= 2 else ""
        rows.append((n, l1, ratio))
    return [emit(table_csv(("n", "l1_norm", "log_ratio"), rows), out, "bump_growth.csv")]


# --- subcommands ---------------------------------------------------------------------

def _load_json(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None


def _scales_arg(text: str | None):
    if text is None:
        return None
    return [read_float(v) for v in text.split(",") if v.strip()]


def cmd_average(args):
    spec, _ = spec_from_dict(_load_json(args.spec), args.seed)
    if args.scale is not None:
        spec = spec.at(read_float(args.scale))
    res = averaging.average(spec)
    emit(dumps(res.to_dict()), args.out, "average.json")


def cmd_sweep(args):
    data = _load_json(args.spec)
    if "spec" in data and "scales" in data:
        cfg = ExperimentConfig.from_dict(data)
        spec_data, scales = cfg.spec, cfg.scales
    else:
        spec_data, scales = data, data.get("scales")
    scales = _scales_arg(args.scales) or [read_float(s) for s in (scales or FIG_GRID)]
    spec, _ = spec_from_dict(spec_data, args.seed)
    results = averaging.error_curve(spec, scales, threads=args.threads)
    emit(curve_csv(results), args.out, "sweep.csv")


def _read_curve(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"scale", "abs_error"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: CSV needs scale and abs_error columns")
        try:
            return [
                (float(r["scale"]), float(r["abs_error"]), float(r.get("floor") or 0.0)) for r in reader
            ]
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def cmd_fit(args):
    curve = _read_curve(args.csv)
    models = [m.strip() for m in args.model.split(",")]
    for m in models:
        if m not in ("power", "stretched_exp", "log_stretched_exp"):
            raise UsageError(f"unknown model {m!r}")
    if not args.no_envelope:
        curve = analysis.envelope(curve)
    if args.range:
        curve = analysis.window(curve, args.range[0], args.range[1])
    fits = [
        (analysis.fit_power(curve) if m == "power" else analysis.fit_stretched(curve, m)).to_dict()
        for m in models
    ]
    emit(dumps(fits[0] if len(fits) == 1 else fits), args.out, "fit.json")


def _grid_arg(text: str):
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n)).tolist()
    if text.startswith("geom"):
        lo, hi, n = text[4:].strip("()").split(",")
        return np.geomspace(float(lo), float(hi), int(n)).tolist()
    return [read_float(v) for v in text.split(",")]


def cmd_audit(args):
    if args.condition == "boundedness":
        cutoffs = [int(c) for c in _grid_arg(args.grid)]
        audit = analysis.audit_boundedness(
            args.delta, args.tilde, args.m, args.d, cutoffs, eta=args.eta
        )
    else:
        audit = analysis.audit_truncated_smallness(
            args.tilde, args.delta, args.phi, len(args.tilde), _grid_arg(args.grid),
            d=None if args.eta is not None else args.d, eta=args.eta,
        )
    emit(dumps(audit.to_dict()), args.out, "audit.json")


def cmd_divisors(args):
    joint = rotations.make_joint([_rotation_from(_maybe_json(r)) for r in args.rho])
    if args.tau is not None:
        scan = rotations.diophantine_witness(joint, args.K, args.tau, args.mode)
    else:
        scan = rotations.smallest_divisor(joint, args.K, args.mode)
    emit(dumps(scan.to_dict()), args.out, "divisors.json")


def _maybe_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_shells(args):
    rows = [(nu, rotations.shell_count(args.eta, nu)) for nu in range(args.min_nu, args.max_nu + 1)]
    emit(table_csv(("nu", "count"), rows), args.out, "shells.csv")


def cmd_counterexample(args):
    Ts = _grid_arg(args.T)
    if args.resonant is not None:
        rho = read_float(args.resonant) if args.resonant != "golden" else rotations.golden().phases[0]
        rows = [(T, averaging.resonant_H(T, rho)) for T in Ts]
    else:
        rows = [(T, averaging.counterexample_H(T)) for T in Ts]
    emit(table_csv(("T", "H"), rows), args.out, "counterexample.csv")


def cmd_preset(args):
    out = args.out if args.out is not None else Path(".")
    written = run_preset(args.name, out, args.seed, args.threads)
    sys.stdout.write(dumps({"preset": args.name, "files": written}))


def cmd_run(args):
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    out = args.out if args.out is not None else Path(".")
    written = run_experiment(cfg, out, args.seed, args.threads)
    sys.stdout.write(dumps({"config": cfg.name, "files": written}))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="multiergodic", description="Weighted multiple ergodic averages on tori.")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
    p.add_argument("--seed", type=int, default=0, help="seed for random observables without one")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps (0 = auto)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("average", help="one average from a JSON spec")
    s.add_argument("spec")
    s.add_argument("--scale", help="override N or T")
    s.set_defaults(func=cmd_average)

    s = sub.add_parser("sweep", help="error curve as CSV: scale,value,target,abs_error,floor")
    s.add_argument("spec", help="JSON spec or experiment config")
    s.add_argument("--scales", help="comma-separated scales (overrides the file)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", help="rate fit of a sweep CSV")
    s.add_argument("csv")
    s.add_argument("--model", default="power",
                   help="comma-separated: power, stretched_exp, log_stretched_exp")
    s.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"),
                   help="restrict to scales in [LO, HI] after the envelope")
    s.add_argument("--no-envelope", action="store_true", help="fit raw points")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser(
        "audit",
        help="partial-sum audit of a balancing condition",
        description=(
            f"Verdicts: plateauing when the last relative increment is below {analysis.PLATEAU_RTOL:g} "
            f"(boundedness) or the tail's log-log slope steepens by {analysis.STEEPENING_RATIO}x "
            "across the grid (smallness); diverging when increments grow or the tail does not shrink. "
            "Growth functions are family:param with family power, exp, double_exp, log_power or "
            "analytic (exp(2 pi sigma y))."
        ),
    )
    s.add_argument("condition", choices=("boundedness", "smallness"))
    s.add_argument("--delta", required=True, help="approximation function, e.g. power:2.5")
    s.add_argument("--tilde", action="append", required=True,
                   help="coefficient decay per factor (repeat for each factor)")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--eta", type=int, default=None, help="use the eta-weighted lattice instead of Z^d")
    s.add_argument("--phi", default="sqrt", help="adaptive function for smallness audits")
    s.add_argument("--grid", required=True,
                   help="cutoffs or x values: a,b,c  or  lo:hi:n  or  geom(lo,hi,n)")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("divisors", help="smallest small divisor over a 1-norm ball")
    s.add_argument("--rho", action="append", required=True,
                   help="rotation: number, golden, liouville, p/q or JSON list (repeat per factor)")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--mode", choices=("discrete", "continuous"), default="discrete")
    s.add_argument("--tau", type=float, default=None, help="report the Diophantine witness for tau")
    s.set_defaults(func=cmd_divisors)

    s = sub.add_parser("shells", help="eta-lattice shell counts as CSV nu,count")
    s.add_argument("--eta", type=int, default=2)
    s.add_argument("--min-nu", type=int, default=1)
    s.add_argument("--max-nu", type=int, default=20)
    s.set_defaults(func=cmd_shells)

    s = sub.add_parser("preset", help="reproduce a stored experiment")
    s.add_argument("name", choices=PRESETS)
    s.set_defaults(func=cmd_preset)

    s = sub.add_parser("counterexample", help="closed-form continuous averages")
    s.add_argument("--T", required=True, help="T values: a,b,c  or  lo:hi:n  or  geom(lo,hi,n)")
    s.add_argument("--resonant", default=None, help="rho for the resonant case (number or golden)")
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("run", help="run an experiment config")
    s.add_argument("config")
    s.set_defaults(func=cmd_run)
    return p


def _fail(code: int, kind: str, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except (UsageError, ConfigError) as exc:
        return _fail(2, "usage", exc)
    except OSError as exc:
        return _fail(4, "io", exc)
    except (ValueError, ArithmeticError, RuntimeError, analysis.FitError) as exc:
        return _fail(3, "computation", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())

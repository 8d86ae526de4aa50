"""``nclab`` command line: ``verify``, ``evolve`` and ``calibrate``.

Exit codes: 0 success, 1 suite failure, 2 configuration error, 3 numerical
blow-up or step-size collapse during ``evolve``.
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import suites as suite_mod
from .core import ThetaData
from .doi import function_names, scalar_function
from .evolve import (
    EvolutionError,
    StepConfig,
    check_persistence,
    heat_symbol,
    nls_ratio_bound,
    prepare_navier_stokes_data,
    solve_allen_cahn,
    solve_navier_stokes,
    solve_nls,
    symbol_linf,
)
from .lp import BesovParams, build_partition
from .sampling import grid_units, random_divergence_free, random_symbol
from .symbol import Grid, quantize, save_array, save_symbol

REPORT_VERSION = 1
EQUATIONS = ("allen_cahn", "nls", "navier_stokes", "none")
METHODS = ("etd1", "etd2rk", "strang")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    theta0: float = 1.0
    N: int = 64
    M: int = 64
    T_max: float = 8.0
    seed: int = 0
    equation: str = "none"
    function: str = "allen_cahn"
    coeffs: list = field(default_factory=list)
    mu: float = 1.0
    p: int = 3
    horizon: float = 1.0
    dt: float = 0.01
    method: str = "etd1"
    amplitude: float = 0.5
    suites: list = field(default_factory=lambda: list(suite_mod.SUITES))
    out: str = "nclab-out"
    snapshot_every: int = 0
    calibration: str = ""

    def validate(self):
        errs = []

        def need(cond, name, msg):
            if not cond:
                errs.append(f"{name}: {msg} (got {getattr(self, name)!r})")

        for name in ("theta0", "T_max", "horizon", "dt", "amplitude"):
            need(self.__dict__[name] > 0, name, "must be > 0")
        need(4 <= self.N <= 512, "N", "must lie in [4, 512]")
        need(8 <= self.M <= 256 and self.M % 2 == 0, "M", "must be even and lie in [8, 256]")
        need(self.seed >= 0, "seed", "must be >= 0")
        need(self.snapshot_every >= 0, "snapshot_every", "must be >= 0")
        need(self.equation in EQUATIONS, "equation", f"must be one of {', '.join(EQUATIONS)}")
        need(self.method in METHODS, "method", f"must be one of {', '.join(METHODS)}")
        need(self.function in function_names(), "function", f"must be one of {', '.join(function_names())}")
        need(self.p >= 3 and self.p % 2 == 1, "p", "must be an odd integer >= 3")
        need(1e-6 <= self.dt <= self.horizon, "dt", "must lie in [1e-6, horizon]")
        unknown = [s for s in self.suites if s not in suite_mod.SUITES]
        need(not unknown, "suites", f"unknown suite(s) {unknown}; known: {', '.join(suite_mod.SUITES)}")
        need(len(set(self.suites)) == len(self.suites), "suites", "must not repeat a suite")
        if errs:
            raise ConfigError("; ".join(errs))
        return self

    def physics(self):
        """Fields that determine results (output paths excluded)."""
        d = asdict(self)
        for k in ("out", "calibration"):
            d.pop(k)
        return d


_TYPES = {f.name: f.type.__name__ for f in fields(ExperimentConfig)}


def _coerce(name, value):
    kind = _TYPES[name]
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected {kind}, got a boolean")
    if kind == "float":
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        v = float(value)
        if not np.isfinite(v):
            raise ConfigError(f"{name}: must be finite")
        return v
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{name}: expected a list, got {value!r}")
        if name == "coeffs":
            return [_coerce_number(name, v) for v in value]
        if not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{name}: expected a list of strings")
        return list(value)
    raise ConfigError(f"{name}: unsupported field type")


def _coerce_number(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected numbers, got {v!r}")
    return float(v)


def config_from_mapping(data):
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table/object at top level")
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in data.items()})
    return cfg.validate()


def _toml_loads(text):
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def load_config(path):
    """Parse a TOML (or ``.json``) file into a validated :class:`ExperimentConfig`."""
    if path is None:
        return ExperimentConfig().validate()
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = _toml_loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return config_from_mapping(data)


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# verify / calibrate
# ---------------------------------------------------------------------------


def _eps_table(cfg):
    if cfg.calibration:
        try:
            data = json.loads(Path(cfg.calibration).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"calibration: cannot load {cfg.calibration}: {exc}") from None
        if abs(data.get("theta0", -1) - cfg.theta0) > 1e-12:
            raise ConfigError(f"calibration: table is for theta0={data.get('theta0')}, config has {cfg.theta0}")
        return {int(r["N"]): float(r["eps"]) for r in data["rows"]}
    if cfg.theta0 == 1.0:
        return dict(suite_mod.CALIBRATED_EPS)
    return {}


def run_verify(cfg, out=None, echo=print):
    """Run the selected suites; returns ``(exit_code, report)``."""
    ctx = suite_mod.SuiteContext(cfg.theta0, cfg.N, cfg.M, cfg.T_max, cfg.seed, _eps_table(cfg))
    results = []
    for name in cfg.suites:
        res = suite_mod.run_suite(name, ctx)
        echo(res.line())
        d = res.as_dict()
        if out is not None:
            _write(Path(out) / "suites" / f"{name}.json", dumps(d))
        results.append(d)
    ok = all(r["pass"] for r in results)
    report = {"report_version": REPORT_VERSION, "config": cfg.physics(), "suites": results, "pass": ok}
    if out is not None:
        _write(Path(out) / "report.json", dumps(report))
    return (EXIT_OK if ok else EXIT_FAIL), report


def run_calibrate(cfg, out=None, echo=print):
    rows = suite_mod.calibrate(cfg.theta0)
    for r in rows:
        echo(f"N={r['N']:4d}  residual={r['residual']:.3e}  eps={r['eps']:.1e}")
    table = {
        "report_version": REPORT_VERSION,
        "theta0": cfg.theta0,
        "safety": suite_mod.CALIBRATION_SAFETY,
        "rows": rows,
    }
    if out is not None:
        _write(Path(out) / "calibration.json", dumps(table))
    return EXIT_OK, table


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------


def _initial_data(cfg, grid, rng):
    units = grid_units(grid)
    th = grid.theta
    if cfg.equation == "allen_cahn":
        f = random_symbol(grid, rng, support=4.0, spread=2.0, units=units)
        return f * (cfg.amplitude / symbol_linf(f, cfg.N))
    if cfg.equation == "nls":
        f = random_symbol(grid, rng, support=8.0, gauss=0.8, spread=2.0, hermitian=False, units=units)
        U = quantize(f, cfg.N, check=False).entries
        return U * (cfg.amplitude / (np.sqrt(th.trace_unit) * np.linalg.norm(U)))
    u = random_divergence_free(grid, rng, support=8.0, spread=2.0)
    u0 = prepare_navier_stokes_data(u, cfg.N)
    return u0 * (cfg.amplitude / (np.sqrt(th.trace_unit) * np.linalg.norm(u0)))


def _solver(cfg, grid, u0):
    th = grid.theta
    if cfg.equation == "allen_cahn":
        part = build_partition(grid)
        F = scalar_function(cfg.function, cfg.coeffs or None)
        besov = (BesovParams(1.0, np.inf, np.inf),)
        return lambda T, step: solve_allen_cahn(F, u0, T, step, part, cfg.N, besov=besov)
    if cfg.equation == "nls":
        return lambda T, step: solve_nls(cfg.mu, cfg.p, u0, T, step, th, cfg.N)
    return lambda T, step: solve_navier_stokes(u0, T, step, th, cfg.N)


def _summary_extras(cfg, rec, u0, theta):
    extra = {}
    if cfg.equation == "nls":
        l2 = rec.series("l2")
        extra["conservation_drift"] = float(np.max(np.abs(l2 - l2[0])) / l2[0])
        extra["ratio_bound"] = nls_ratio_bound(cfg.mu, cfg.p, float(l2[0]), theta)
    elif cfg.equation == "navier_stokes":
        e = rec.series("energy")
        inc = float(np.max(np.diff(e))) if e.size > 1 else 0.0
        extra["max_energy_increment"] = inc
        extra["energy_monotone"] = bool(inc <= 1e-8)
        for k in ("divergence_residual", "hermitian_residual", "advection_orthogonality"):
            extra[f"max_{k}"] = float(np.max(rec.series(k)))
    elif cfg.equation == "allen_cahn" and cfg.function == "zero":
        err = 0.0
        for t, f in rec.states:
            err = max(err, float(np.max(np.abs(f.samples - heat_symbol(u0, t).samples))))
        extra["heat_max_error"] = err
    return extra


def _write_snapshots(out, rec):
    base = Path(out) / "snapshots"
    base.mkdir(parents=True, exist_ok=True)
    for k, (t, f) in enumerate(rec.states):
        path = base / f"state_{k:05d}"
        save_symbol(path, f)
        meta = json.loads(path.with_suffix(".json").read_text())
        meta["t"] = t
        path.with_suffix(".json").write_text(dumps(meta))


def run_evolve(cfg, out=None, echo=print):
    """Solve the configured equation to ``horizon`` and ``2 * horizon``; returns ``(exit_code, summary)``."""
    if cfg.equation == "none":
        raise ConfigError("equation: evolve needs one of allen_cahn, nls, navier_stokes (got 'none')")
    th = ThetaData(cfg.theta0)
    grid = Grid(cfg.T_max, cfg.M, th)
    rng = np.random.default_rng(cfg.seed)
    u0 = _initial_data(cfg, grid, rng)
    method = "strang" if cfg.equation == "nls" else cfg.method
    if method == "strang" and cfg.equation != "nls":
        raise ConfigError(f"method: strang splitting is only available for nls (equation={cfg.equation})")
    step = StepConfig(dt=cfg.dt, method=method, snapshot_every=cfg.snapshot_every)
    solve = _solver(cfg, grid, u0)
    code = EXIT_OK
    try:
        verdict, runs = check_persistence(solve, cfg.horizon, step)
        rec = runs[0][2]
    except EvolutionError as exc:
        rec = exc.record
        verdict, runs = "NOT_GLOBAL", []
        code = EXIT_BLOWUP
    if rec.status != "ok":
        code = EXIT_BLOWUP
    summary = {
        "report_version": REPORT_VERSION,
        "config": cfg.physics(),
        "status": rec.status,
        "message": rec.message,
        "steps": len(rec.times) - 1,
        "final": {"t": rec.times[-1], **rec.rows[-1]},
        "initial": {"t": rec.times[0], **rec.rows[0]},
        "persistence": {
            "verdict": verdict,
            "runs": [
                {
                    "horizon": r.times[-1],
                    "verdict": v.verdict,
                    "sup_ratio": v.sup_ratio,
                    "duhamel_bound": v.duhamel_bound,
                    "min_dt": v.min_dt,
                    "dt_collapsed": bool(c),
                }
                for v, c, r in runs
            ],
        },
    }
    if rec.rows and code == EXIT_OK:
        summary.update(_summary_extras(cfg, rec, u0, th))
    summary = suite_mod._clean(summary)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        rec.to_csv(out / "trajectory.csv")
        _write(out / "summary.json", dumps(summary))
        if cfg.snapshot_every and rec.states:
            _write_snapshots(out, rec)
        if cfg.equation != "allen_cahn" and cfg.snapshot_every:
            save_array(out / "initial_state", np.asarray(u0), {"kind": "matrix", "theta0": cfg.theta0})
    echo(f"{cfg.equation}: status={rec.status} steps={summary['steps']} persistence={verdict}")
    return code, summary


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="nclab", description="Moyal-plane operator lab: invariant suites and evolution runs.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("verify", "run invariant suites and write report.json"),
        ("evolve", "run the configured evolution equation"),
        ("calibrate", "measure the CCR truncation residual table"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", metavar="PATH", help="TOML or JSON configuration file")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config 'out')")
        p.add_argument("--seed", type=int, help="rng seed (overrides config 'seed')")
        if name == "verify":
            p.add_argument("--suite", action="append", metavar="NAME",
                           help="suite to run (repeatable); replaces the config list")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "suite", None):
            cfg.suites = list(args.suite)
        cfg.validate()
        out = args.out or cfg.out
        if args.command == "verify":
            code, _ = run_verify(cfg, out)
        elif args.command == "evolve":
            code, _ = run_evolve(cfg, out)
        else:
            code, _ = run_calibrate(cfg, out)
    except ConfigError as exc:
        print(f"nclab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())

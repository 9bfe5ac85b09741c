"""Command-line entry point: ``tmsv effective|evolve|steady|fig3|validate|sweep``.

Every command reads a JSON config (with ``"units": "angular_per_us"``),
writes its tables as CSV and a ``report.json`` into ``--out``. Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 failed validation.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, _core
from .dynamics import (
    DimensionTooLargeError,
    EvolveOptions,
    IntegrationDivergedError,
    NotConvergedError,
    effective_model,
    evolve,
    steady_state,
)
from .fockspace import CompositeSpace, DensityMatrix, Ket, basis
from .model import (
    CircuitParams,
    EffectiveParams,
    InconsistentSymmetryError,
    NegativeDriveFrequencyError,
    UnsqueezableConfigurationError,
    circuit_to_params,
    drive_frequencies,
    effective_params,
)
from .observables import COLUMNS, ObservableSet, epr_variance, fidelity, ideal_variance, populations
from .squeezing import CutoffInsufficientError, select_cutoff, tail_mass, target_state
from . import validation

log = logging.getLogger("tmsv")

UNITS = "angular_per_us"
CSV_TAG = "dissipative-tmsv v1"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
DEFAULT_PAIRS = ((20.0, 0.0), (20.0, 2.0), (20.0, 20.0))
MIN_CUTOFF = 2


class ConfigError(ValueError):
    pass


# -- configuration ------------------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    effective: EffectiveParams
    gamma_r: float
    gamma_phi: float
    kappa: tuple[float, float]
    cutoff: int | None = None
    dt: float | None = None
    t_final: float = 1.0
    sample_stride: int = 10
    trace_tolerance: float = 1e-8
    initial_state: Any = "vacuum_gg"
    steady: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    system: dict = field(default_factory=dict)
    circuit: CircuitParams | None = None
    base_dir: Path = Path(".")

    def space_cutoff(self, ratio: float | None = None) -> tuple[int, float]:
        r = self.effective.ratio if ratio is None else ratio
        n = self.cutoff if self.cutoff is not None else select_cutoff(r, minimum=MIN_CUTOFF)
        return n, tail_mass(r, n)


def _number(d: dict, key: str, default=None, *, positive=False, nonneg=False) -> float | None:
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key}: expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{key}: must be positive")
    if nonneg and v < 0:
        raise ConfigError(f"{key}: must be non-negative")
    return float(v)


def _rate_pair(d: dict, key: str) -> tuple[float, float]:
    v = d.get(key, 0.0)
    vals = v if isinstance(v, (list, tuple)) else [v, v]
    if len(vals) != 2:
        raise ConfigError(f"{key}: expected a number or a pair")
    out = tuple(_number({key: x}, key, nonneg=True) for x in vals)
    return out  # type: ignore[return-value]


def _effective_from(raw: dict) -> tuple[EffectiveParams, dict]:
    system = raw.get("system", {})
    if "theta1" in raw:
        theta1 = _number(raw, "theta1", positive=True)
        if "theta2" in raw:
            theta2 = _number(raw, "theta2", nonneg=True)
        elif "ratio" in raw:
            theta2 = _number(raw, "ratio", nonneg=True) * theta1
        else:
            raise ConfigError("theta1 needs theta2 or ratio")
        return EffectiveParams.from_thetas(theta1, theta2), system
    if "g" in system and ("xi" in system or "xi1" in system):
        g = system["g"]
        g = np.full((2, 2), float(g)) if np.isscalar(g) else np.asarray(g, dtype=float)
        if "xi" in system:
            xi = np.asarray(system["xi"], dtype=float)
        else:
            x1 = _number(system, "xi1", nonneg=True)
            x2 = _number(system, "xi2", 0.0, nonneg=True)
            xi = np.array([[x1, x2], [x2, x1]])
        if xi.shape != (2, 2) or g.shape != (2, 2):
            raise ConfigError("system.g and system.xi must be scalars or 2x2")
        if np.any(xi < 0) or np.any(xi >= 1):
            raise ConfigError("system.xi entries must lie in [0, 1)")
        return effective_params(g, xi), system
    raise ConfigError("give theta1 with theta2 or ratio, or system.g with system.xi (or xi1/xi2)")


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw, overrides, base_dir=path.parent)


def parse_config(raw: dict, overrides: dict | None = None, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "units" not in raw:
        raise ConfigError(f'units: required field missing (use "{UNITS}")')
    if raw["units"] != UNITS:
        raise ConfigError(f'units: unsupported value {raw["units"]!r} (only "{UNITS}")')
    eff, system = _effective_from(raw)
    rates = raw.get("rates", {})
    gamma = _number(rates, "gamma", None, nonneg=True)
    gamma_r = _number(rates, "gamma_r", gamma if gamma is not None else 0.0, nonneg=True)
    gamma_phi = _number(rates, "gamma_phi", gamma if gamma is not None else 0.0, nonneg=True)
    kappa = _rate_pair(rates, "kappa")
    integ = dict(raw.get("integrator", {}))
    integ.update({k: v for k, v in (overrides or {}).items() if v is not None and k != "cutoff"})
    cutoff = raw.get("cutoff")
    if overrides and overrides.get("cutoff") is not None:
        cutoff = overrides["cutoff"]
    if cutoff is not None and (not isinstance(cutoff, int) or isinstance(cutoff, bool) or cutoff < 1):
        raise ConfigError("cutoff: expected an integer >= 1")
    stride = integ.get("sample_stride", 10)
    if not isinstance(stride, int) or stride < 1:
        raise ConfigError("integrator.sample_stride: expected an integer >= 1")
    circuit = None
    if "circuit" in raw:
        c = raw["circuit"]
        try:
            circuit = CircuitParams(capacitance_pf=c["capacitance_pf"], inductance_ph=c["inductance_ph"],
                                    mutual_ph=c["mutual_ph"], persistent_current_na=c["persistent_current_na"],
                                    epsilon=c.get("epsilon", 0.0))
        except KeyError as exc:
            raise ConfigError(f"circuit: missing field {exc.args[0]}") from None
    return RunConfig(
        raw=raw, effective=eff, gamma_r=gamma_r, gamma_phi=gamma_phi, kappa=kappa, cutoff=cutoff,
        dt=_number(integ, "dt", None, positive=True),
        t_final=_number(integ, "t_final", 1.0, nonneg=True),
        sample_stride=stride,
        trace_tolerance=_number(integ, "trace_tolerance", 1e-8, positive=True),
        initial_state=raw.get("initial_state", "vacuum_gg"),
        steady=dict(raw.get("steady", {})),
        experiment=dict(raw.get("experiment", {})),
        system=system, circuit=circuit, base_dir=base_dir,
    )


def initial_state(selector, space: CompositeSpace, base_dir: Path = Path(".")) -> DensityMatrix:
    if selector == "vacuum_gg":
        return basis(space, (0, 0, 0, 0)).dm()
    if isinstance(selector, dict) and "fock" in selector:
        n1, n2 = selector["fock"]
        if not (0 <= n1 <= space.factors[2].cutoff and 0 <= n2 <= space.factors[3].cutoff):
            raise ConfigError(f"initial_state.fock {selector['fock']} outside the cutoff")
        return basis(space, (0, 0, int(n1), int(n2))).dm()
    if isinstance(selector, dict) and "file" in selector:
        p = Path(selector["file"])
        p = p if p.is_absolute() else base_dir / p
        data = np.asarray(json.loads(p.read_text()), dtype=float)
        if data.shape != (space.dim, 2):
            raise ConfigError(f"initial state file needs {space.dim} [re, im] pairs, got shape {data.shape}")
        ket = Ket(space, data[:, 0] + 1j * data[:, 1])
        if ket.norm() == 0:
            raise ConfigError("initial state vector is zero")
        return ket.normalized().dm()
    raise ConfigError(f"initial_state: unknown selector {selector!r}")


# -- output -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


class CsvWriter:
    """CSV with a versioned header comment; rows are flushed as written."""

    def __init__(self, path: Path, columns):
        self.path = path
        self.columns = list(columns)
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._fh.write(f"# {CSV_TAG}, columns: {', '.join(self.columns)}\n")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.columns)

    def row(self, values):
        self._w.writerow([_fmt(v) for v in values])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _effective_dict(eff: EffectiveParams) -> dict:
    d = asdict(eff)
    d["ratio"] = eff.ratio
    d["ideal_V"] = ideal_variance(eff.zeta)
    return d


# -- experiments --------------------------------------------------------------

def _evolve_curve(eff: EffectiveParams, cutoff: int, gamma_r: float, gamma_phi: float, kappa,
                  rho_sel, base_dir, dt, t_final, stride, trace_tol, on_sample=None):
    space = CompositeSpace.canonical(cutoff)
    model = effective_model(eff, space, gamma_r, gamma_phi, kappa)
    rho0 = initial_state(rho_sel, space, base_dir)
    try:
        target = target_state(eff.zeta, space)
    except CutoffInsufficientError as exc:
        warnings.warn(f"no fidelity column: {exc}")
        target = None
    opts = EvolveOptions(t_final=t_final, dt=dt, sample_stride=stride, trace_tolerance=trace_tol)
    return evolve(model, rho0, opts, recorder=ObservableSet(space, target), on_sample=on_sample)


def _settled_time(times: np.ndarray, V: np.ndarray, rel: float = 0.05) -> float | None:
    """First time after which V stays within ``rel`` of its final value."""
    inside = np.abs(V - V[-1]) <= rel * abs(V[-1])
    out = np.flatnonzero(~inside)
    if out.size == 0:
        return float(times[0])
    if out[-1] + 1 >= len(times):
        return None
    return float(times[out[-1] + 1])


def cmd_effective(cfg: RunConfig, out: Path) -> dict:
    eff = cfg.effective
    res: dict[str, Any] = {}
    if cfg.circuit is not None:
        derived = circuit_to_params(cfg.circuit)
        res["circuit"] = {"nu_per_us": derived.nu, "nu_ghz": derived.nu_ghz, "g_per_us": derived.g}
    sysd = cfg.system
    if "g" in sysd:
        res["g"] = sysd["g"]
    if "delta" in sysd and "nu" in sysd:
        nu = sysd["nu"] if isinstance(sysd["nu"], list) else [sysd["nu"]] * 2
        res["drive_plan"] = drive_frequencies(float(sysd["delta"]), nu).omega_d
    if eff.theta2 == 0:
        warnings.warn("no squeezing: theta2 = 0 gives zeta = 0 and V = 2")
    n, tail = cfg.space_cutoff()
    res.update(effective=_effective_dict(eff), recommended_cutoff=select_cutoff(eff.ratio, minimum=MIN_CUTOFF),
               cutoff=n, tail_mass=tail)
    for k, v in res["effective"].items():
        print(f"{k:>10s} = {v:.6g}")
    print(f"{'cutoff':>10s} = {n} (tail mass {tail:.2e})")
    return res


def cmd_evolve(cfg: RunConfig, out: Path) -> dict:
    n, tail = cfg.space_cutoff()
    cols = ["t_us", *COLUMNS, "gamma_t"]
    with CsvWriter(out / "evolve.csv", cols) as w:
        def sink(t, rec):
            w.row([t, *(rec[c] for c in COLUMNS), cfg.gamma_r * t])
        traj = _evolve_curve(cfg.effective, n, cfg.gamma_r, cfg.gamma_phi, cfg.kappa, cfg.initial_state,
                             cfg.base_dir, cfg.dt, cfg.t_final, cfg.sample_stride, cfg.trace_tolerance, sink)
    V = traj.records["V"]
    return {
        "cutoff": n, "tail_mass": tail, "dt": traj.dt, "samples": len(traj),
        "final": {k: float(v[-1]) for k, v in traj.records.items()},
        "ideal_V": ideal_variance(cfg.effective.zeta),
        "settle_time_us": _settled_time(traj.times, V),
        "trace_drift": traj.trace_drift,
        "min_eigenvalue": traj.final_state.min_eigenvalue(),
    }


def _steady_point(eff: EffectiveParams, cutoff: int, gamma_r, gamma_phi, kappa, steady: dict,
                  dt, t_final, trace_tol, rho_sel="vacuum_gg", base_dir=Path(".")) -> dict:
    space = CompositeSpace.canonical(cutoff)
    model = effective_model(eff, space, gamma_r, gamma_phi, kappa)
    method = steady.get("method", "evolve")
    if method == "direct":
        ss = steady_state(model, "direct")
    else:
        opts = EvolveOptions(t_final=t_final, dt=dt, trace_tolerance=trace_tol,
                             convergence_tolerance=float(steady.get("convergence_tolerance", 1e-6)))
        ss = steady_state(model, "evolve", opts, rho0=initial_state(rho_sel, space, base_dir))
    rho = ss.state
    try:
        fid = fidelity(rho, target_state(eff.zeta, space))
    except CutoffInsufficientError as exc:
        warnings.warn(f"fidelity not reported: {exc}")
        fid = float("nan")
    pops = populations(rho)
    return {"method": ss.method, "V": epr_variance(rho), "fidelity": fid, **pops,
            "residual": ss.residual, "time_us": ss.time, "nullity": ss.nullity,
            "smallest_singular_value": ss.smallest_singular_value,
            "min_eigenvalue": rho.min_eigenvalue()}


def cmd_steady(cfg: RunConfig, out: Path) -> dict:
    n, tail = cfg.space_cutoff()
    res = _steady_point(cfg.effective, n, cfg.gamma_r, cfg.gamma_phi, cfg.kappa, cfg.steady,
                        cfg.dt, cfg.t_final, cfg.trace_tolerance, cfg.initial_state, cfg.base_dir)
    res.update(cutoff=n, tail_mass=tail, ideal_V=ideal_variance(cfg.effective.zeta))
    print(f"V = {res['V']:.6f} (ideal {res['ideal_V']:.6f}), fidelity = {res['fidelity']:.6f}")
    return res


def _pool(workers: int):
    if workers <= 1:
        return None
    return cf.ProcessPoolExecutor(max_workers=workers)


def _run_points(fn, args_list, workers: int):
    """Results in input order; each entry is ``(result, None)`` or ``(None, error message)``."""
    pool = _pool(workers)
    out = []
    if pool is None:
        for args in args_list:
            try:
                out.append((fn(*args), None))
            except (IntegrationDivergedError, NotConvergedError, CutoffInsufficientError,
                    DimensionTooLargeError, np.linalg.LinAlgError) as exc:
                out.append((None, f"{type(exc).__name__}: {exc}"))
        return out
    with pool:
        futures = [pool.submit(fn, *args) for args in args_list]
        for f in futures:
            try:
                out.append((f.result(), None))
            except Exception as exc:  # isolated per point
                out.append((None, f"{type(exc).__name__}: {exc}"))
    return out


def _fig3_curve(eff, cutoff, gamma, kappa, rho_sel, base_dir, dt, t_final, stride, trace_tol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = _evolve_curve(eff, cutoff, gamma, gamma, (kappa, kappa), rho_sel, base_dir, dt, t_final,
                             stride, trace_tol)
    return traj.times, traj.records


def cmd_fig3(cfg: RunConfig, out: Path, workers: int = 1) -> dict:
    pairs = cfg.experiment.get("pairs", [list(p) for p in DEFAULT_PAIRS])
    if not pairs:
        raise ConfigError("experiment.pairs: empty list")
    seen, unique = set(), []
    for p in pairs:
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise ConfigError(f"experiment.pairs: expected [gamma, kappa], got {p!r}")
        key = (_number({"gamma": p[0]}, "gamma", nonneg=True), _number({"kappa": p[1]}, "kappa", nonneg=True))
        if key in seen:
            warnings.warn(f"duplicate (gamma, kappa) pair {key} dropped")
            continue
        seen.add(key)
        unique.append(key)
    n, tail = cfg.space_cutoff()
    ideal = ideal_variance(cfg.effective.zeta)
    args = [(cfg.effective, n, g, k, cfg.initial_state, cfg.base_dir, cfg.dt, cfg.t_final, cfg.sample_stride,
             cfg.trace_tolerance) for g, k in unique]
    results = _run_points(_fig3_curve, args, workers)
    curves, failures = [], []
    cols = ["curve", "gamma", "kappa", "t_us", *COLUMNS, "gamma_t", "V_ideal"]
    with CsvWriter(out / "fig3.csv", cols) as w:
        for i, ((g, k), (res, err)) in enumerate(zip(unique, results)):
            if err is not None:
                failures.append({"curve": i, "gamma": g, "kappa": k, "error": err})
                log.error("curve %d (gamma=%g, kappa=%g) failed: %s", i, g, k, err)
                continue
            times, rec = res
            for j, t in enumerate(times):
                w.row([i, g, k, t, *(rec[c][j] for c in COLUMNS), g * t, ideal])
            curves.append({"curve": i, "gamma": g, "kappa": k, "final_V": float(rec["V"][-1]),
                           "settle_time_us": _settled_time(times, rec["V"])})
    return {"cutoff": n, "tail_mass": tail, "ideal_V": ideal, "curves": curves, "failures": failures}


def _sweep_point(ratio, kappa, theta1, cutoff, gamma_r, gamma_phi, steady, dt, t_final, trace_tol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eff = EffectiveParams.from_ratio(ratio, theta1)
        return _steady_point(eff, cutoff, gamma_r, gamma_phi, (kappa, kappa), steady, dt, t_final, trace_tol)


def cmd_sweep(cfg: RunConfig, out: Path, workers: int = 1) -> dict:
    exp = cfg.experiment
    ratios = exp.get("ratios", [0.0, 0.25, 0.5, 0.75])
    kappas = exp.get("kappas", [0.0])
    if not ratios or not kappas:
        raise ConfigError("experiment.ratios and experiment.kappas must be non-empty")
    for r in ratios:
        if not (isinstance(r, (int, float)) and 0 <= r < 1):
            raise ConfigError(f"experiment.ratios: {r!r} outside [0, 1)")
    grid = [(float(r), float(k)) for r in ratios for k in kappas]
    theta1 = cfg.effective.theta1
    args = []
    for r, k in grid:
        n = cfg.cutoff if cfg.cutoff is not None else select_cutoff(r, minimum=MIN_CUTOFF)
        args.append((r, k, theta1, n, cfg.gamma_r, cfg.gamma_phi, cfg.steady, cfg.dt, cfg.t_final,
                     cfg.trace_tolerance))
    results = _run_points(_sweep_point, args, workers)
    rows, failures = [], []
    with CsvWriter(out / "sweep.csv", ["r", "kappa", "V_steady", "V_ideal", "fidelity"]) as w:
        for (r, k), a, (res, err) in zip(grid, args, results):
            ideal = 2 * (1 - r) / (1 + r)
            if err is not None:
                failures.append({"r": r, "kappa": k, "error": err})
                continue
            w.row([r, k, res["V"], ideal, res["fidelity"]])
            rows.append({"r": r, "kappa": k, "cutoff": a[3], "tail_mass": tail_mass(r, a[3]),
                         "V_steady": res["V"], "V_ideal": ideal, "fidelity": res["fidelity"],
                         "residual": res["residual"]})
    # observation only: V should not decrease with kappa at fixed r
    monotone = {}
    for r in sorted({p[0] for p in grid}):
        vs = [row["V_steady"] for row in rows if row["r"] == r]
        monotone[str(r)] = bool(np.all(np.diff(vs) >= -1e-3)) if len(vs) > 1 else True
    return {"points": rows, "failures": failures, "kappa_monotone": monotone}


def cmd_validate(cfg: RunConfig, out: Path) -> dict:
    exp = cfg.experiment
    checks = validation.run_all(exp.get("bogoliubov"), exp.get("frame"), exp.get("rwa"))
    res = {c.name: c.as_dict() for c in checks}
    for c in checks:
        print(f"{c.name:>18s}: {c.value:.3e} < {c.bound:.0e}  {'PASS' if c.passed else 'FAIL'}")
    res["failed"] = [c.name for c in checks if not c.passed]
    return res


COMMANDS = {
    "effective": cmd_effective,
    "evolve": cmd_evolve,
    "steady": cmd_steady,
    "fig3": cmd_fig3,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
}
PARALLEL = {"fig3", "sweep"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmsv", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cutoff", type=int, help="Fock cutoff per mode (default: tail rule)")
    p.add_argument("--dt", type=float, help="integrator step in us")
    p.add_argument("--t-final", type=float, dest="t_final", help="final time in us")
    p.add_argument("--workers", type=int, default=1, help="parallel points for fig3/sweep")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    report: dict[str, Any] = {"command": args.command, "version": __version__, "backend": _core.BACKEND}
    code = EXIT_OK
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            cfg = load_config(args.config, {"cutoff": args.cutoff, "dt": args.dt, "t_final": args.t_final})
            report["config"] = cfg.raw
            report["overrides"] = {"cutoff": args.cutoff, "dt": args.dt, "t_final": args.t_final}
            report["effective"] = _effective_dict(cfg.effective)
            n, tail = cfg.space_cutoff()
            report["cutoff"] = {"value": n, "tail_mass": tail, "rule": "smallest N with r^(2(N+1)) <= 1e-4",
                                "override": cfg.cutoff is not None}
            out.mkdir(parents=True, exist_ok=True)
            fn = COMMANDS[args.command]
            kw = {"workers": args.workers} if args.command in PARALLEL else {}
            report["results"] = fn(cfg, out, **kw)
            if args.command == "validate" and report["results"]["failed"]:
                code = EXIT_VALIDATION
            if report["results"].get("failures"):
                code = EXIT_NUMERIC
        except (ConfigError, UnsqueezableConfigurationError, InconsistentSymmetryError,
                NegativeDriveFrequencyError, DimensionTooLargeError, ValueError, TypeError, KeyError) as exc:
            log.error("configuration error: %s", exc)
            report["error"] = {"kind": "config", "type": type(exc).__name__, "message": str(exc)}
            code = EXIT_CONFIG
        except (IntegrationDivergedError, NotConvergedError, CutoffInsufficientError,
                np.linalg.LinAlgError, FloatingPointError) as exc:
            log.error("numerical failure: %s", exc)
            report["error"] = {"kind": "numerical", "type": type(exc).__name__, "message": str(exc)}
            code = EXIT_NUMERIC
        report["warnings"] = [str(w.message) for w in caught]
    for w in report["warnings"]:
        log.warning("%s", w)
    report["seconds"] = time.perf_counter() - t0
    report["exit_code"] = code
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        log.error("could not write report: %s", exc)
    return code


if __name__ == "__main__":
    sys.exit(main())

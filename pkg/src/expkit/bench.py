"""Work-precision benchmark harness.

Runs the adaptive integrator over a configuration matrix, measures the
global error against a reference solution, and writes one CSV row per run.
References come from the exact solution when one exists, otherwise from a
tight EPIRK5P1 + Krylov run that is cached on disk.
"""

import csv
import hashlib
import math
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import StepFailure
from .integrators import INTEGRATORS, LEKRY_INTEGRATORS, SCHEMES, EngineContext
from .linalg import norm_l2
from .problems import PROBLEMS, make_problem
from .timestep import adaptive_loop

CSV_HEADER = ("problem,param,n,integrator,scheme,tol,steps_accepted,"
              "steps_rejected,rhs_evals,leja_iters,krylov_matvecs,substeps,"
              "wall_time_s,l2_error")
DEFAULT_TOLS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)
REFERENCE_TOL = 1e-12


@dataclass(frozen=True)
class RunConfig:
    problem: str
    param: float  # diffusion coefficient; NaN for parameter-free problems
    n: int
    integrator: str
    scheme: str
    tol: float
    t_final: float = None
    seed: int = 0

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem '{self.problem}'")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator '{self.integrator}'")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme '{self.scheme}'")
        if self.scheme == "lekry" and self.integrator not in LEKRY_INTEGRATORS:
            raise ValueError(
                f"integrator '{self.integrator}' has no lekry scheme")
        if not (0.0 < self.tol < 1.0):
            raise ValueError("tol must be in (0, 1)")


@dataclass
class RunRecord:
    config: RunConfig
    steps_accepted: int = 0
    steps_rejected: int = 0
    rhs_evals: int = 0
    leja_iters: int = 0
    krylov_matvecs: int = 0
    substeps: int = 0
    wall_time_s: float = 0.0
    l2_error: float = math.nan
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


def _make(config):
    kwargs = {"n": config.n}
    if config.problem != "semilinear":
        kwargs["alpha"] = config.param
    prob = make_problem(config.problem, **kwargs)
    if config.t_final is not None:
        prob.t_final = config.t_final
    return prob


def _ref_key(problem, param, n, t_final):
    text = f"{problem}|{param!r}|{n}|{t_final!r}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _ref_write(path, u):
    payload = struct.pack("<Q", len(u)) + np.asarray(u, dtype="<f8").tobytes()
    path.write_bytes(payload)


def _ref_read(path):
    raw = path.read_bytes()
    (count,) = struct.unpack_from("<Q", raw)
    u = np.frombuffer(raw, dtype="<f8", count=count, offset=8)
    if len(u) != count:
        raise ValueError(f"corrupt reference file {path}")
    return np.array(u)


def build_reference(problem, param, n, cache_dir=None, t_final=None,
                    reference_tol=REFERENCE_TOL):
    """Reference state for (problem, param, n): the exact solution when the
    problem has one, otherwise a tight adaptive run cached on disk."""
    cfg = RunConfig(problem, param, n, "epirk5p1", "kiops", reference_tol,
                    t_final=t_final)
    prob = _make(cfg)
    if prob.exact is not None:
        return prob.exact(prob.t_final)

    path = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        path = cache_dir / (_ref_key(problem, param, n, prob.t_final) + ".ref")
        if path.exists():
            return _ref_read(path)

    try:
        traj = adaptive_loop(prob.rhs, prob.u0, prob.t_final, "epirk5p1",
                             "kiops", reference_tol,
                             jac_factory=prob.jac_factory,
                             ctx=EngineContext())
    except StepFailure as exc:
        raise StepFailure(
            f"reference run failed for {problem} (param={param}, n={n}); "
            f"retry with a looser reference_tol", cause=exc) from exc
    u_ref = prob.extract(traj.u)
    if path is not None:
        _ref_write(path, u_ref)
    return u_ref


def run_one(config, u_ref=None, ref_cache_dir=None):
    """Execute one benchmark run and fill a RunRecord; failures are
    recorded in the `error` field rather than raised."""
    config.validate()
    if u_ref is None:
        u_ref = build_reference(config.problem, config.param, config.n,
                                cache_dir=ref_cache_dir,
                                t_final=config.t_final)
    prob = _make(config)
    rec = RunRecord(config=config)
    t0 = time.perf_counter()
    try:
        traj = adaptive_loop(prob.rhs, prob.u0, prob.t_final,
                             config.integrator, config.scheme, config.tol,
                             jac_factory=prob.jac_factory,
                             ctx=EngineContext())
    except (StepFailure, FloatingPointError) as exc:
        rec.wall_time_s = time.perf_counter() - t0
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.wall_time_s = time.perf_counter() - t0
    rec.steps_accepted = traj.steps_accepted
    rec.steps_rejected = traj.steps_rejected
    rec.rhs_evals = traj.rhs_evals
    rec.leja_iters = traj.leja_iters
    rec.krylov_matvecs = traj.krylov_matvecs
    rec.substeps = traj.substeps
    u = prob.extract(traj.u)
    rec.l2_error = norm_l2(u - u_ref) / norm_l2(u_ref)
    return rec


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else "%.17g" % x
    return str(x)


def record_row(rec):
    c = rec.config
    param = "" if (isinstance(c.param, float) and math.isnan(c.param)) \
        else _fmt(float(c.param))
    return [c.problem, param, str(c.n), c.integrator, c.scheme, _fmt(c.tol),
            str(rec.steps_accepted), str(rec.steps_rejected),
            str(rec.rhs_evals), str(rec.leja_iters),
            str(rec.krylov_matvecs), str(rec.substeps),
            _fmt(rec.wall_time_s), _fmt(rec.l2_error), rec.error]


def write_csv(records, out_path):
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + ",error\n")
        writer = csv.writer(fh, lineterminator="\n")
        for rec in records:
            writer.writerow(record_row(rec))


@dataclass
class SweepConfig:
    problems: list
    params: dict = field(default_factory=dict)  # problem -> [alpha, ...]
    n: int = 64
    integrators: list = field(default_factory=lambda: list(INTEGRATORS))
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    tols: tuple = DEFAULT_TOLS
    t_final: float = None


def expand_matrix(sweep):
    """Cartesian product of the configured axes, skipping the scheme/
    integrator combinations that do not exist."""
    configs = []
    for problem in sweep.problems:
        params = sweep.params.get(problem, [math.nan])
        if problem == "semilinear":
            params = [math.nan]
        for param in params:
            for integ in sweep.integrators:
                for scheme in sweep.schemes:
                    if scheme == "lekry" and integ not in LEKRY_INTEGRATORS:
                        continue
                    for tol in sweep.tols:
                        configs.append(RunConfig(problem, param, sweep.n,
                                                 integ, scheme, tol,
                                                 t_final=sweep.t_final))
    return configs


def run_sweep(configs, out_path, ref_cache_dir=None):
    """Run every config in order, writing one CSV row per run. Returns the
    records; a run failure is recorded and the sweep continues."""
    def ref_key(cfg):
        param = None if (isinstance(cfg.param, float)
                         and math.isnan(cfg.param)) else cfg.param
        return (cfg.problem, param, cfg.n, cfg.t_final)

    refs = {}
    for cfg in configs:
        cfg.validate()
        key = ref_key(cfg)
        if key not in refs:
            refs[key] = build_reference(cfg.problem, cfg.param, cfg.n,
                                        cache_dir=ref_cache_dir,
                                        t_final=cfg.t_final)
    records = []
    for cfg in configs:
        records.append(run_one(cfg, u_ref=refs[ref_key(cfg)]))
    write_csv(records, out_path)
    return records

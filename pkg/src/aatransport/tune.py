"""Sequential parameter optimizer and exhaustive sweeps over solver
configurations.

The tuner minimizes iterations-to-tolerance over a small parameter space
with a fixed sample budget: a Latin hypercube covers the space first, then
the remaining budget refines around the incumbent with shrinking Gaussian
proposals, the best of each candidate batch chosen by a nearest-neighbor
surrogate. Failed solves receive a finite penalty so they order below any
convergent trial. Sweeps evaluate a full cartesian grid (heatmap data).
"""

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from . import problem as problem_mod
from .accel import SolveReport

KIND_CONTINUOUS = "continuous"
KIND_LOG = "continuous-log"
KIND_INTEGER = "integer"

PENALTY_OFFSET = 1000  # failed solves score k_max + PENALTY_OFFSET

# tuner parameter name -> solver config field
PARAM_FIELDS = {
    "beta": "beta",
    "m": "m_max",
    "d": "delay",
    "omega_beta": "omega_beta",
    "omega_m": "omega_m",
}

CANDIDATE_BATCH = 16
RADIUS_INITIAL = 0.3    # proposal std, fraction of each dim's range
RADIUS_FINAL = 0.05


@dataclass(frozen=True)
class ParamDim:
    name: str
    kind: str
    lower: float
    upper: float

    def __post_init__(self):
        if self.kind not in (KIND_CONTINUOUS, KIND_LOG, KIND_INTEGER):
            raise ValueError(f"unknown dim kind {self.kind!r}")
        if not self.lower < self.upper:
            raise ValueError(f"dim {self.name}: lower must be < upper")
        if self.kind == KIND_LOG and self.lower <= 0.0:
            raise ValueError(f"dim {self.name}: log dim needs lower > 0")

    def from_unit(self, u: float):
        """Map u in [0, 1] to a value in the dim's range."""
        u = min(1.0, max(0.0, float(u)))
        if self.kind == KIND_INTEGER:
            lo, hi = int(self.lower), int(self.upper)
            return min(hi, lo + int(np.floor(u * (hi - lo + 1))))
        if self.kind == KIND_LOG:
            return float(np.exp(np.log(self.lower) +
                                u * (np.log(self.upper) -
                                     np.log(self.lower))))
        return float(self.lower + u * (self.upper - self.lower))

    def to_unit(self, v) -> float:
        if self.kind == KIND_INTEGER:
            lo, hi = int(self.lower), int(self.upper)
            return 0.0 if hi == lo else (float(v) - lo) / (hi - lo)
        if self.kind == KIND_LOG:
            return float((np.log(v) - np.log(self.lower)) /
                         (np.log(self.upper) - np.log(self.lower)))
        return float((v - self.lower) / (self.upper - self.lower))

    def clip(self, v):
        if self.kind == KIND_INTEGER:
            return int(min(int(self.upper), max(int(self.lower),
                                                int(round(v)))))
        return float(min(self.upper, max(self.lower, v)))


@dataclass
class ParamSpace:
    dims: List[ParamDim]
    constraints: List[Callable[[Dict], bool]] = field(default_factory=list)

    def satisfies(self, sample: Dict) -> bool:
        return all(c(sample) for c in self.constraints)

    def from_unit(self, u: np.ndarray) -> Dict:
        return {d.name: d.from_unit(ui) for d, ui in zip(self.dims, u)}

    def to_unit(self, sample: Dict) -> np.ndarray:
        return np.array([d.to_unit(sample[d.name]) for d in self.dims])

    def clip(self, sample: Dict) -> Dict:
        return {d.name: d.clip(sample[d.name]) for d in self.dims}


@dataclass
class TrialRecord:
    params: Dict
    objective: float
    status: str
    index: int = -1
    report: Optional[SolveReport] = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass
class TuneResult:
    best: TrialRecord
    history: List[TrialRecord]
    all_failed: bool = False


def default_space(names=("beta", "m", "d")) -> ParamSpace:
    """Bounds bracketing every configuration exercised in the studies."""
    catalog = {
        "beta": ParamDim("beta", KIND_CONTINUOUS, 0.01, 1.0),
        "m": ParamDim("m", KIND_INTEGER, 0, 10),
        "d": ParamDim("d", KIND_INTEGER, 0, 20),
        "omega_beta": ParamDim("omega_beta", KIND_CONTINUOUS, 0.0, 0.89),
        "omega_m": ParamDim("omega_m", KIND_LOG, 1e-2, 1e4),
    }
    return ParamSpace(dims=[catalog[n] for n in names])


def apply_params(config, params: Dict):
    """Solver config with tuner parameters substituted in."""
    overrides = {}
    for name, value in params.items():
        if name not in PARAM_FIELDS:
            raise ValueError(f"unknown tuning parameter {name!r}")
        overrides[PARAM_FIELDS[name]] = value
    return problem_mod.with_accel_overrides(config, **overrides)


def evaluate_objective(params: Dict, config,
                       keep_report: bool = False) -> TrialRecord:
    """One solve at the given parameters; failures become penalties."""
    cfg = apply_params(config, params)
    report = problem_mod.run_experiment(cfg)
    if report.converged:
        objective = float(report.iterations)
    else:
        objective = float(cfg.accel.k_max + PENALTY_OFFSET)
    return TrialRecord(params=dict(params), objective=objective,
                       status=report.status,
                       report=report if keep_report else None)


def _lhs_samples(space: ParamSpace, n: int, seed: int) -> List[Dict]:
    sampler = qmc.LatinHypercube(d=len(space.dims), seed=seed)
    unit = sampler.random(n)
    out = []
    for row in unit:
        s = space.from_unit(row)
        if space.satisfies(s):
            out.append(s)
    # constraint rejections are refilled deterministically from a fresh
    # stream so the budget is honored exactly
    rng = np.random.default_rng([seed, n])
    while len(out) < n:
        s = space.from_unit(rng.random(len(space.dims)))
        if space.satisfies(s):
            out.append(s)
    return out


def _nn_predict(u: np.ndarray, us: np.ndarray, objs: np.ndarray) -> float:
    d = np.linalg.norm(us - u, axis=1)
    return float(objs[int(np.argmin(d))])


def tune(space: ParamSpace, config, n_initial: int, n_total: int,
         seed: int = 0, include_default: Optional[Dict] = None,
         evaluator: Callable[[Dict], TrialRecord] = None) -> TuneResult:
    """Budgeted sequential minimization of iterations-to-tolerance.

    n_initial Latin hypercube samples (the first replaced by
    include_default when given, seeding the known-good configuration),
    then n_total - n_initial incumbent-centered refinement proposals.
    Identical (space, seed, budget) inputs give identical histories.
    """
    if n_initial > n_total:
        raise ValueError("n_initial must be <= n_total")
    if n_initial < 1:
        raise ValueError("n_initial must be >= 1")
    if evaluator is None:
        evaluator = lambda p: evaluate_objective(p, config)

    samples = _lhs_samples(space, n_initial, seed)
    if include_default is not None:
        samples[0] = space.clip(dict(include_default))

    history: List[TrialRecord] = []
    for s in samples:
        rec = evaluator(s)
        rec.index = len(history)
        history.append(rec)

    rng = np.random.default_rng([seed, 0xA11CE])
    n_refine = n_total - n_initial
    for t in range(n_refine):
        best = min(history, key=lambda r: r.objective)
        frac = t / max(1, n_refine - 1)
        radius = RADIUS_INITIAL + frac * (RADIUS_FINAL - RADIUS_INITIAL)
        center = space.to_unit(best.params)
        us = np.stack([space.to_unit(r.params) for r in history])
        objs = np.array([r.objective for r in history])
        candidates = []
        while len(candidates) < CANDIDATE_BATCH:
            u = np.clip(center + radius * rng.standard_normal(len(space.dims)),
                        0.0, 1.0)
            s = space.from_unit(u)
            if space.satisfies(s):
                candidates.append((u, s))
        scored = [(_nn_predict(u, us, objs),
                   float(np.min(np.linalg.norm(us - u, axis=1))), i, s)
                  for i, (u, s) in enumerate(candidates)]
        # lowest predicted objective; ties broken toward unexplored space
        scored.sort(key=lambda z: (z[0], -z[1], z[2]))
        chosen = scored[0][3]
        rec = evaluator(chosen)
        rec.index = len(history)
        history.append(rec)

    best = min(history, key=lambda r: (r.objective, r.index))
    all_failed = not any(r.converged for r in history)
    return TuneResult(best=best, history=history, all_failed=all_failed)


def _grid_cells(grid: Dict[str, list]) -> List[Dict]:
    names = list(grid.keys())
    return [dict(zip(names, combo))
            for combo in itertools.product(*(grid[n] for n in names))]


def _sweep_cell(args) -> Tuple[int, Dict, float, str, int]:
    index, params, config, root_seed = args
    if root_seed is not None and config.noise is not None:
        cell_seed = int(np.random.SeedSequence([root_seed, index])
                        .generate_state(1)[0])
        config = problem_mod.with_noise_seed(config, cell_seed)
    rec = evaluate_objective(params, config)
    return index, params, rec.objective, rec.status, _iters(rec)


def _iters(rec: TrialRecord) -> int:
    return (rec.report.iterations if rec.report is not None
            else int(rec.objective) if rec.converged else -1)


def run_sweep(grid: Dict[str, list], config, jobs: int = 1,
              root_seed: Optional[int] = None) -> List[TrialRecord]:
    """One solve per cartesian grid cell, in deterministic cell order.

    With a noise model attached, each cell's noise seed derives from
    (root_seed, cell index) so results are reproducible regardless of the
    worker pool size.
    """
    cells = _grid_cells(grid)
    work = [(i, params, config, root_seed)
            for i, params in enumerate(cells)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_sweep_cell, work, chunksize=4))
    else:
        raw = [_sweep_cell(w) for w in work]
    records = []
    for index, params, objective, status, _ in raw:
        records.append(TrialRecord(params=params, objective=objective,
                                   status=status, index=index))
    return records

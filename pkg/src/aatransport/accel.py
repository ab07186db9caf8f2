"""Anderson-accelerated fixed-point solver with delay, damping, and
adaptive variants.

The engine iterates p_{k+1} = beta*G(p_k) + (1-beta)*p_k for an initial
delay, then switches to Anderson Acceleration: the correction weights
minimize the norm of the residual difference combination via an
incrementally updated QR factorization of the residual history. Damping
and depth can be fixed or adapted per iteration from the acceleration
gain and the residual magnitude respectively.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .qrls import QrFactor, RankDeficiencyError
from .transport import (AssemblyError, LinearSolveError,
                        UnphysicalProfileError)

BETA_CEIL = 0.9  # upper clamp of the adaptive damping formula

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max_iterations"
STATUS_FAILED_UNPHYSICAL = "failed_unphysical"
STATUS_FAILED_LINEAR_SOLVE = "failed_linear_solve"


@dataclass
class AccelConfig:
    """All solver knobs.

    m_max = 0 with fixed damping reproduces the plain relaxed iteration.
    delay counts damped fixed-point iterations taken before acceleration
    starts. omega_beta and omega_m are the adaptive damping and depth
    gains; beta_min is the floor applied when clamping adaptive damping.
    """

    m_max: int = 0
    beta: float = 1.0
    delay: int = 0
    k_max: int = 200
    tol: float = 1e-11
    damping_mode: str = "fixed"   # "fixed" | "adaptive"
    depth_mode: str = "fixed"     # "fixed" | "adaptive"
    omega_beta: float = 0.5
    omega_m: float = 1.0
    beta_min: float = 0.01

    def __post_init__(self):
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.damping_mode not in ("fixed", "adaptive"):
            raise ValueError(f"unknown damping_mode {self.damping_mode!r}")
        if self.depth_mode not in ("fixed", "adaptive"):
            raise ValueError(f"unknown depth_mode {self.depth_mode!r}")
        if not 0.0 <= self.omega_beta < BETA_CEIL:
            raise ValueError("omega_beta must be in [0, 0.9)")
        if self.omega_m <= 0.0:
            raise ValueError("omega_m must be positive")
        if self.beta_min <= 0.0:
            raise ValueError("beta_min must be positive")


@dataclass
class TraceEntry:
    """One row of the per-iteration history.

    Entry k >= 1 describes the step that produced iterate p_k:
    residual_norm is ||p_k - p_{k-1}|| / ||p_k|| and beta_k / m_k are the
    damping and depth used. Entry 0 records the starting point, with the
    relative fixed-point residual ||G(p_0) - p_0|| / ||p_0||.
    linear_residual is an auxiliary problem residual supplied by the map
    (NaN when unavailable).
    """

    k: int
    residual_norm: float
    beta_k: float
    m_k: int
    linear_residual: float = np.nan


@dataclass
class SolveReport:
    status: str
    iterations: int
    trace: List[TraceEntry]
    final_iterate: np.ndarray
    message: str = ""
    # diagnostics, one entry per G evaluation (iterates p_0, p_1, ...):
    f_norms: List[float] = field(default_factory=list)
    # minimized least-squares residual per accelerated step (NaN otherwise)
    lsq_residuals: List[float] = field(default_factory=list)
    gains: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


class AccelState:
    """Mutable history of one solve: the residual-difference QR window and
    the matching map-value differences."""

    def __init__(self, n: int, m_max: int):
        self.factor = QrFactor(n, max(m_max, 1))
        self.g_diffs: deque = deque()
        self.m_max = m_max

    @property
    def n_cols(self) -> int:
        return self.factor.n_cols

    def push(self, dg: np.ndarray, df: np.ndarray) -> None:
        cap = min(self.factor.max_cols, self.factor.n_rows)
        if self.factor.n_cols >= cap:
            self.pop_front()
        self.factor.append(df)
        self.g_diffs.append(dg)

    def pop_front(self) -> None:
        self.factor.pop_front()
        self.g_diffs.popleft()

    def shrink_to(self, m: int) -> None:
        while self.n_cols > m:
            self.pop_front()


def fixed_point_step(g_value: np.ndarray, p: np.ndarray,
                     beta: float) -> np.ndarray:
    """Relaxed update beta*G(p) + (1 - beta)*p."""
    return beta * g_value + (1.0 - beta) * p


def gain(factor: QrFactor, f: np.ndarray):
    """Acceleration gain sqrt(1 - (||Q'f|| / ||f||)^2), clamped to [0, 1].

    Returns None when ||f|| = 0 (already converged).
    """
    f_norm = float(np.linalg.norm(f))
    if f_norm == 0.0:
        return None
    if factor.n_cols == 0:
        raise ValueError("gain requires at least one history column")
    ratio = float(np.linalg.norm(factor.q.T @ f)) / f_norm
    return float(np.sqrt(max(0.0, 1.0 - min(1.0, ratio) ** 2)))


def adapt_damping(gamma_gain: float, omega_beta: float,
                  beta_min: float) -> float:
    """Damping heuristic beta_k = 0.9 - omega_beta * gain, clamped into
    [beta_min, 0.9]."""
    return float(np.clip(BETA_CEIL - omega_beta * gamma_gain,
                         beta_min, BETA_CEIL))


def adapt_depth(f_norm: float, m_prev: int, omega_m: float,
                m_max: int) -> int:
    """Depth heuristic: larger depth as the residual shrinks, growing by
    at most one per iteration."""
    m_tilde = max(0, int(np.floor(-np.log10(omega_m * f_norm))))
    return min(m_tilde, m_prev + 1, m_max)


def aa_step(state: AccelState, g_new: np.ndarray, f: np.ndarray,
            p: np.ndarray, beta_k: float):
    """One accelerated update from the current history window.

    Solves the least-squares problem for the weights and returns
    (p_next, lsq_residual_norm, m_used). Rank-deficient history drops its
    oldest column and retries; with no usable history left the damped
    fixed-point step is taken.
    """
    while state.n_cols >= 1:
        try:
            gamma = state.factor.solve_lsq(f)
        except RankDeficiencyError:
            state.pop_front()
            continue
        g_mat = np.column_stack(list(state.g_diffs))
        f_proj = state.factor.q @ (state.factor.r @ gamma)
        p_next = g_new - g_mat @ gamma - (1.0 - beta_k) * (f - f_proj)
        lsq_res = float(np.linalg.norm(f - f_proj))
        return p_next, lsq_res, state.n_cols
    return fixed_point_step(g_new, p, beta_k), np.nan, 0


def solve(map_g: Callable[[np.ndarray], np.ndarray], p0,
          config: AccelConfig,
          aux_residual: Optional[Callable[[], float]] = None) -> SolveReport:
    """Run the accelerated fixed-point iteration to tolerance.

    map_g evaluates G(p) and may raise UnphysicalProfileError or
    LinearSolveError; either terminates the solve with the matching failed
    status and the trace up to that point. Convergence is declared when
    ||p_{k+1} - p_k|| / ||p_{k+1}|| < tol. aux_residual, if given, is
    called after each G evaluation and recorded in the trace.
    """
    p = np.array(p0, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("initial iterate must be finite")
    n = p.shape[0]

    state = AccelState(n, config.m_max)
    trace: List[TraceEntry] = []
    f_norms: List[float] = []
    lsq_residuals: List[float] = []
    gains: List[float] = []
    g_prev = None
    f_prev = None
    m_prev = 0
    status = STATUS_MAX_ITERATIONS
    message = ""

    for k in range(config.k_max):
        try:
            g = map_g(p)
        except (UnphysicalProfileError, AssemblyError) as e:
            status, message = STATUS_FAILED_UNPHYSICAL, str(e)
            break
        except LinearSolveError as e:
            status, message = STATUS_FAILED_LINEAR_SOLVE, str(e)
            break
        aux = float(aux_residual()) if aux_residual is not None else np.nan
        f = g - p
        f_norm = float(np.linalg.norm(f))
        f_norms.append(f_norm)

        if k == 0:
            p_norm = float(np.linalg.norm(p))
            fp_res = f_norm / p_norm if p_norm > 0.0 else f_norm
            trace.append(TraceEntry(k=0, residual_norm=fp_res,
                                    beta_k=config.beta, m_k=0,
                                    linear_residual=aux))

        # history columns only span post-delay steps; differences across
        # the damped transient would poison the least-squares model
        if g_prev is not None and config.m_max > 0 and k > config.delay:
            state.push(g - g_prev, f - f_prev)
        g_prev, f_prev = g, f

        accelerate = k > config.delay and config.m_max > 0
        if accelerate:
            if config.depth_mode == "adaptive":
                if f_norm > 0.0:
                    m_k = adapt_depth(f_norm, m_prev, config.omega_m,
                                      config.m_max)
                else:
                    m_k = m_prev
                state.shrink_to(m_k)
            # fixed depth: use the full window, min(k, m_max) by
            # construction
            m_k = state.n_cols
        else:
            m_k = 0

        if accelerate and m_k >= 1:
            if config.damping_mode == "adaptive":
                g_k = gain(state.factor, f)
                if g_k is None:
                    # zero residual: iteration already at the fixed point
                    beta_k = config.beta
                    gains.append(np.nan)
                else:
                    beta_k = adapt_damping(g_k, config.omega_beta,
                                           config.beta_min)
                    gains.append(g_k)
            else:
                beta_k = config.beta
                gains.append(np.nan)
            p_next, lsq_res, m_used = aa_step(state, g, f, p, beta_k)
            lsq_residuals.append(lsq_res)
            m_k = m_used
        else:
            beta_k = config.beta
            p_next = fixed_point_step(g, p, beta_k)
            lsq_residuals.append(np.nan)
            gains.append(np.nan)
        m_prev = m_k

        diff = float(np.linalg.norm(p_next - p))
        denom = float(np.linalg.norm(p_next))
        res = diff / denom if denom > 0.0 else diff
        trace.append(TraceEntry(k=k + 1, residual_norm=res, beta_k=beta_k,
                                m_k=m_k, linear_residual=aux))
        p = p_next
        if not np.all(np.isfinite(p)):
            status, message = (STATUS_FAILED_UNPHYSICAL,
                               "iterate became non-finite")
            break
        if res < config.tol:
            status = STATUS_CONVERGED
            break

    iterations = len(trace) - 1 if trace else 0
    return SolveReport(status=status, iterations=iterations, trace=trace,
                       final_iterate=p, message=message, f_norms=f_norms,
                       lsq_residuals=lsq_residuals, gains=gains)

"""Analytic flux models for the stiff transport benchmark.

The flux is q = -D dp/dx with D = ((1/p) dp/dx)^r, optionally with
spatially correlated, temporally white Gaussian noise added to mimic a
turbulence code's flux fluctuations. The steady state with the localized
source has a closed form used as a verification oracle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .transport import Grid, UnphysicalProfileError, check_physical, grad

SOURCE_EDGE = 0.1   # S = 1 on [0, SOURCE_EDGE], 0 beyond
Q_INF = 0.1         # integrated source = steady flux past the source region


@dataclass
class NoiseModel:
    """Spatially correlated, temporally white Gaussian flux noise.

    The noise enters relatively, q -> q * (1 + field): the fluctuation
    amplitude scales with the local flux, vanishing where the flux does
    (a coherent offset across the near-zero-flux region at the profile top
    would otherwise zero out the diffusive split there and destabilize the
    step). amplitude is the relative field standard deviation;
    correlation_length is a fraction of the domain. Fields are
    reproducible from (seed, draw_index) alone.
    """

    amplitude: float = 0.001
    correlation_length: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("noise amplitude must be nonnegative")
        if self.correlation_length <= 0.0:
            raise ValueError("correlation length must be positive")


def shestakov_flux(p, dx: float, r: float,
                   check_positivity: bool = True) -> np.ndarray:
    """Noiseless analytic flux q = -D dp/dx with D = |(dp/dx)/p|^r.

    The absolute value keeps D real and nonnegative for fractional r; for
    the even integer exponents actually exercised it changes nothing.
    check_positivity=False evaluates through negative profile excursions
    (the formula stays well defined away from exact zeros).
    """
    p = np.asarray(p, dtype=float)
    check_physical(p, positive=check_positivity)
    gp = grad(p, dx)
    d = np.abs(gp / p) ** r
    return -d * gp


def source_profile(grid: Grid) -> np.ndarray:
    """Localized source: 1 on [0, 0.1], 0 elsewhere.

    A node falling exactly on the edge gets weight 1/2 (trapezoidal
    treatment of the discontinuity), which keeps the discretely integrated
    source — and hence the downstream steady flux — exact on grids that
    align with the edge.
    """
    x = grid.x
    s = np.where(x < SOURCE_EDGE - 1e-12, 1.0, 0.0)
    return np.where(np.abs(x - SOURCE_EDGE) <= 1e-12, 0.5, s)


def _correlation_kernel(dx: float, correlation_length: float) -> np.ndarray:
    # Gaussian kernel of width ell/sqrt(2) gives the field autocorrelation
    # exp(-(lag/ell)^2 / 2); normalized in 2-norm for unit field variance
    s = correlation_length / np.sqrt(2.0)
    half = max(1, int(np.ceil(4.0 * s / dx)))
    offsets = np.arange(-half, half + 1) * dx
    w = np.exp(-0.5 * (offsets / s) ** 2)
    return w / np.linalg.norm(w)


def sample_noise(model: NoiseModel, grid: Grid, q_scale: float,
                 draw_index: int) -> np.ndarray:
    """One noise field draw, deterministic in (model.seed, draw_index).

    White Gaussian noise on an extended grid is convolved with a normalized
    Gaussian kernel, yielding a stationary unit-variance field scaled by
    amplitude * q_scale.
    """
    if model.amplitude == 0.0:
        return np.zeros(grid.n_points)
    w = _correlation_kernel(grid.dx, model.correlation_length)
    half = (w.shape[0] - 1) // 2
    rng = np.random.default_rng([int(model.seed), int(draw_index)])
    z = rng.standard_normal(grid.n_points + 2 * half)
    eta = np.convolve(z, w, mode="valid")
    return model.amplitude * q_scale * eta


def sample_noise_batch(model: NoiseModel, grid: Grid, q_scale: float,
                       draw_indices) -> np.ndarray:
    """Stacked draws (one row per index); matches sample_noise per row up
    to FFT-convolution roundoff."""
    if model.amplitude == 0.0:
        return np.zeros((len(draw_indices), grid.n_points))
    w = _correlation_kernel(grid.dx, model.correlation_length)
    half = (w.shape[0] - 1) // 2
    z = np.stack([
        np.random.default_rng([int(model.seed), int(i)])
        .standard_normal(grid.n_points + 2 * half)
        for i in draw_indices
    ])
    eta = fftconvolve(z, w[None, :], mode="valid", axes=1)
    return model.amplitude * q_scale * eta


class ShestakovFlux:
    """Flux model callable handed to the coupling map.

    With a NoiseModel attached, each evaluation adds a fresh correlated
    noise draw (temporally white across coupling exchanges).
    """

    def __init__(self, r: float, grid: Grid,
                 noise: Optional[NoiseModel] = None,
                 check_positivity: bool = True):
        if r < 0.0:
            raise ValueError("stiffness exponent must be nonnegative")
        self.r = r
        self.grid = grid
        self.noise = noise
        self.check_positivity = check_positivity
        self.draw_index = 0

    def __call__(self, p) -> np.ndarray:
        q = shestakov_flux(p, self.grid.dx, self.r,
                           check_positivity=self.check_positivity)
        if self.noise is not None and self.noise.amplitude > 0.0:
            # relative perturbation: local flux magnitude sets the scale
            q = q * (1.0 + sample_noise(self.noise, self.grid, 1.0,
                                        self.draw_index))
            self.draw_index += 1
        return q

    def reset(self) -> None:
        self.draw_index = 0


def steady_state_oracle(r: float, grid: Grid,
                        bc_right: float = 0.01) -> np.ndarray:
    """Closed-form steady state of the noiseless problem.

    Steady state means dq/dx = S, so q(x) = x on [0, 0.1] and q = 0.1
    beyond; with q = (-dp/dx)^(r+1) / p^r the ODE separates and
    p^(1/(r+1)) integrates in closed form in both regions.
    """
    a = 1.0 / (r + 1.0)
    x = grid.x
    pa_right = bc_right**a + a * Q_INF**a * (1.0 - x)
    # source region: q(t) = t, integrate d(p^a)/dx = -a q(x)^a inward
    pa_edge = bc_right**a + a * Q_INF**a * (1.0 - SOURCE_EDGE)
    pa_left = pa_edge + a * (SOURCE_EDGE**(1.0 + a) - x**(1.0 + a)) / (1.0 + a)
    pa = np.where(x >= SOURCE_EDGE, pa_right, pa_left)
    return pa ** (r + 1.0)

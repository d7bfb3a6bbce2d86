"""Fractional heat propagator and empirical smoothing constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .generators import random_band_limited
from .grid import GridSpec, SpectralField, _leray_coeffs, packed_modes
from .littlewood_paley import besov_norm_lp, heat_time_grid, sup_over_time

__all__ = [
    "PropagatorSpec",
    "heat_multiplier",
    "heat_propagate",
    "duhamel_kernel",
    "ProbeReport",
    "smoothing_probe",
    "gradient_sup",
]


@dataclass(frozen=True)
class PropagatorSpec:
    alpha: float
    kappa: float
    t: float

    def __post_init__(self):
        if self.alpha <= 0 or self.kappa <= 0:
            raise ValueError("alpha and kappa must be positive")
        if self.t < 0:
            raise ValueError("propagation time must be nonnegative")

    def multiplier(self, grid: GridSpec) -> np.ndarray:
        return np.exp(-self.kappa * self.t * grid.kmag ** (2 * self.alpha))


def heat_multiplier(grid: GridSpec, t: float, alpha: float, kappa: float = 1.0) -> np.ndarray:
    return PropagatorSpec(alpha, kappa, t).multiplier(grid)


def heat_propagate(f: SpectralField, t: float, alpha: float, kappa: float = 1.0) -> SpectralField:
    """``exp(-kappa t (-Lap)^alpha) f``, mode by mode."""
    return SpectralField(f.grid, f.coeffs * heat_multiplier(f.grid, t, alpha, kappa), f.solenoidal)


def duhamel_kernel(tensor: np.ndarray, grid: GridSpec, tau: float, alpha: float,
                   kappa: float = 1.0, with_curl: bool = False) -> SpectralField:
    """``exp(-kappa tau (-Lap)^alpha) [curl] P div T`` for tensor coefficients ``T``.

    ``tensor`` has shape ``(3, 3, n, n, n//2+1)``; the divergence contracts the
    first index.  Only modes retained by dealiasing contribute.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    pm = packed_modes(grid)
    packed = grid.pack(np.asarray(tensor))
    src = kernels.project_divergence(packed, pm["kd1"], pm["kd2"], pm["kd3"], pm["inv_ksq"],
                                     with_curl)
    src = src * np.exp(-kappa * tau * pm["kmag"] ** (2 * alpha))
    return SpectralField(grid, grid.unpack(src), solenoidal=True)


def gradient_sup(f: SpectralField, project: bool = False) -> float:
    """``||grad f||_inf`` over all nine derivative components."""
    grid = f.grid
    c = _leray_coeffs(grid, f.coeffs) if project else f.coeffs
    best = 0.0
    for kd in grid.kd:
        g = SpectralField(grid, 1j * np.broadcast_to(kd, grid.spectral_shape) * c)
        best = max(best, g.sup_norm())
    return best


@dataclass(frozen=True)
class ProbeReport:
    alpha: float
    s0: float
    s1: float
    corpus_size: int
    besov_constant: float
    gradient_constant: float
    projected_gradient_constant: float
    gradient_argmax_t: float


def _besov_ratio_sup(f: SpectralField, alpha, s0, s1, t_grid):
    base = besov_norm_lp(f, s0)
    sym = f.grid.kmag ** (2 * alpha)
    w = (s1 - s0) / (2 * alpha)
    best = 0.0
    for t in t_grid:
        g = SpectralField(f.grid, f.coeffs * np.exp(-t * sym))
        best = max(best, t**w * besov_norm_lp(g, s1) / base)
    return best


def _gradient_ratio(f: SpectralField, alpha, project):
    sym = f.grid.kmag ** (2 * alpha)
    base = f.sup_norm()

    def ratio(t):
        g = SpectralField(f.grid, f.coeffs * np.exp(-t * sym))
        return t ** (1.0 / (2 * alpha)) * gradient_sup(g, project) / base

    return ratio


def smoothing_probe(alpha: float, s0: float, s1: float, corpus_size: int = 50,
                    grid: GridSpec | None = None, seed: int = 0, fields=None,
                    t_grid=None) -> ProbeReport:
    """Empirical suprema for the smoothing estimates of the fractional heat flow.

    Over a random band-limited corpus (or ``fields`` if given) and the log time
    grid, reports

    * ``sup t^{(s1-s0)/(2 alpha)} ||e^{-tL} f||_{B^{s1}} / ||f||_{B^{s0}}``
    * ``sup t^{1/(2 alpha)} ||grad e^{-tL} f||_inf / ||f||_inf`` (and with ``P``)

    The gradient supremum is polished in ``t`` on the maximizing field.
    """
    if s1 < s0:
        raise ValueError("need s0 <= s1")
    if grid is None:
        grid = GridSpec(16)
    if t_grid is None:
        t_grid = heat_time_grid()
    if fields is None:
        rng = np.random.default_rng(seed)
        fields = [random_band_limited(grid, rng) for _ in range(corpus_size)]
    besov_c = 0.0
    grad_best = (-1.0, None)
    pgrad_best = (-1.0, None)
    for f in fields:
        besov_c = max(besov_c, _besov_ratio_sup(f, alpha, s0, s1, t_grid))
        for project in (False, True):
            ratio = _gradient_ratio(f, alpha, project)
            v = max(ratio(t) for t in t_grid)
            if project and v > pgrad_best[0]:
                pgrad_best = (v, f)
            if not project and v > grad_best[0]:
                grad_best = (v, f)
    grad_c, t_arg = sup_over_time(_gradient_ratio(grad_best[1], alpha, False), t_grid)
    pgrad_c, _ = sup_over_time(_gradient_ratio(pgrad_best[1], alpha, True), t_grid)
    return ProbeReport(alpha, s0, s1, len(fields), besov_c, grad_c, pgrad_c, t_arg)

"""Dyadic frequency blocks and the two characterizations of negative Besov norms.

The radial cutoff ``chi`` equals 1 on ``|xi| <= 3/4`` and 0 on ``|xi| >= 1``;
shells are ``phi(2^-j k)`` with ``phi(xi) = chi(xi/2) - chi(xi)``.  Blocks are
applied as Fourier multipliers; only the ``B^s_{inf,inf}`` branch is provided.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import GridSpec, SpectralField

__all__ = [
    "chi",
    "phi",
    "DyadicFilter",
    "BesovReport",
    "build_filter",
    "dyadic_block",
    "besov_norm_lp",
    "besov_norm_heat",
    "besov_report",
    "heat_time_grid",
    "sup_over_time",
]

MEAN_TOL = 1e-13


def _q(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a, b = _q(x), _q(1.0 - x)
    return a / (a + b)


def chi(r):
    """Radial cutoff evaluated at ``r = |xi|``."""
    r = np.abs(np.asarray(r, dtype=float))
    return _smooth_step((1.0 - r) / 0.25)


def phi(r):
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


@dataclass(frozen=True)
class DyadicFilter:
    grid: GridSpec
    j_min: int
    j_max: int
    shell_multipliers: dict = field(repr=False, compare=False)

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def partition_sum(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return sum(phi(r / 2.0**j) for j in self.j_range)


@functools.lru_cache(maxsize=8)
def build_filter(grid: GridSpec) -> DyadicFilter:
    """Shells from ``j = 0`` (touching ``|k| = 1``) to ``ceil(log2(cutoff)) + 1``."""
    j_max = math.ceil(math.log2(grid.cutoff)) + 1
    kmag = grid.kmag
    shells = {}
    for j in range(0, j_max + 1):
        m = phi(kmag / 2.0**j)
        m[0, 0, 0] = 0.0
        m.setflags(write=False)
        shells[j] = m
    return DyadicFilter(grid, 0, j_max, shells)


def _require_mean_zero(f: SpectralField):
    scale = max(np.max(np.abs(f.coeffs)), 1e-300)
    if np.max(np.abs(f.mean_mode)) > MEAN_TOL * scale:
        raise ValueError("homogeneous Besov quantities require a mean-zero field")


def dyadic_block(f: SpectralField, j: int) -> SpectralField:
    """Littlewood-Paley block ``Delta_j f``; out-of-range ``j`` gives zero."""
    _require_mean_zero(f)
    filt = build_filter(f.grid)
    if j not in filt.shell_multipliers:
        return SpectralField.zeros(f.grid)
    return SpectralField(f.grid, f.coeffs * filt.shell_multipliers[j], f.solenoidal)


def besov_norm_lp(f: SpectralField, s: float) -> float:
    """``sup_j 2^{sj} ||Delta_j f||_inf`` over the filter's shell range."""
    _require_mean_zero(f)
    filt = build_filter(f.grid)
    best = 0.0
    for j in filt.j_range:
        block = SpectralField(f.grid, f.coeffs * filt.shell_multipliers[j])
        best = max(best, 2.0 ** (s * j) * block.sup_norm())
    return best


def heat_time_grid(count: int = 49, t_min: float = 1e-6, t_max: float = 1e2) -> np.ndarray:
    return np.logspace(math.log10(t_min), math.log10(t_max), count)


def sup_over_time(func, t_grid, refine: bool = True, bound=None) -> tuple[float, float]:
    """Maximize ``func(t)`` over ``t_grid``, optionally polishing the best point.

    The polish is a bounded Brent search in ``log t`` between the neighbours of
    the best grid point; the grid maximum is a lower bound that is never lost.
    ``bound(t) >= func(t)`` is an optional cheap majorant: grid points whose
    bound cannot beat the running maximum are skipped.  Returns
    ``(sup, argmax_t)``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    vals = np.full(len(t_grid), -np.inf)
    if bound is None:
        order = range(len(t_grid))
        caps = None
    else:
        caps = np.array([bound(t) for t in t_grid])
        order = np.argsort(-caps, kind="stable")
    running = -np.inf
    for i in order:
        if caps is not None and caps[i] <= running:
            break
        vals[i] = func(t_grid[i])
        running = max(running, vals[i])
    i = int(np.argmax(vals))
    best, t_best = float(vals[i]), float(t_grid[i])
    if not refine or best <= 0:
        return best, t_best
    lo = math.log(t_grid[max(i - 1, 0)])
    hi = math.log(t_grid[min(i + 1, len(t_grid) - 1)])
    res = minimize_scalar(lambda y: -func(math.exp(y)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    if -res.fun > best:
        best, t_best = float(-res.fun), float(math.exp(res.x))
    return best, t_best


def besov_norm_heat(f: SpectralField, s: float, alpha: float, t_grid=None,
                    refine: bool = True) -> float:
    """``sup_t t^{-s/(2 alpha)} ||exp(-t (-Lap)^alpha) f||_inf`` for ``s < 0``."""
    return _heat_norm(f, s, alpha, t_grid, refine)[0]


def _heat_norm(f, s, alpha, t_grid, refine):
    if s >= 0:
        raise ValueError("the heat characterization needs s < 0")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    _require_mean_zero(f)
    if t_grid is None:
        t_grid = heat_time_grid()
    sym = f.grid.kmag ** (2 * alpha)

    def weighted(t):
        g = SpectralField(f.grid, f.coeffs * np.exp(-t * sym))
        return t ** (-s / (2 * alpha)) * g.sup_norm()

    # |f(x)| <= sum over the full lattice of |fhat|; the half spectrum counts twice
    # except on the self-conjugate planes, so doubling everything stays an upper bound
    amp = 2 * np.max(np.abs(f.coeffs), axis=0).ravel()
    sym_flat = sym.ravel()

    def majorant(t):
        return t ** (-s / (2 * alpha)) * float(np.dot(amp, np.exp(-t * sym_flat)))

    if not np.any(f.coeffs):
        return 0.0, float(t_grid[0])
    return sup_over_time(weighted, t_grid, refine, majorant)


@dataclass(frozen=True)
class BesovReport:
    order_s: float
    alpha: float
    lp_norm: float
    heat_norm: float
    ratio: float
    t_grid: np.ndarray = field(repr=False, compare=False)
    t_argmax: float = float("nan")


def besov_report(f: SpectralField, s: float, alpha: float = 1.0, method: str = "both",
                 t_grid=None, refine: bool = True) -> BesovReport:
    if t_grid is None:
        t_grid = heat_time_grid()
    lp = besov_norm_lp(f, s) if method in ("lp", "both") else float("nan")
    heat, t_arg = (_heat_norm(f, s, alpha, t_grid, refine) if method in ("heat", "both")
                   else (float("nan"), float("nan")))
    if method == "both":
        ratio = heat / lp if lp > 0 else float("nan")
    else:
        ratio = float("nan")
    return BesovReport(s, alpha, lp, heat, ratio, np.asarray(t_grid), t_arg)

"""Initial-data generators (all outputs are mean-zero and band-limited)."""
from __future__ import annotations

import numpy as np

from .grid import GridSpec, SpectralField, _leray_coeffs, _rfft

__all__ = ["single_mode", "mode_pair", "taylor_green", "random_band_limited", "make_initial"]


def _mean_free(c: np.ndarray) -> np.ndarray:
    # rounding leaves ~1e-18 in the mean mode, which the heat flow never damps
    c[:, 0, 0, 0] = 0.0
    return c


def single_mode(grid: GridSpec, k=(1, 0, 0), direction=(0, 0, 1), amplitude: float = 1.0) -> SpectralField:
    """``amplitude * direction * sin(k.x)``; solenoidal when ``direction . k == 0``."""
    k = np.asarray(k, dtype=float)
    d = np.asarray(direction, dtype=float)
    x = grid.coordinates()
    phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2]
    vals = amplitude * d[:, None, None, None] * np.sin(phase)[None]
    sol = abs(float(k @ d)) < 1e-14
    return SpectralField(grid, _mean_free(_rfft(vals)), solenoidal=sol)


def mode_pair(grid: GridSpec, amplitude: float = 1.0) -> SpectralField:
    """``amplitude * (sin x2, 0, sin x1)``: two orthogonal shear modes at |k| = 1.

    Unlike a single plane wave this is not a stationary point of the Hall
    nonlinearity, so it is the smallest useful test datum for EMHD runs.
    """
    x = grid.coordinates()
    vals = amplitude * np.stack([np.sin(x[1]), np.zeros(grid.shape), np.sin(x[0])])
    return SpectralField(grid, _mean_free(_rfft(vals)), solenoidal=True)


def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> SpectralField:
    """Two-dimensional Taylor-Green cell ``A(sin x1 cos x2, -cos x1 sin x2, 0)``."""
    x = grid.coordinates()
    vals = amplitude * np.stack([
        np.sin(x[0]) * np.cos(x[1]),
        -np.cos(x[0]) * np.sin(x[1]),
        np.zeros(grid.shape),
    ])
    return SpectralField(grid, _mean_free(_rfft(vals)), solenoidal=True)


def random_band_limited(
    grid: GridSpec,
    rng: np.random.Generator,
    amplitude: float = 1.0,
    kmax: float | None = None,
    kmin: float = 1.0,
    slope: float = 0.0,
    solenoidal: bool = True,
) -> SpectralField:
    """Gaussian random field supported on ``kmin <= |k| <= kmax``.

    Mode variances scale like ``|k|**(2*slope)``.  The result is rescaled so its
    grid sup norm equals ``amplitude``.
    """
    if kmax is None:
        kmax = grid.cutoff
    shape = (3,) + grid.spectral_shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kmag = grid.kmag
    support = (kmag >= kmin) & (kmag <= kmax) & grid.dealias_mask
    weight = np.where(support, np.power(np.where(kmag > 0, kmag, 1.0), slope), 0.0)
    c = c * weight
    if solenoidal:
        c = _leray_coeffs(grid, c)
    # round trip through real space restores conjugate symmetry on the kz = 0 plane
    f = SpectralField(grid, c)
    f = SpectralField(grid, _rfft(f.values) * support, solenoidal=solenoidal)
    norm = f.sup_norm()
    if norm == 0:
        return f
    return f * (amplitude / norm)


def make_initial(desc: dict, grid: GridSpec, rng: np.random.Generator) -> SpectralField:
    """Build a field from a generator description such as ``{"kind": "single-mode"}``."""
    kind = desc.get("kind")
    amp = float(desc.get("amplitude", 1.0))
    if kind == "single-mode":
        return single_mode(grid, desc.get("k", (1, 0, 0)), desc.get("direction", (0, 0, 1)), amp)
    if kind == "mode-pair":
        return mode_pair(grid, amp)
    if kind == "taylor-green-like":
        return taylor_green(grid, amp)
    if kind == "random-band-limited":
        return random_band_limited(grid, rng, amp, kmax=desc.get("band"),
                                   slope=float(desc.get("slope", 0.0)))
    if kind == "zero":
        return SpectralField.zeros(grid)
    raise ValueError(f"unknown initial-data generator {kind!r}")

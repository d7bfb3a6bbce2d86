"""Periodic-grid spectral representation of vector and scalar fields.

Fields live on the torus [0, 2pi)^3 sampled at ``n`` points per dimension.
Coefficients are stored in the half-spectrum layout produced by a real FFT
along the last axis, normalized so that

    f(x) = sum_k fhat(k) exp(i k.x),

i.e. ``fhat`` is the forward transform divided by ``n**3``.  Conjugate symmetry
is therefore implicit and real-space values are always real.

Derivative multipliers use wavenumbers with the Nyquist entry set to zero (the
usual convention that keeps odd derivatives real).  Even-order multipliers such
as the fractional Laplacian use the true integer wavevector.
"""
from __future__ import annotations

import functools
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "SpectralField",
    "ScalarField",
    "fft_workers",
    "forward_transform",
    "from_samples",
    "inverse_transform",
    "forward_scalar",
    "curl",
    "divergence",
    "gradient",
    "laplacian",
    "leray_project",
    "dealias",
    "is_band_limited",
    "l2_inner",
    "momentum_nonlinearity",
    "recover_pressure",
    "packed_modes",
]

SOLENOIDAL_RTOL = 1e-12


def fft_workers() -> int:
    """Worker count for the FFT backend, capped by ``HALLMHD_THREADS``."""
    raw = os.environ.get("HALLMHD_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _rfft(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def _irfft(coeffs: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfftn(coeffs, s=(n, n, n), axes=(-3, -2, -1), norm="forward",
                       workers=fft_workers())


@functools.lru_cache(maxsize=8)
def _wavenumbers(n: int, dealias_fraction: float):
    k_full = np.fft.fftfreq(n, 1.0 / n)
    k_half = np.fft.rfftfreq(n, 1.0 / n)
    k1 = k_full[:, None, None]
    k2 = k_full[None, :, None]
    k3 = k_half[None, None, :]
    kd_full = k_full.copy()
    kd_full[n // 2] = 0.0
    kd_half = k_half.copy()
    kd_half[-1] = 0.0
    kd = (kd_full[:, None, None], kd_full[None, :, None], kd_half[None, None, :])
    shape = (n, n, n // 2 + 1)
    kmag = np.sqrt(k1**2 + k2**2 + k3**2)
    kd_sq = np.broadcast_to(kd[0]**2 + kd[1]**2 + kd[2]**2, shape).copy()
    cutoff = dealias_fraction * n / 2
    mask = (np.abs(k1) <= cutoff) & (np.abs(k2) <= cutoff) & (np.abs(k3) <= cutoff)
    mask = np.broadcast_to(mask, shape).copy()
    # Nyquist planes are never kept: for n >= 8 they lie beyond the 2/3 cutoff.
    packed = np.flatnonzero(mask)
    arrays = {
        "k": (k1, k2, k3),
        "kd": kd,
        "kmag": kmag,
        "kd_sq": kd_sq,
        "mask": mask,
        "packed": packed,
    }
    for a in (k1, k2, k3, *kd, kmag, kd_sq, mask, packed):
        a.setflags(write=False)
    return arrays


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, 2pi)^3."""

    n: int = 32
    box_length: float = field(default=2 * np.pi, repr=False)
    dealias_fraction: float = field(default=2.0 / 3.0, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n % 2:
            raise ValueError(f"n_per_dim must be an even integer >= 8, got {self.n!r}")
        if not np.isclose(self.box_length, 2 * np.pi):
            raise ValueError("box_length is fixed at 2*pi")
        if not np.isclose(self.dealias_fraction, 2.0 / 3.0):
            raise ValueError("dealias_fraction is fixed at 2/3")

    @property
    def _arrays(self):
        return _wavenumbers(int(self.n), float(self.dealias_fraction))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def k(self):
        """True integer wavevector components, broadcastable to spectral_shape."""
        return self._arrays["k"]

    @property
    def kd(self):
        """Derivative wavenumbers (Nyquist entries zeroed)."""
        return self._arrays["kd"]

    @property
    def kmag(self) -> np.ndarray:
        return self._arrays["kmag"]

    @property
    def kd_sq(self) -> np.ndarray:
        return self._arrays["kd_sq"]

    @property
    def dealias_mask(self) -> np.ndarray:
        return self._arrays["mask"]

    @property
    def cutoff(self) -> float:
        """Largest retained |k_i| (inclusive bound) under the 2/3 rule."""
        return self.dealias_fraction * self.n / 2

    @property
    def packed_index(self) -> np.ndarray:
        """Flat indices (into spectral_shape) of the modes kept by dealiasing."""
        return self._arrays["packed"]

    @property
    def n_packed(self) -> int:
        return self.packed_index.size

    def coordinates(self):
        x = np.arange(self.n) * (self.box_length / self.n)
        return np.meshgrid(x, x, x, indexing="ij")

    def pack(self, coeffs: np.ndarray) -> np.ndarray:
        """Gather the retained modes of ``(..., n, n, n//2+1)`` coefficients."""
        lead = coeffs.shape[:-3]
        return coeffs.reshape(lead + (-1,))[..., self.packed_index]

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        lead = packed.shape[:-1]
        out = np.zeros(lead + (int(np.prod(self.spectral_shape)),), dtype=complex)
        out[..., self.packed_index] = packed
        return out.reshape(lead + self.spectral_shape)


class SpectralField:
    """Three-component real vector field held as Fourier coefficients.

    ``coeffs`` has shape ``(3, n, n, n//2+1)`` and is read-only.  Real-space
    values are computed on first access and cached.
    """

    __slots__ = ("grid", "coeffs", "solenoidal", "_values")

    def __init__(self, grid: GridSpec, coeffs: np.ndarray, solenoidal: bool = False):
        coeffs = np.array(coeffs, dtype=complex, copy=True)
        if coeffs.shape != (3,) + grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid "
                f"{(3,) + grid.spectral_shape}"
            )
        coeffs.setflags(write=False)
        self.grid = grid
        self.coeffs = coeffs
        self.solenoidal = bool(solenoidal)
        self._values = None

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((3,) + grid.spectral_shape, dtype=complex), solenoidal=True)

    @property
    def mean_mode(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].copy()

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = _irfft(self.coeffs, self.grid.n)
            v.setflags(write=False)
            self._values = v
        return self._values

    def full_coefficients(self) -> np.ndarray:
        """Coefficients on the full ``(3, n, n, n)`` integer-wavevector lattice."""
        return np.fft.fftn(self.values, axes=(1, 2, 3)) / self.grid.n**3

    def sup_norm(self) -> float:
        """Max over grid points and components of the absolute value."""
        return float(np.max(np.abs(self.values)))

    def divergence_residual(self) -> float:
        """max_k |k.fhat(k)| relative to max_k |fhat(k)| (0 for the zero field)."""
        kd = self.grid.kd
        div = kd[0] * self.coeffs[0] + kd[1] * self.coeffs[1] + kd[2] * self.coeffs[2]
        scale = np.max(np.abs(self.coeffs))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(div)) / scale)

    def check_solenoidal(self, rtol: float = SOLENOIDAL_RTOL) -> bool:
        return self.divergence_residual() <= rtol

    def with_solenoidal(self, flag: bool = True) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs, solenoidal=flag)

    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is not None:
            return bad
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is not None:
            return bad
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.solenoidal and other.solenoidal)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * c, self.solenoidal)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.solenoidal)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, solenoidal={self.solenoidal})"


class ScalarField:
    """Real scalar field held as Fourier coefficients of shape ``(n, n, n//2+1)``."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: GridSpec, coeffs: np.ndarray):
        coeffs = np.array(coeffs, dtype=complex, copy=True)
        if coeffs.shape != grid.spectral_shape:
            raise ValueError(f"coefficient shape {coeffs.shape} does not match grid")
        coeffs.setflags(write=False)
        self.grid = grid
        self.coeffs = coeffs

    @property
    def values(self) -> np.ndarray:
        return _irfft(self.coeffs, self.grid.n)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def forward_transform(values, grid: GridSpec | None = None, solenoidal: bool = False) -> SpectralField:
    """Real samples of shape ``(3, n, n, n)`` to a :class:`SpectralField`."""
    values = np.asarray(values, dtype=float)
    if grid is None:
        if values.ndim != 4 or values.shape[0] != 3:
            raise ValueError(f"expected samples of shape (3, n, n, n), got {values.shape}")
        grid = GridSpec(values.shape[1])
    if values.shape != (3,) + grid.shape:
        raise ValueError(f"sample shape {values.shape} does not match grid {(3,) + grid.shape}")
    return SpectralField(grid, _rfft(values), solenoidal=solenoidal)


def from_samples(values, grid: GridSpec, solenoidal: bool = False) -> SpectralField:
    """Like :func:`forward_transform`, but ``values`` of the result are the given samples.

    The inverse transform of the coefficients agrees with the samples only to
    rounding; keeping the originals makes snapshot round trips bit-exact.
    """
    f = forward_transform(values, grid, solenoidal)
    v = np.array(values, dtype=float, copy=True)
    v.setflags(write=False)
    f._values = v
    return f


def inverse_transform(f: SpectralField) -> np.ndarray:
    return np.array(f.values)


def forward_scalar(values, grid: GridSpec | None = None) -> ScalarField:
    values = np.asarray(values, dtype=float)
    if grid is None:
        grid = GridSpec(values.shape[0])
    if values.shape != grid.shape:
        raise ValueError(f"sample shape {values.shape} does not match grid {grid.shape}")
    return ScalarField(grid, _rfft(values))


def _curl_coeffs(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.kd
    out = np.empty_like(c)
    out[0] = 1j * (k2 * c[2] - k3 * c[1])
    out[1] = 1j * (k3 * c[0] - k1 * c[2])
    out[2] = 1j * (k1 * c[1] - k2 * c[0])
    return out


def curl(f: SpectralField) -> SpectralField:
    """Spectral curl, multiplier ``i k x fhat``."""
    return SpectralField(f.grid, _curl_coeffs(f.grid, f.coeffs), solenoidal=True)


def divergence(f: SpectralField) -> ScalarField:
    k1, k2, k3 = f.grid.kd
    c = f.coeffs
    return ScalarField(f.grid, 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2]))


def gradient(p: ScalarField) -> SpectralField:
    k1, k2, k3 = p.grid.kd
    c = p.coeffs
    return SpectralField(p.grid, np.stack([1j * k1 * c, 1j * k2 * c, 1j * k3 * c]))


def laplacian(p: ScalarField) -> ScalarField:
    """Spectral Laplacian ``-|k|^2 phat`` with the derivative wavenumbers."""
    return ScalarField(p.grid, -p.grid.kd_sq * p.coeffs)


def _leray_coeffs(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.kd
    ksq = grid.kd_sq
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    kdotc = (k1 * c[0] + k2 * c[1] + k3 * c[2]) * inv
    return np.stack([c[0] - k1 * kdotc, c[1] - k2 * kdotc, c[2] - k3 * kdotc])


def leray_project(f: SpectralField) -> SpectralField:
    """Apply ``I - k k^T/|k|^2`` mode by mode; the mean mode passes through."""
    return SpectralField(f.grid, _leray_coeffs(f.grid, f.coeffs), solenoidal=True)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask, f.solenoidal)


def is_band_limited(f: SpectralField, rtol: float = 1e-13) -> bool:
    """True when all content outside the 2/3 cutoff is negligible."""
    outside = np.abs(f.coeffs[:, ~f.grid.dealias_mask])
    scale = np.max(np.abs(f.coeffs))
    return scale == 0 or outside.size == 0 or float(outside.max()) <= rtol * scale


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """Grid L^2 inner product normalized by the box volume."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return float(np.sum(f.values * g.values) / f.grid.n**3)


def _product_coeffs(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _rfft(a * b) * grid.dealias_mask


def momentum_nonlinearity(u: SpectralField, b: SpectralField) -> SpectralField:
    """``div(u (x) u) - div(b (x) b)``, evaluated pseudo-spectrally and dealiased."""
    if u.grid != b.grid:
        raise ValueError("grid mismatch")
    grid = u.grid
    uv, bv = u.values, b.values
    tensor = np.empty((3, 3) + grid.shape)
    for i in range(3):
        for j in range(i, 3):
            tensor[i, j] = uv[i] * uv[j] - bv[i] * bv[j]
            tensor[j, i] = tensor[i, j]
    that = _rfft(tensor) * grid.dealias_mask
    k = grid.kd
    out = np.stack([1j * (k[0] * that[0, j] + k[1] * that[1, j] + k[2] * that[2, j])
                    for j in range(3)])
    return SpectralField(grid, out)


def recover_pressure(u: SpectralField, b: SpectralField) -> ScalarField:
    """Pressure solving ``-Lap p = div N`` with ``N`` the momentum nonlinearity.

    With this sign ``N + grad p`` is divergence free; ``p`` has zero mean.
    """
    nl = momentum_nonlinearity(u, b)
    grid = u.grid
    k1, k2, k3 = grid.kd
    c = nl.coeffs
    ksq = grid.kd_sq
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    p = 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2]) * inv
    return ScalarField(grid, p)


@functools.lru_cache(maxsize=8)
def packed_modes(grid: GridSpec) -> dict:
    """Contiguous per-mode arrays over the retained (dealiased) modes."""
    idx = grid.packed_index
    shape = grid.spectral_shape
    kd = [np.ascontiguousarray(np.broadcast_to(a, shape).ravel()[idx]) for a in grid.kd]
    ksq = grid.kd_sq.ravel()[idx]
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    out = {
        "kd1": kd[0], "kd2": kd[1], "kd3": kd[2],
        "inv_ksq": np.ascontiguousarray(inv),
        "kmag": np.ascontiguousarray(grid.kmag.ravel()[idx]),
    }
    for a in out.values():
        a.setflags(write=False)
    return out

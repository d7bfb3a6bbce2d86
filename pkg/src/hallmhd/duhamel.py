"""Nonlinear tensors and the Duhamel bilinear forms over time trajectories.

A :class:`Trajectory` stores only the modes kept by the 2/3 rule, packed into
an array of shape ``(M+1, 3, n_packed)``.  Time integrals use the composite
trapezoid rule on the uniform nodes ``s_m = m T / M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import (
    GridSpec,
    SpectralField,
    _curl_coeffs,
    _rfft,
    is_band_limited,
    packed_modes,
)

__all__ = [
    "Trajectory",
    "QuadratureSpec",
    "advection_divergence",
    "hall_tensor",
    "hall_identity_check",
    "projected_sources",
    "duhamel_integral",
    "bilinear_B",
    "bilinear_B_path",
    "hall_B",
    "hall_B_path",
]


@dataclass(frozen=True)
class QuadratureSpec:
    node_count: int = 64
    rule: str = "trapezoid"

    def __post_init__(self):
        if self.rule != "trapezoid":
            raise ValueError("only the composite trapezoid rule is implemented")
        if self.node_count < 8:
            raise ValueError("quadrature needs at least 8 intervals")


class Trajectory:
    """Band-limited field values at the nodes ``m T / M``, ``m = 0..M``."""

    __slots__ = ("grid", "horizon", "packed", "solenoidal")

    def __init__(self, grid: GridSpec, horizon: float, packed: np.ndarray, solenoidal: bool = True):
        packed = np.array(packed, dtype=complex, copy=True)
        if packed.ndim != 3 or packed.shape[1:] != (3, grid.n_packed):
            raise ValueError(f"packed trajectory shape {packed.shape} does not match grid")
        if packed.shape[0] < 2:
            raise ValueError("a trajectory needs at least two nodes")
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        packed.setflags(write=False)
        self.grid = grid
        self.horizon = float(horizon)
        self.packed = packed
        self.solenoidal = bool(solenoidal)

    @property
    def node_count(self) -> int:
        """M, the number of intervals (there are M + 1 nodes)."""
        return self.packed.shape[0] - 1

    @property
    def step(self) -> float:
        return self.horizon / self.node_count

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.node_count + 1) * self.step

    @classmethod
    def zeros(cls, grid: GridSpec, horizon: float, node_count: int) -> "Trajectory":
        return cls(grid, horizon, np.zeros((node_count + 1, 3, grid.n_packed), dtype=complex))

    @classmethod
    def constant(cls, f: SpectralField, horizon: float, node_count: int) -> "Trajectory":
        _require_band_limited(f)
        p = f.grid.pack(f.coeffs)
        return cls(f.grid, horizon, np.broadcast_to(p, (node_count + 1,) + p.shape),
                   f.solenoidal)

    @classmethod
    def from_fields(cls, fields, horizon: float) -> "Trajectory":
        fields = list(fields)
        grid = fields[0].grid
        for f in fields:
            if f.grid != grid:
                raise ValueError("grid mismatch")
            _require_band_limited(f)
        return cls(grid, horizon, np.stack([grid.pack(f.coeffs) for f in fields]),
                   all(f.solenoidal for f in fields))

    @classmethod
    def caloric(cls, f: SpectralField, horizon: float, node_count: int, alpha: float,
                kappa: float) -> "Trajectory":
        """``exp(-kappa s (-Lap)^alpha) f`` at every node."""
        _require_band_limited(f)
        grid = f.grid
        kmag = packed_modes(grid)["kmag"]
        s = np.arange(node_count + 1) * (horizon / node_count)
        decay = np.exp(-kappa * s[:, None] * kmag[None, :] ** (2 * alpha))
        p = grid.pack(f.coeffs)
        return cls(grid, horizon, decay[:, None, :] * p[None], f.solenoidal)

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.grid.unpack(self.packed[m]), self.solenoidal)

    def values(self, m: int) -> np.ndarray:
        return self.field(m).values

    def sup_norms(self) -> np.ndarray:
        return np.array([self.field(m).sup_norm() for m in range(self.node_count + 1)])

    def is_zero(self) -> bool:
        return not np.any(self.packed)

    def compatible(self, other: "Trajectory") -> bool:
        return (self.grid == other.grid and self.node_count == other.node_count
                and np.isclose(self.horizon, other.horizon, rtol=1e-14, atol=0))

    def _check(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        if not self.compatible(other):
            raise ValueError("trajectories differ in grid, horizon or node count")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is not None:
            return bad
        return Trajectory(self.grid, self.horizon, self.packed + other.packed,
                          self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is not None:
            return bad
        return Trajectory(self.grid, self.horizon, self.packed - other.packed,
                          self.solenoidal and other.solenoidal)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Trajectory(self.grid, self.horizon, self.packed * c, self.solenoidal)

    __rmul__ = __mul__

    def __neg__(self):
        return Trajectory(self.grid, self.horizon, -self.packed, self.solenoidal)

    def __repr__(self):
        return f"Trajectory(n={self.grid.n}, T={self.horizon}, M={self.node_count})"


def _require_band_limited(f: SpectralField):
    if not is_band_limited(f):
        raise ValueError("field has content beyond the 2/3 cutoff; dealias it first")


def _tensor_hat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dealiased transform of the real-space outer product ``a_i b_j``."""
    t = a[:, None] * b[None, :]
    return _rfft(t)


def _divergence_coeffs(grid: GridSpec, t: np.ndarray) -> np.ndarray:
    k = grid.kd
    return np.stack([1j * (k[0] * t[0, j] + k[1] * t[1, j] + k[2] * t[2, j]) for j in range(3)])


def advection_divergence(f: SpectralField, g: SpectralField) -> SpectralField:
    """``div(f (x) g)`` (contracting the first index), dealiased."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    grid = f.grid
    t = _tensor_hat(f.values, g.values) * grid.dealias_mask
    return SpectralField(grid, _divergence_coeffs(grid, t))


def hall_tensor(b: SpectralField) -> SpectralField:
    """``curl div(b (x) b)`` for solenoidal ``b``, dealiased."""
    if not b.check_solenoidal():
        raise ValueError("the Hall tensor identity needs a solenoidal field")
    d = advection_divergence(b, b)
    return SpectralField(b.grid, _curl_coeffs(b.grid, d.coeffs), solenoidal=True)


def hall_identity_check(b: SpectralField) -> float:
    """Relative sup-norm gap between ``curl((curl b) x b)`` and ``curl div(b (x) b)``.

    The two sides are built by separate pipelines: a real-space cross product of
    the current with ``b``, and a tensor divergence.
    """
    if not b.check_solenoidal():
        raise ValueError("the Hall tensor identity needs a solenoidal field")
    grid = b.grid
    lhs_tensor = hall_tensor(b)
    j = SpectralField(grid, _curl_coeffs(grid, b.coeffs)).values
    bv = b.values
    cross = np.stack([
        j[1] * bv[2] - j[2] * bv[1],
        j[2] * bv[0] - j[0] * bv[2],
        j[0] * bv[1] - j[1] * bv[0],
    ])
    cross_hat = _rfft(cross) * grid.dealias_mask
    lhs_cross = SpectralField(grid, _curl_coeffs(grid, cross_hat))
    scale = max(lhs_cross.sup_norm(), lhs_tensor.sup_norm())
    if scale == 0:
        return 0.0
    return (lhs_cross - lhs_tensor).sup_norm() / scale


def _node_values(traj: Trajectory, m: int) -> np.ndarray:
    return traj.values(m)


def projected_sources(f_traj: Trajectory, g_traj: Trajectory, with_curl: bool = False,
                      backend=None) -> np.ndarray:
    """Packed ``[curl] P div(f (x) g)`` at every node, shape ``(M+1, 3, n_packed)``."""
    if not f_traj.compatible(g_traj):
        raise ValueError("trajectories differ in grid, horizon or node count")
    grid = f_traj.grid
    pm = packed_modes(grid)
    out = np.zeros_like(f_traj.packed)
    if f_traj.is_zero() or g_traj.is_zero():
        return out
    same = f_traj is g_traj
    for m in range(f_traj.node_count + 1):
        fv = _node_values(f_traj, m)
        gv = fv if same else _node_values(g_traj, m)
        t = grid.pack(_tensor_hat(fv, gv))
        out[m] = kernels.project_divergence(t, pm["kd1"], pm["kd2"], pm["kd3"], pm["inv_ksq"],
                                            with_curl, backend=backend)
    return out


def duhamel_integral(sources: np.ndarray, grid: GridSpec, step: float, alpha: float,
                     kappa: float, backend=None) -> np.ndarray:
    """Trapezoid ``int_0^{t_m} exp(-kappa (t_m - s)(-Lap)^alpha) F(s) ds`` at all nodes."""
    kmag = packed_modes(grid)["kmag"]
    decay = np.exp(-kappa * step * kmag ** (2 * alpha))
    return kernels.duhamel_trapezoid(sources, decay, step, backend=backend)


def _check_pair(f_traj, g_traj, t_node):
    if not f_traj.compatible(g_traj):
        raise ValueError("trajectories differ in grid, horizon or node count")
    QuadratureSpec(f_traj.node_count)
    if not 0 <= t_node <= f_traj.node_count:
        raise IndexError(f"t_node {t_node} outside 0..{f_traj.node_count}")


def bilinear_B_path(alpha: float, kappa: float, f_traj: Trajectory, g_traj: Trajectory,
                    backend=None) -> Trajectory:
    """``int_0^t exp(-kappa (t-s)(-Lap)^alpha) P div(f (x) g)(s) ds`` at every node."""
    _check_pair(f_traj, g_traj, 0)
    src = projected_sources(f_traj, g_traj, backend=backend)
    out = duhamel_integral(src, f_traj.grid, f_traj.step, alpha, kappa, backend=backend)
    return Trajectory(f_traj.grid, f_traj.horizon, out, solenoidal=True)


def bilinear_B(alpha: float, kappa: float, f_traj: Trajectory, g_traj: Trajectory,
               t_node: int) -> SpectralField:
    _check_pair(f_traj, g_traj, t_node)
    return bilinear_B_path(alpha, kappa, f_traj, g_traj).field(t_node)


def hall_B_path(alpha2: float, mu: float, eta: float, b_traj: Trajectory,
                backend=None) -> Trajectory:
    """``eta int_0^t exp(-mu (t-s)(-Lap)^alpha2) curl div(b (x) b)(s) ds`` at every node."""
    _check_pair(b_traj, b_traj, 0)
    if eta == 0:
        return Trajectory.zeros(b_traj.grid, b_traj.horizon, b_traj.node_count)
    if not b_traj.solenoidal:
        raise ValueError("the Hall form needs a solenoidal trajectory")
    src = projected_sources(b_traj, b_traj, with_curl=True, backend=backend)
    out = duhamel_integral(src, b_traj.grid, b_traj.step, alpha2, mu, backend=backend)
    return Trajectory(b_traj.grid, b_traj.horizon, eta * out, solenoidal=True)


def hall_B(alpha2: float, mu: float, eta: float, b_traj: Trajectory, t_node: int) -> SpectralField:
    _check_pair(b_traj, b_traj, t_node)
    return hall_B_path(alpha2, mu, eta, b_traj).field(t_node)

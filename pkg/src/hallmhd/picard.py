"""Mild-solution map, time-weighted path norms and the fixed-point solver.

The mild map acts on a pair of trajectories ``(u, b)``::

    S1 = e^{-nu t L1} u0 + int e^{-nu (t-s) L1} P div(b (x) b - u (x) u) ds
    S2 = e^{-mu t L2} b0 + int e^{-mu (t-s) L2} [P div(b (x) u - u (x) b)
                                                   - eta curl div(b (x) b)] ds

with ``Lk = (-Lap)^alpha_k``.  Path norms weight ``||f(t)||_inf`` by
``t^((2 alpha1 - gamma)/(2 alpha1))`` (velocity) and
``t^((2 alpha2 - beta)/(2 alpha2))`` (magnetic field) and take the max over the
quadrature nodes.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .constraints import InfeasibleParameters, ParamSet, feasibility
from .duhamel import Trajectory, duhamel_integral
from .generators import random_band_limited
from .grid import GridSpec, SpectralField, _rfft, is_band_limited, packed_modes

__all__ = [
    "PathNormSpec",
    "PicardReport",
    "ContractionReport",
    "DependenceReport",
    "NonConvergence",
    "StepperInstability",
    "path_norm",
    "path_norm_X",
    "path_norm_Y",
    "pair_norm",
    "MildMap",
    "apply_S",
    "picard_solve",
    "fixed_point",
    "continuous_dependence_check",
    "contraction_estimate",
    "direct_stepper",
]

log = logging.getLogger(__name__)

DIVERGENCE_STREAK = 3


class NonConvergence(RuntimeError):
    def __init__(self, report: "PicardReport"):
        super().__init__(report.message)
        self.report = report


class StepperInstability(RuntimeError):
    pass


@dataclass(frozen=True)
class PathNormSpec:
    weight_u: float
    weight_b: float
    horizon: float

    @classmethod
    def from_params(cls, p: ParamSet, horizon: float) -> "PathNormSpec":
        return cls(p.weight_u, p.weight_b, horizon)


def path_norm(traj: Trajectory, weight: float) -> float:
    """``max_{m >= 1} s_m^weight ||f(s_m)||_inf``."""
    if weight <= 0:
        raise ValueError("path-norm weight must be positive")
    if traj.is_zero():
        return 0.0
    s = traj.times[1:]
    sup = traj.sup_norms()[1:]
    return float(np.max(s**weight * sup))


def path_norm_X(u_traj: Trajectory, alpha1: float, gamma: float) -> float:
    return path_norm(u_traj, (2 * alpha1 - gamma) / (2 * alpha1))


def path_norm_Y(b_traj: Trajectory, alpha2: float, beta: float) -> float:
    return path_norm(b_traj, (2 * alpha2 - beta) / (2 * alpha2))


def pair_norm(u_traj: Trajectory, b_traj: Trajectory, p: ParamSet) -> float:
    """Norm on the product path space: the sum of the two weighted norms."""
    return path_norm(u_traj, p.weight_u) + path_norm(b_traj, p.weight_b)


def _sym_products(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Six real-space products ``a_i a_j - b_i b_j`` for ``i <= j``."""
    out = np.empty((6,) + a.shape[1:])
    for n, (i, j) in enumerate(_SYM_PAIRS):
        out[n] = a[i] * a[j]
        if b is not None:
            out[n] -= b[i] * b[j]
    return out


_SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_SYM_INDEX = ((0, 1, 2), (1, 3, 4), (2, 4, 5))
_ANTI_PAIRS = ((0, 1), (0, 2), (1, 2))


def _sym_tensor(packed6: np.ndarray) -> np.ndarray:
    return np.stack([np.stack([packed6[_SYM_INDEX[i][j]] for j in range(3)]) for i in range(3)])


def _anti_tensor(packed3: np.ndarray) -> np.ndarray:
    z = np.zeros_like(packed3[0])
    a01, a02, a12 = packed3
    return np.stack([
        np.stack([z, a01, a02]),
        np.stack([-a01, z, a12]),
        np.stack([-a02, -a12, z]),
    ])


def node_sources(grid: GridSpec, uv: np.ndarray | None, bv: np.ndarray | None, eta: float,
                 backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Packed right-hand sides of the two Duhamel integrals at one time.

    Returns ``(P div(b(x)b - u(x)u), P div(b(x)u - u(x)b) - eta curl div(b(x)b))``;
    ``None`` stands for a zero field.
    """
    pm = packed_modes(grid)
    k1, k2, k3, inv = pm["kd1"], pm["kd2"], pm["kd3"], pm["inv_ksq"]
    src_u = np.zeros((3, grid.n_packed), dtype=complex)
    src_b = np.zeros((3, grid.n_packed), dtype=complex)
    if uv is None and bv is None:
        return src_u, src_b
    if bv is None:
        t = _sym_tensor(grid.pack(_rfft(_sym_products(uv))))
        src_u = -kernels.project_divergence(t, k1, k2, k3, inv, False, backend=backend)
        return src_u, src_b
    bb = _sym_tensor(grid.pack(_rfft(_sym_products(bv))))
    if uv is None:
        src_u = kernels.project_divergence(bb, k1, k2, k3, inv, False, backend=backend)
    else:
        t = _sym_tensor(grid.pack(_rfft(_sym_products(bv, uv))))
        src_u = kernels.project_divergence(t, k1, k2, k3, inv, False, backend=backend)
        anti = np.empty((3,) + grid.shape)
        for n, (i, j) in enumerate(_ANTI_PAIRS):
            anti[n] = bv[i] * uv[j] - uv[i] * bv[j]
        t = _anti_tensor(grid.pack(_rfft(anti)))
        src_b = kernels.project_divergence(t, k1, k2, k3, inv, False, backend=backend)
    if eta != 0:
        hall = kernels.project_divergence(bb, k1, k2, k3, inv, True, backend=backend)
        src_b = src_b - eta * hall
    return src_u, src_b


class MildMap:
    """The map ``(u, b) -> S(u, b)`` for fixed data, horizon and node count.

    Caloric extensions of the data are computed once.  ``apply`` returns the
    full map, ``bilinear`` only the quadratic part ``S - (u0~, b0~)``.
    """

    def __init__(self, u0: SpectralField, b0: SpectralField, params: ParamSet, horizon: float,
                 node_count: int, backend=None, check: bool = True):
        if check:
            report = feasibility(params)
            if not report.feasible:
                raise InfeasibleParameters(report)
            if report.analytic_a == 0.0:
                warnings.warn("parameters on the boundary of the admissible region: "
                              "contraction exponent a = 0, small T gives no smallness",
                              RuntimeWarning, stacklevel=2)
        for name, f in (("u0", u0), ("b0", b0)):
            if not is_band_limited(f):
                raise ValueError(f"{name} has content beyond the 2/3 cutoff")
            if np.max(np.abs(f.mean_mode)) > 1e-14 * max(np.max(np.abs(f.coeffs)), 1e-300):
                raise ValueError(f"{name} must have zero mean")
            if np.any(f.coeffs) and not f.check_solenoidal():
                raise ValueError(f"{name} must be solenoidal")
        if u0.grid != b0.grid:
            raise ValueError("grid mismatch")
        self.grid = u0.grid
        self.params = params
        self.horizon = float(horizon)
        self.node_count = int(node_count)
        self.backend = backend
        self.u_caloric = Trajectory.caloric(u0, horizon, node_count, params.alpha1, params.nu)
        self.b_caloric = Trajectory.caloric(b0, horizon, node_count, params.alpha2, params.mu)

    def norm(self, u: Trajectory, b: Trajectory) -> float:
        return pair_norm(u, b, self.params)

    def bilinear(self, u: Trajectory, b: Trajectory) -> tuple[Trajectory, Trajectory]:
        if not (u.compatible(self.u_caloric) and b.compatible(self.u_caloric)):
            raise ValueError("trajectory node structure does not match the map")
        grid, p = self.grid, self.params
        u_zero, b_zero = u.is_zero(), b.is_zero()
        shape = (self.node_count + 1, 3, grid.n_packed)
        src_u = np.zeros(shape, dtype=complex)
        src_b = np.zeros(shape, dtype=complex)
        if not (u_zero and b_zero):
            for m in range(self.node_count + 1):
                uv = None if u_zero else u.values(m)
                bv = None if b_zero else b.values(m)
                src_u[m], src_b[m] = node_sources(grid, uv, bv, p.eta, self.backend)
        h = u.step
        du = duhamel_integral(src_u, grid, h, p.alpha1, p.nu, backend=self.backend)
        db = duhamel_integral(src_b, grid, h, p.alpha2, p.mu, backend=self.backend)
        return (Trajectory(grid, self.horizon, du, True), Trajectory(grid, self.horizon, db, True))

    def apply(self, u: Trajectory, b: Trajectory) -> tuple[Trajectory, Trajectory]:
        du, db = self.bilinear(u, b)
        return self.u_caloric + du, self.b_caloric + db


def apply_S(u_traj: Trajectory, b_traj: Trajectory, u0: SpectralField, b0: SpectralField,
            params: ParamSet, backend=None) -> tuple[Trajectory, Trajectory]:
    """One application of the mild map on the node structure of ``u_traj``."""
    if not u_traj.compatible(b_traj):
        raise ValueError("u and b trajectories differ in node structure")
    smap = MildMap(u0, b0, params, u_traj.horizon, u_traj.node_count, backend)
    return smap.apply(u_traj, b_traj)


@dataclass
class PicardReport:
    iterate_count: int
    increments: list
    contraction_ratios: list
    final_residual: float
    path_norms: tuple
    converged: bool
    status: str
    message: str
    tolerance: float
    data_norm: float
    solution: tuple = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "record": "summary",
            "converged": self.converged,
            "status": self.status,
            "message": self.message,
            "iterate_count": self.iterate_count,
            "final_residual": self.final_residual,
            "path_norm_u": self.path_norms[0],
            "path_norm_b": self.path_norms[1],
            "data_norm": self.data_norm,
            "tolerance": self.tolerance,
        }


def fixed_point(step: Callable, start, norm: Callable, tol: float, max_iter: int,
                path_norms: Callable, on_iteration: Callable | None = None,
                data_norm: float = float("nan"), horizon: float = float("nan")) -> PicardReport:
    """Iterate ``x <- step(x)`` from ``start`` until increments drop below ``tol``.

    ``step`` and ``norm`` act on tuples of trajectories.  Declares divergence
    after ``DIVERGENCE_STREAK`` consecutive non-contracting iterations.  The
    final residual is an independent re-application of ``step``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = start
    increments, ratios = [], []
    status = "max_iter"
    streak = 0
    for n in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            y = step(x)
            d = norm(*(a - b for a, b in zip(y, x)))
        increments.append(d)
        ratio = None
        if n >= 2:
            prev = increments[-2]
            ratio = d / prev if prev > 0 else 0.0
            ratios.append(ratio)
        x = y
        if on_iteration is not None:
            on_iteration({"record": "iteration", "iteration": n, "increment": d,
                          "ratio": ratio})
        if not math.isfinite(d):
            status = "diverged"
            break
        if d <= tol:
            status = "converged"
            break
        streak = streak + 1 if (ratio is not None and ratio >= 1) else 0
        if streak >= DIVERGENCE_STREAK:
            status = "diverged"
            break
    with np.errstate(over="ignore", invalid="ignore"):
        residual = norm(*(a - b for a, b in zip(step(x), x)))
        norms = path_norms(*x)
    converged = status == "converged"
    if converged:
        message = f"converged after {n} iterations"
    elif status == "diverged":
        message = (f"iteration diverged after {n} iterations: data too large for horizon "
                   f"T={horizon:g} (data norm {data_norm:.3g}); shrink T or the data")
    else:
        message = f"no convergence within {max_iter} iterations"
    return PicardReport(n, increments, ratios, float(residual), tuple(norms), converged, status,
                        message, tol, data_norm, solution=x)


def picard_solve(u0: SpectralField, b0: SpectralField, params: ParamSet, T: float, M: int = 64,
                 tol: float = 1e-10, max_iter: int = 50, on_iteration=None,
                 backend=None) -> PicardReport:
    """Fixed point of the mild map started from the caloric extensions.

    ``report.solution`` holds the final ``(u, b)`` trajectories.
    """
    smap = MildMap(u0, b0, params, T, M, backend)
    start = (smap.u_caloric, smap.b_caloric)
    data_norm = smap.norm(*start)

    def path_norms(u, b):
        return (path_norm(u, params.weight_u), path_norm(b, params.weight_b))

    report = fixed_point(lambda x: smap.apply(*x), start, smap.norm, tol, max_iter, path_norms,
                         on_iteration, data_norm, T)
    log.info("picard: %s (residual %.3e)", report.message, report.final_residual)
    return report


@dataclass(frozen=True)
class ContractionReport:
    horizons: tuple
    C0_estimates: tuple
    fitted_a: float
    analytic_a: float
    corpus_size: int
    intercept: float = float("nan")

    @property
    def relative_error(self) -> float:
        if self.analytic_a == 0:
            return float("inf")
        return abs(self.fitted_a - self.analytic_a) / self.analytic_a


def quadratic_ratio(smap: MildMap, u: Trajectory, b: Trajectory) -> float:
    """``||S(u,b) - (u0~, b0~)|| / ||(u,b)||^2`` on the product path space."""
    n = smap.norm(u, b)
    if n == 0:
        return 0.0
    du, db = smap.bilinear(u, b)
    return smap.norm(du, db) / n**2


def contraction_corpus(grid: GridSpec, params: ParamSet, corpus_size: int, seed: int = 0,
                       slope: float | None = None, kmax: float | None = None):
    """Random data pairs for the empirical bilinear bound.

    By default each pair's shell amplitudes grow like ``|k|^(2 alpha - gamma)``
    (resp. ``2 alpha2 - beta``), the scaling of the Besov data space, so that
    the caloric extensions fill the weighted path norms at all resolved times.
    """
    rng = np.random.default_rng(seed)
    su = params.alpha1 * 2 - params.gamma if slope is None else slope
    sb = params.alpha2 * 2 - params.beta if slope is None else slope
    pairs = []
    for _ in range(corpus_size):
        u0 = random_band_limited(grid, rng, kmax=kmax, slope=su)
        b0 = random_band_limited(grid, rng, kmax=kmax, slope=sb)
        pairs.append((u0, b0))
    return pairs


def contraction_estimate(params: ParamSet, T_list, corpus_size: int = 8,
                         grid: GridSpec | None = None, M: int = 32, seed: int = 0,
                         corpus=None, u_only: bool = False, backend=None) -> ContractionReport:
    """Empirical ``C0(T)`` on a caloric corpus and the fitted exponent ``a``.

    For every horizon the corpus data are propagated by the linear flow to give
    trajectories ``(u, b)``; ``C0(T)`` is the largest quadratic ratio.  The
    exponent is the least-squares slope of ``log C0`` against ``log T``.
    """
    T_list = tuple(float(t) for t in T_list)
    if len(T_list) < 2:
        raise ValueError("need at least two horizons")
    report = feasibility(params)
    if not report.feasible:
        raise InfeasibleParameters(report)
    if grid is None:
        grid = GridSpec(32)
    if corpus is None:
        corpus = contraction_corpus(grid, params, corpus_size, seed)
    zero = SpectralField.zeros(grid)
    c0 = []
    for T in T_list:
        smap = MildMap(zero, zero, params, T, M, backend, check=False)
        best = 0.0
        for u0, b0 in corpus:
            u = Trajectory.caloric(u0, T, M, params.alpha1, params.nu)
            b = (Trajectory.zeros(grid, T, M) if u_only
                 else Trajectory.caloric(b0, T, M, params.alpha2, params.mu))
            best = max(best, quadratic_ratio(smap, u, b))
        c0.append(best)
    slope, intercept = np.polyfit(np.log(T_list), np.log(c0), 1)
    analytic = report.exponents[0] if u_only else report.analytic_a
    return ContractionReport(T_list, tuple(c0), float(slope), float(analytic), len(corpus),
                             float(intercept))


@dataclass(frozen=True)
class DependenceReport:
    solution_difference: float
    data_difference: float
    ratio: float
    epsilon: float
    C0: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.ratio <= self.bound


def continuous_dependence_check(u0, b0, u0p, b0p, params: ParamSet, T: float, M: int = 32,
                                tol: float = 1e-12, max_iter: int = 60, C0: float | None = None,
                                corpus_size: int = 4, seed: int = 0,
                                backend=None) -> DependenceReport:
    """Compare solution and data differences with ``1/(1 - 4 eps C0)``.

    ``eps`` is the larger caloric-extension norm.  ``C0`` defaults to the
    largest quadratic ratio seen on a small caloric corpus and on the two
    solutions themselves.
    """
    rep = picard_solve(u0, b0, params, T, M, tol, max_iter, backend=backend)
    rep_p = picard_solve(u0p, b0p, params, T, M, tol, max_iter, backend=backend)
    for r in (rep, rep_p):
        if not r.converged:
            raise NonConvergence(r)
    smap = MildMap(u0, b0, params, T, M, backend)
    smap_p = MildMap(u0p, b0p, params, T, M, backend)
    data_diff = smap.norm(smap.u_caloric - smap_p.u_caloric, smap.b_caloric - smap_p.b_caloric)
    (u, b), (up, bp) = rep.solution, rep_p.solution
    sol_diff = smap.norm(u - up, b - bp)
    ratio = 0.0 if data_diff == 0 and sol_diff == 0 else sol_diff / data_diff
    eps = max(smap.norm(smap.u_caloric, smap.b_caloric),
              smap.norm(smap_p.u_caloric, smap_p.b_caloric))
    if C0 is None:
        C0 = max(quadratic_ratio(smap, u, b), quadratic_ratio(smap, up, bp))
        if corpus_size:
            est = contraction_estimate(params, (T, T * 1.0000001), corpus_size, u0.grid, M, seed,
                                       backend=backend)
            C0 = max(C0, max(est.C0_estimates))
    q = 4 * eps * C0
    bound = 1.0 / (1.0 - q) if q < 1 else float("inf")
    return DependenceReport(sol_diff, data_diff, ratio, eps, C0, bound)


def direct_stepper(u0: SpectralField, b0: SpectralField, params: ParamSet, T: float,
                   n_steps: int, M: int | None = None, nonlinear: bool = True,
                   freeze_velocity: bool = False, backend=None) -> tuple[Trajectory, Trajectory]:
    """Integrating-factor Heun scheme for the full system on the packed modes.

    The dissipative part is integrated exactly; the nonlinearity is advanced
    with the explicit trapezoidal (Heun) predictor-corrector, so the scheme is
    second order.  ``freeze_velocity`` holds ``u`` at zero (the electron-MHD
    limit).  Returns trajectories sampled at ``M + 1`` uniform nodes
    (``n_steps`` must be a multiple of ``M``).
    """
    if M is None:
        M = n_steps
    if n_steps % M:
        raise ValueError("n_steps must be a multiple of the output node count")
    grid = u0.grid
    for f in (u0, b0):
        if not is_band_limited(f):
            raise ValueError("initial data must be band-limited")
    h = T / n_steps
    kmag = packed_modes(grid)["kmag"]
    eu = np.exp(-params.nu * h * kmag ** (2 * params.alpha1))
    eb = np.exp(-params.mu * h * kmag ** (2 * params.alpha2))
    if freeze_velocity and np.any(u0.coeffs):
        raise ValueError("freeze_velocity needs u0 = 0")
    u = grid.pack(u0.coeffs).copy()
    b = grid.pack(b0.coeffs).copy()
    stride = n_steps // M
    out_u = [u.copy()]
    out_b = [b.copy()]
    scale = max(u0.sup_norm(), b0.sup_norm(), 1e-300)

    def rhs(up, bp):
        if not nonlinear:
            z = np.zeros_like(up)
            return z, z
        uv = SpectralField(grid, grid.unpack(up)).values if np.any(up) else None
        bv = SpectralField(grid, grid.unpack(bp)).values if np.any(bp) else None
        src_u, src_b = node_sources(grid, uv, bv, params.eta, backend)
        if freeze_velocity:
            src_u = np.zeros_like(src_u)
        return src_u, src_b

    for step in range(1, n_steps + 1):
        nu_, nb_ = rhs(u, b)
        u_star = eu * (u + h * nu_)
        b_star = eb * (b + h * nb_)
        nu_s, nb_s = rhs(u_star, b_star)
        u = eu * u + 0.5 * h * (eu * nu_ + nu_s)
        b = eb * b + 0.5 * h * (eb * nb_ + nb_s)
        if step % stride == 0:
            out_u.append(u.copy())
            out_b.append(b.copy())
            size = max(np.max(np.abs(u)), np.max(np.abs(b)))
            if not np.isfinite(size) or size > 1e6 * scale:
                raise StepperInstability(
                    f"solution grew beyond 1e6 x initial size at t={step * h:.4g}; "
                    f"reduce the step (n_steps={n_steps})")
    return (Trajectory(grid, T, np.stack(out_u), True), Trajectory(grid, T, np.stack(out_b), True))

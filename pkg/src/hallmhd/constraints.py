"""Admissible parameter region, contraction exponents and the Beta identity."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from scipy.integrate import quad

__all__ = [
    "ParamSet",
    "ConstraintLine",
    "FeasibilityReport",
    "InfeasibleParameters",
    "feasibility",
    "exponents",
    "beta_function",
    "beta_check",
    "BetaReport",
    "beta_case_grid",
]

# slack for the non-strict lines (gamma >= ..., beta >= ...) and the a = 0 test
BOUNDARY_TOL = 1e-12

CONSTRAINT_LINES = (
    "gamma >= max{1, alpha1/alpha2}",
    "beta >= max{2, (gamma+1)*alpha2/(2*alpha1)}",
    "gamma/2 < alpha1 < gamma",
    "beta/2 < alpha2 < beta",
)


@dataclass(frozen=True)
class ParamSet:
    alpha1: float
    alpha2: float
    beta: float
    gamma: float
    nu: float
    mu: float
    eta: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta", "gamma", "nu", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ValueError(f"eta must be nonnegative, got {self.eta!r}")

    @property
    def weight_u(self) -> float:
        return (2 * self.alpha1 - self.gamma) / (2 * self.alpha1)

    @property
    def weight_b(self) -> float:
        return (2 * self.alpha2 - self.beta) / (2 * self.alpha2)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConstraintLine:
    index: int
    statement: str
    margin: float
    satisfied: bool


@dataclass(frozen=True)
class FeasibilityReport:
    params: ParamSet
    lines: tuple
    exponents: tuple
    analytic_a: float
    boundary_flags: tuple = field(default=())

    @property
    def feasible(self) -> bool:
        return all(line.satisfied for line in self.lines)

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    @property
    def violated(self) -> list:
        return [line for line in self.lines if not line.satisfied]

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "params": self.params.as_dict(),
            "constraints": [asdict(line) for line in self.lines],
            "violated_constraints": [line.index for line in self.violated],
            "exponents": list(self.exponents),
            "analytic_a": self.analytic_a,
            "boundary_flags": list(self.boundary_flags),
        }


class InfeasibleParameters(ValueError):
    def __init__(self, report: FeasibilityReport):
        lines = "; ".join(f"({line.index}) {line.statement} [margin {line.margin:.4g}]"
                          for line in report.violated)
        super().__init__(f"parameters outside the admissible region: {lines}")
        self.report = report


def exponents(p: ParamSet) -> tuple[float, float, float, float]:
    """Time exponents of the four bilinear estimates, in order.

    ``B_a1(u,u)``, ``B_a1(b,b)``, the mixed ``B_a2`` terms, and the Hall term.
    """
    a1, a2, beta, gamma = p.alpha1, p.alpha2, p.beta, p.gamma
    return (
        (gamma - 1) / (2 * a1),
        beta / a2 - (gamma + 1) / (2 * a1),
        gamma / (2 * a1) - 1 / (2 * a2),
        (beta - 2) / (2 * a2),
    )


def feasibility(p: ParamSet) -> FeasibilityReport:
    a1, a2, beta, gamma = p.alpha1, p.alpha2, p.beta, p.gamma
    margins = (
        gamma - max(1.0, a1 / a2),
        beta - max(2.0, (gamma + 1) * a2 / (2 * a1)),
        min(a1 - gamma / 2, gamma - a1),
        min(a2 - beta / 2, beta - a2),
    )
    ok = (
        margins[0] >= -BOUNDARY_TOL,
        margins[1] >= -BOUNDARY_TOL,
        margins[2] > 0,
        margins[3] > 0,
    )
    lines = tuple(ConstraintLine(i + 1, CONSTRAINT_LINES[i], float(margins[i]), bool(ok[i]))
                  for i in range(4))
    ex = exponents(p)
    flags = tuple(i + 1 for i, e in enumerate(ex) if abs(e) <= BOUNDARY_TOL)
    a = min(ex)
    if abs(a) <= BOUNDARY_TOL:
        a = 0.0
    return FeasibilityReport(p, lines, tuple(float(e) for e in ex), float(a), flags)


def beta_function(x: float, y: float) -> float:
    """``B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)`` via log-gamma."""
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


@dataclass(frozen=True)
class BetaReport:
    alpha: float
    theta: float
    t: float
    quadrature: float
    closed_form: float
    rel_error: float


def beta_check(alpha: float, theta: float, t: float) -> BetaReport:
    """Compare ``int_0^t (t-s)^{-1/alpha} s^{-theta/alpha} ds`` with its Beta form.

    The integral is evaluated after ``s = t sin^2(phi)``, which turns it into
    ``2 t^e int_0^{pi/2} sin^p cos^q dphi``; the endpoint powers are handed to
    QUADPACK as algebraic weights so only a smooth factor is sampled.
    """
    if not alpha > 1:
        raise ValueError("need alpha > 1 for integrability at s = t")
    if not 0 < theta < alpha:
        raise ValueError("need 0 < theta < alpha")
    if not t > 0:
        raise ValueError("need t > 0")
    e = 1 - 1 / alpha - theta / alpha
    p = 1 - 2 * theta / alpha
    q = 1 - 2 / alpha
    half_pi = math.pi / 2

    def smooth(phi):
        s_ratio = math.sin(phi) / phi if phi > 0 else 1.0
        d = half_pi - phi
        c_ratio = math.cos(phi) / d if d > 0 else 1.0
        return s_ratio**p * c_ratio**q

    val, _ = quad(smooth, 0.0, half_pi, weight="alg", wvar=(p, q), epsabs=0, epsrel=1e-13,
                  limit=200)
    lhs = 2 * t**e * val
    rhs = t**e * beta_function(1 - theta / alpha, 1 - 1 / alpha)
    return BetaReport(alpha, theta, t, lhs, rhs, abs(lhs - rhs) / abs(rhs))


def beta_case_grid():
    """The 5 x 5 x 3 grid of ``(alpha, theta, t)`` cases."""
    alphas = (1.1, 1.25, 1.5, 2.0, 3.0)
    fractions = (0.1, 0.3, 0.5, 0.7, 0.9)
    times = (0.1, 1.0, 10.0)
    return [(a, f * a, t) for a in alphas for f in fractions for t in times]


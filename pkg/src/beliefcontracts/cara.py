"""Closed-form pipeline for the 2-action, 3-state exponential-utility case.

With u(x) = -exp(-x) the binding-constraint system is linear in marginal
utilities x_s = exp(-w_s), which lets the whole contract be reduced to one
scalar equation in the low-state wage w_1:

    kappa31 x1 + kappa32 x2 = R3,        R3 = -Delta_3 ubar + c eta_3 > 0
    kappa21 x1 - kappa32 x3 = R2,        R2 = -Delta_2 ubar + c eta_2

together with the pivot equation ("the scalar equation") built from the
state-2 first-order condition.  Risk aversion is fixed at r = 1; rescale the
money unit (w -> r*w, ubar and c unchanged in utils) to cover general r.

State indices here are 0-based: states 0, 1, 2 in increasing output order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beliefs import (ActionSpec, Distribution, DeltaVector, ProblemInstance,
                      kappa, mlrp_strict)
from .errors import (EpsilonTooLarge, NegativeMu, NoRootInBranch, OutOfBranch,
                     ValidationError)
from .utility import CaraUtility

_MAX_EXPAND = 200
_MAX_BISECT = 240


@dataclass(frozen=True)
class CaraSystem:
    """A 2-action, 3-state exponential-utility contracting problem.

    Attributes:
        pi_high / pi_low: agent beliefs under the costly and cheap action;
            must be strictly MLRP-ordered (pi_high above pi_low).
        principal: principal beliefs for the costly action.
        cost: effort-cost gap c = c(H) - c(L) > 0 (c(L) normalized to 0).
        ubar: reservation utility, negative in the exponential family.
    """

    pi_high: Distribution
    pi_low: Distribution
    principal: Distribution
    cost: float
    ubar: float

    def __post_init__(self):
        object.__setattr__(self, "cost", float(self.cost))
        object.__setattr__(self, "ubar", float(self.ubar))
        for name, dist in (("pi_high", self.pi_high), ("pi_low", self.pi_low),
                           ("principal", self.principal)):
            if len(dist) != 3:
                raise ValidationError(f"{name}: the closed form needs exactly 3 states")
            if dist.min_prob() <= 0.0:
                raise ValidationError(f"{name}: probabilities must be strictly positive")
        if not self.cost > 0:
            raise ValidationError("cost gap must be positive")
        if not self.ubar + self.cost < 0:
            raise ValidationError("ubar + cost must be negative in the exponential family")
        if not mlrp_strict(self.pi_high, self.pi_low):
            raise ValidationError("pi_high must strictly MLRP-dominate pi_low")
        if not (self.delta.values[0] < 0 and self.delta.values[2] > 0):
            raise ValidationError("strict ordering requires Delta_0 < 0 and Delta_2 > 0")
        g2 = self.gamma2
        if not 0 < g2 <= self.pi_high.probs[1] + 1e-12:
            raise ValidationError(f"gamma2 = {g2} outside (0, pi_high[1]]")
        if not g2 + self.delta.values[1] / self.delta.values[0] > 0:
            raise ValidationError("gamma2 + Delta_1/Delta_0 must be positive")

    @property
    def delta(self) -> DeltaVector:
        hi = self.pi_high.as_array()
        lo = self.pi_low.as_array()
        return DeltaVector(tuple(hi - lo))

    @property
    def kappa21(self) -> float:
        return kappa(self.delta, self.pi_high, 1, 0)

    @property
    def kappa31(self) -> float:
        return kappa(self.delta, self.pi_high, 2, 0)

    @property
    def kappa32(self) -> float:
        return kappa(self.delta, self.pi_high, 2, 1)

    @property
    def gamma2(self) -> float:
        return -self.kappa21 / self.delta.values[0]

    @property
    def r3(self) -> float:
        """-Delta_2 ubar + c * pi_low_2 > 0 (top-state elimination constant)."""
        return -self.delta.values[2] * self.ubar + self.cost * self.pi_low.probs[2]

    @property
    def r2(self) -> float:
        """-Delta_1 ubar + c * pi_low_1 (middle-state elimination constant)."""
        return -self.delta.values[1] * self.ubar + self.cost * self.pi_low.probs[1]


def w2_from_w1(sys: CaraSystem, w1: float) -> float:
    """Middle-state wage implied by the low-state wage on the binding branch."""
    denom = sys.r3 - sys.kappa31 * math.exp(-w1)
    if denom <= 0.0:
        raise OutOfBranch(f"w1 = {w1} too small: elimination denominator {denom} <= 0")
    return math.log(sys.kappa32) - math.log(denom)


def w3_from_w1(sys: CaraSystem, w1: float) -> float:
    """Top-state wage implied by the low-state wage on the binding branch."""
    denom = sys.kappa21 * math.exp(-w1) - sys.r2
    if denom <= 0.0:
        raise OutOfBranch(f"w1 = {w1} too large: elimination denominator {denom} <= 0")
    return math.log(sys.kappa32) - math.log(denom)


def branch_interval(sys: CaraSystem) -> tuple[float, float]:
    """Open w1-interval on which both wage eliminations are defined."""
    lo = math.log(sys.kappa31 / sys.r3)
    hi = math.log(sys.kappa21 / sys.r2) if sys.r2 > 0.0 else math.inf
    if not lo < hi:
        raise NoRootInBranch(
            "empty branch: the binding-constraint system has no interior solution")
    return lo, hi


def _pivot_gap(sys: CaraSystem, w1: float) -> float:
    """LHS minus RHS of the scalar pivot equation; positive near the branch floor."""
    d = sys.delta.values
    p = sys.principal.probs
    g2 = sys.gamma2
    lhs = p[1] * (1.0 - g2)
    e_w3 = sys.kappa32 / (sys.kappa21 * math.exp(-w1) - sys.r2)
    e_neg_w2 = (sys.r3 - sys.kappa31 * math.exp(-w1)) / sys.kappa32
    rhs = (p[0] * math.exp(w1) * (g2 + d[1] / d[0]) + p[2] * g2 * e_w3) * e_neg_w2
    return lhs - rhs


def solve_w1(sys: CaraSystem, tol: float = 1e-12) -> float:
    """Root of the scalar pivot equation on the admissible branch.

    The gap is positive at the branch floor and falls to -inf at the other
    end, so the root is located by expanding a bracket and bisecting.
    """
    lo, hi = branch_interval(sys)
    width = (hi - lo) if math.isfinite(hi) else 1.0
    a = None
    margin = 1e-8 * max(1.0, width)
    for _ in range(60):
        cand = lo + margin
        if (not math.isfinite(hi) or cand < hi) and _pivot_gap(sys, cand) > 0.0:
            a = cand
            break
        margin *= 0.5
    if a is None:
        raise NoRootInBranch("pivot equation not positive anywhere near the branch floor")

    if math.isfinite(hi):
        b = None
        margin = 1e-8 * width
        for _ in range(60):
            cand = hi - margin
            if cand > a and _pivot_gap(sys, cand) < 0.0:
                b = cand
                break
            margin *= 2.0
            if hi - margin <= a:
                break
        if b is None:
            raise NoRootInBranch("pivot equation does not change sign on the branch")
    else:
        b = a + 1.0
        for _ in range(_MAX_EXPAND):
            if _pivot_gap(sys, b) < 0.0:
                break
            b = a + 2.0 * (b - a)
        else:
            raise NoRootInBranch("pivot equation never becomes negative")

    for _ in range(_MAX_BISECT):
        if b - a <= tol * max(1.0, abs(b)):
            break
        mid = 0.5 * (a + b)
        if _pivot_gap(sys, mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def multipliers(sys: CaraSystem, wages) -> tuple[float, float]:
    """Participation and incentive multipliers at a wage triple.

    lam sums the principal-weighted inverse marginal utilities; mu follows
    from the low-state first-order condition.  Raises NegativeMu when the
    binding-incentive regime does not apply (fall back to risk sharing).
    """
    w = [float(x) for x in wages]
    if len(w) != 3 or any(not math.isfinite(x) for x in w):
        raise ValidationError("multipliers need 3 finite wages")
    p = sys.principal.probs
    lam = sum(p[s] * math.exp(w[s]) for s in range(3))
    mu = (p[0] * math.exp(w[0]) - lam * sys.pi_high.probs[0]) / sys.delta.values[0]
    if mu < -1e-9:
        raise NegativeMu(
            f"mu = {mu} < 0: incentive constraint slack, use the risk-sharing contract")
    return float(lam), float(mu)


@dataclass(frozen=True)
class CaraSolution:
    """Assembled closed-form contract with its multipliers and residuals."""

    wages: tuple[float, float, float]
    lam: float
    mu: float
    foc_residuals: tuple[float, float, float]
    ir_residual: float
    ic_residual: float


def residuals(sys: CaraSystem, wages, lam: float, mu: float):
    """First-order, participation and incentive residuals at a candidate.

    Nonzero values flag a wage triple that is off the optimality system.
    """
    w = np.asarray(wages, dtype=float)
    x = np.exp(-w)
    pi = sys.pi_high.as_array()
    eta = sys.pi_low.as_array()
    p = sys.principal.as_array()
    d = pi - eta
    foc = p - (lam * pi + mu * d) * x
    ir = float(pi @ (-x)) - (sys.ubar + sys.cost)
    ic = float(d @ (-x)) - sys.cost
    return tuple(float(f) for f in foc), ir, ic


def solve_system(sys: CaraSystem, tol: float = 1e-12) -> CaraSolution:
    """Full closed-form solve: w1 root, wage assembly, multipliers, residuals."""
    w1 = solve_w1(sys, tol=tol)
    w2 = w2_from_w1(sys, w1)
    w3 = w3_from_w1(sys, w1)
    lam, mu = multipliers(sys, (w1, w2, w3))
    foc, ir, ic = residuals(sys, (w1, w2, w3), lam, mu)
    return CaraSolution(wages=(w1, w2, w3), lam=lam, mu=mu,
                        foc_residuals=foc, ir_residual=ir, ic_residual=ic)


def to_problem_instance(sys: CaraSystem,
                        outputs: tuple[float, float, float] = (1.0, 2.0, 3.0),
                        principal_low: Distribution | None = None) -> ProblemInstance:
    """Equivalent general problem instance (outputs only matter for revenue;
    the cost-minimizing contract ignores them)."""
    eta = principal_low if principal_low is not None else sys.pi_low
    return ProblemInstance(
        outputs=outputs,
        actions=(
            ActionSpec("H", sys.cost, sys.principal, sys.pi_high),
            ActionSpec("L", 0.0, eta, sys.pi_low),
        ),
        reservation_utility=sys.ubar,
        utility=CaraUtility(r=1.0),
    )


@dataclass(frozen=True)
class CaraSweep:
    """Closed-form wage paths along a principal-belief reallocation.

    The perturbed pair carries the asserted directions (down at the state
    gaining mass, up at the state losing it); the remaining state's direction
    is reported empirically, never asserted.
    """

    s: int
    s_prime: int
    eps_values: tuple[float, ...]
    wages: tuple[tuple[float, float, float], ...]
    lam_path: tuple[float, ...]
    mu_path: tuple[float, ...]
    s_non_increasing: bool
    s_prime_non_decreasing: bool
    strict_steps: int
    third_state: int
    third_direction: str


def cara_compstat(sys: CaraSystem, s: int, s_prime: int, eps_grid,
                  tol: float = 1e-12) -> CaraSweep:
    """Re-solve the closed form along eps reallocations pi^P_s + eps,
    pi^P_{s'} - eps and report wage directions."""
    if s == s_prime or not (0 <= s < 3 and 0 <= s_prime < 3):
        raise ValidationError("need two distinct states in {0, 1, 2}")
    eps_values = [float(e) for e in eps_grid]
    p = sys.principal.probs
    for e in eps_values:
        if e < 0:
            raise EpsilonTooLarge("eps must be >= 0")
        if e >= min(p[s], p[s_prime]):
            raise EpsilonTooLarge(f"eps = {e} not below min perturbed probability")

    rows, lams, mus = [], [], []
    for e in eps_values:
        probs = list(p)
        probs[s] += e
        probs[s_prime] -= e
        tilted = CaraSystem(sys.pi_high, sys.pi_low, Distribution(tuple(probs)),
                            sys.cost, sys.ubar)
        sol = solve_system(tilted, tol=tol)
        rows.append(sol.wages)
        lams.append(sol.lam)
        mus.append(sol.mu)

    wages = np.asarray(rows, dtype=float)
    step_tol = 1e-9
    ds = np.diff(wages[:, s])
    dsp = np.diff(wages[:, s_prime])
    third = ({0, 1, 2} - {s, s_prime}).pop()
    dt = np.diff(wages[:, third])
    if np.all(np.abs(dt) <= step_tol):
        third_dir = "flat"
    elif np.all(dt >= -step_tol):
        third_dir = "increasing"
    elif np.all(dt <= step_tol):
        third_dir = "decreasing"
    else:
        third_dir = "non_monotone"
    return CaraSweep(
        s=s, s_prime=s_prime,
        eps_values=tuple(eps_values),
        wages=tuple(tuple(float(x) for x in row) for row in rows),
        lam_path=tuple(lams), mu_path=tuple(mus),
        s_non_increasing=bool(np.all(ds <= step_tol)) if len(ds) else True,
        s_prime_non_decreasing=bool(np.all(dsp >= -step_tol)) if len(dsp) else True,
        strict_steps=int(np.sum(ds < -step_tol) + np.sum(dsp > step_tol)),
        third_state=third,
        third_direction=third_dir,
    )

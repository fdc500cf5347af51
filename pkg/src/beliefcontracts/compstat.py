"""Generic eps-reallocation sweeps over belief vectors.

Re-solves the contract along a grid of two-coordinate belief tilts (either
party, either action), recording wage paths, multipliers, the wage-variance
"power" of incentives, per-state direction verdicts, and the spots where the
incentive constraint stops binding.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .beliefs import (ActionSpec, Distribution, Monotonicity, ProblemInstance)
from .errors import BeliefContractsError, EpsilonTooLarge, ValidationError
from .first_best import solve_first_best
from .second_best import solve_second_best

#: wage movements below this per eps step count as flat
VERDICT_TOL = 1e-9


class Party(Enum):
    PRINCIPAL = "principal"
    AGENT = "agent"


class SolverKind(Enum):
    FIRST_BEST = "first_best"
    SECOND_BEST = "second_best"


def _tilted_instance(inst: ProblemInstance, party: Party, which_action: str,
                     s: int, s_prime: int, eps: float) -> ProblemInstance:
    act = inst.action(which_action)
    base = act.principal_beliefs if party is Party.PRINCIPAL else act.agent_beliefs
    probs = list(base.probs)
    if s == s_prime:
        raise ValidationError("tilt needs two distinct states")
    moved_s = probs[s] + eps
    moved_sp = probs[s_prime] - eps
    if not (0.0 < moved_s < 1.0 and 0.0 < moved_sp < 1.0):
        raise EpsilonTooLarge(
            f"eps = {eps} pushes the {party.value} beliefs for {which_action!r} "
            "out of the open simplex")
    probs[s] = moved_s
    probs[s_prime] = moved_sp
    tilted = Distribution(tuple(probs))
    if party is Party.PRINCIPAL:
        new_act = ActionSpec(act.name, act.cost, tilted, act.agent_beliefs)
    else:
        new_act = ActionSpec(act.name, act.cost, act.principal_beliefs, tilted)
    actions = tuple(new_act if a.name == which_action else a for a in inst.actions)
    return ProblemInstance(inst.outputs, actions, inst.reservation_utility, inst.utility)


@dataclass(frozen=True)
class SweepResult:
    """Wage paths and verdicts along an eps grid.

    Rows align with eps_values; failed solves carry NaN wages and appear in
    ``failed_rows``.  ``power_path`` is the wage variance under the agent's
    beliefs for the implemented action, ``power_path_principal`` under the
    principal's.  ``regime_changes`` lists each eps at which the
    first-best-coincidence flag differs from the previous solved row.
    """

    eps_values: tuple[float, ...]
    wage_paths: tuple[tuple[float, ...], ...]
    lambda_path: tuple[float, ...]
    mu_path: tuple[float, ...]
    power_path: tuple[float, ...]
    power_path_principal: tuple[float, ...]
    verdicts: tuple[Monotonicity, ...]
    regime_changes: tuple[float, ...]
    coincides_path: tuple[bool, ...]
    failed_rows: tuple[int, ...]


def _variance(wages: np.ndarray, probs: np.ndarray) -> float:
    mean = float(probs @ wages)
    return float(probs @ (wages - mean) ** 2)


def sweep(inst: ProblemInstance, action: str, party: Party, which_action: str,
          s: int, s_prime: int, eps_grid, solver: SolverKind,
          tol: float = 1e-9) -> SweepResult:
    """Re-solve the contract for ``action`` at every eps in the grid.

    Each eps moves that much probability from state s_prime onto state s in
    the beliefs of ``party`` about ``which_action``.  Per-row solver failures
    are recorded, not fatal.
    """
    eps_values = [float(e) for e in eps_grid]
    S = inst.n_states
    if not (0 <= s < S and 0 <= s_prime < S):
        raise ValidationError("state indices out of range")

    rows, lams, mus, power_a, power_p, coincides, failed = [], [], [], [], [], [], []
    for i, eps in enumerate(eps_values):
        tilted = _tilted_instance(inst, party, which_action, s, s_prime, eps)
        try:
            if solver is SolverKind.FIRST_BEST:
                sol = solve_first_best(tilted, action, tol=tol)
                lam, mu, coin = sol.lam, 0.0, True
            else:
                sol = solve_second_best(tilted, action, tol=tol)
                lam = sol.lam
                mu = sol.mu[0] if len(sol.mu) == 1 else float(sum(sol.mu))
                coin = sol.coincides_with_first_best
        except BeliefContractsError:
            rows.append((float("nan"),) * S)
            lams.append(float("nan"))
            mus.append(float("nan"))
            power_a.append(float("nan"))
            power_p.append(float("nan"))
            coincides.append(False)
            failed.append(i)
            continue
        w = np.asarray(sol.wages, dtype=float)
        t_act = tilted.action(action)
        rows.append(tuple(float(x) for x in w))
        lams.append(float(lam))
        mus.append(float(mu))
        power_a.append(_variance(w, t_act.agent_beliefs.as_array()))
        power_p.append(_variance(w, t_act.principal_beliefs.as_array()))
        coincides.append(bool(coin))

    ok = [i for i in range(len(eps_values)) if i not in failed]
    verdicts = []
    for state in range(S):
        diffs = [rows[j][state] - rows[i][state]
                 for i, j in zip(ok, ok[1:])]
        diffs = np.asarray(diffs, dtype=float)
        if diffs.size == 0 or np.all(np.abs(diffs) <= VERDICT_TOL):
            verdicts.append(Monotonicity.FLAT)
        elif np.all(diffs >= -VERDICT_TOL):
            verdicts.append(Monotonicity.INCREASING)
        elif np.all(diffs <= VERDICT_TOL):
            verdicts.append(Monotonicity.DECREASING)
        else:
            verdicts.append(Monotonicity.NON_MONOTONE)

    regime = [eps_values[j] for i, j in zip(ok, ok[1:])
              if coincides[i] != coincides[j]]

    return SweepResult(
        eps_values=tuple(eps_values),
        wage_paths=tuple(rows),
        lambda_path=tuple(lams),
        mu_path=tuple(mus),
        power_path=tuple(power_a),
        power_path_principal=tuple(power_p),
        verdicts=tuple(verdicts),
        regime_changes=tuple(regime),
        coincides_path=tuple(coincides),
        failed_rows=tuple(failed),
    )


@dataclass(frozen=True)
class BeliefTilt:
    """A parameterized two-coordinate belief tilt."""

    party: Party
    action: str
    s: int
    s_prime: int


def detect_regime_change(inst: ProblemInstance, tilt: BeliefTilt, eps_max: float,
                         target: str | None = None,
                         tol: float = 1e-6) -> float | None:
    """Bisect for the eps at which the incentive constraint starts or stops
    binding along the tilt; None when the flag agrees at both ends.

    Args:
        eps_max: upper end of the tilt range; must keep the open simplex.
        target: action whose contract is solved (defaults to the costliest).
    """
    if target is None:
        target = max(inst.actions, key=lambda a: a.cost).name

    def flag(eps: float) -> bool:
        tilted = _tilted_instance(inst, tilt.party, tilt.action,
                                  tilt.s, tilt.s_prime, eps)
        return solve_second_best(tilted, target).coincides_with_first_best

    lo, hi = 0.0, float(eps_max)
    f_lo, f_hi = flag(lo), flag(hi)
    if f_lo == f_hi:
        return None
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if flag(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

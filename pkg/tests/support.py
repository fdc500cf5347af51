"""Shared seeded instance generators for the test suite.

Generation is rejection-sampled: belief vectors keep a minimum probability so
solver conditioning stays away from the simplex boundary, and binding-regime
draws are verified by an actual solve before being handed to a test.
"""

from __future__ import annotations

import numpy as np

import beliefcontracts as bc

MIN_PROB = 0.03


def rand_simplex(rng, S, min_p=MIN_PROB):
    for _ in range(2000):
        p = rng.dirichlet(np.ones(S) * 3.0)
        if p.min() >= min_p:
            return p
    raise RuntimeError("simplex rejection sampling exhausted")


def ratio_ladder(rng, base, lo=1.08, hi=1.9, min_p=0.015):
    """A vector strictly MLRP-dominating ``base`` via an increasing ratio ladder."""
    for _ in range(2000):
        ell = np.cumprod(np.concatenate([[1.0], rng.uniform(lo, hi, len(base) - 1)]))
        f = base * ell
        f = f / f.sum()
        if f.min() >= min_p:
            return f
    raise RuntimeError("ladder rejection sampling exhausted")


FAMILY_NAMES = ("cara", "log", "crra_low", "crra_high", "sqrt")


def make_family(name: str):
    return {
        "cara": lambda: bc.CaraUtility(r=1.0),
        "log": bc.LogUtility,
        "crra_low": lambda: bc.CrraUtility(gamma=0.5),
        "crra_high": lambda: bc.CrraUtility(gamma=2.0),
        "sqrt": bc.SqrtUtility,
    }[name]()


def draw_costs_and_reservation(rng, name: str, n_actions: int = 2):
    c_lo = float(rng.uniform(0.0, 0.25))
    gaps = rng.uniform(0.25, 0.7, max(n_actions - 1, 0))
    costs = [c_lo] + list(c_lo + np.cumsum(gaps))
    c_max = costs[-1]
    if name in ("cara", "crra_high"):
        ubar = float(rng.uniform(-3.0, -c_max - 0.4))
    elif name == "log":
        ubar = float(rng.uniform(-1.0, 1.0))
    else:  # positive utility range
        ubar = float(rng.uniform(0.3, 1.5))
    return costs[:n_actions], ubar


def rand_outputs(rng, S):
    return tuple(np.cumsum(rng.uniform(0.6, 2.0, S)) + rng.uniform(0.5, 2.0))


def single_action_instance(rng, S, name=None, order=None, min_gap=0.0):
    """One-action instance for first-best tests.

    order: None (independent beliefs), "homogeneous", "agent_dominates",
    or "principal_dominates" (strict MLRP via ratio ladders).  min_gap
    forces meaningful heterogeneity on independent draws.
    """
    name = name or rng.choice(FAMILY_NAMES)
    model = make_family(name)
    (cost,), ubar = draw_costs_and_reservation(rng, name, 1)
    if order == "homogeneous":
        p = rand_simplex(rng, S)
        principal = agent = p
    elif order == "agent_dominates":
        principal = rand_simplex(rng, S)
        agent = ratio_ladder(rng, principal)
    elif order == "principal_dominates":
        agent = rand_simplex(rng, S)
        principal = ratio_ladder(rng, agent)
    else:
        principal = rand_simplex(rng, S)
        agent = rand_simplex(rng, S)
        while float(np.max(np.abs(principal - agent))) < min_gap:
            agent = rand_simplex(rng, S)
    return bc.ProblemInstance(
        outputs=rand_outputs(rng, S),
        actions=(bc.ActionSpec("a", cost, bc.Distribution(tuple(principal)),
                               bc.Distribution(tuple(agent))),),
        reservation_utility=ubar,
        utility=model,
    )


def two_action_instance(rng, S, name=None, chain=True, solvable=True):
    """Two-action instance; ``chain=True`` enforces the ordering
    agent-H over principal-H over agent-L (strict ladders)."""
    for _ in range(200):
        fam = name or rng.choice(FAMILY_NAMES)
        model = make_family(fam)
        (c_l, c_h), ubar = draw_costs_and_reservation(rng, fam, 2)
        if chain:
            eta = rand_simplex(rng, S)
            principal_h = ratio_ladder(rng, eta)
            pi_h = ratio_ladder(rng, principal_h)
        else:
            eta = rand_simplex(rng, S)
            pi_h = ratio_ladder(rng, eta)     # agent beliefs still MLRP across actions
            principal_h = rand_simplex(rng, S)
        inst = bc.ProblemInstance(
            outputs=rand_outputs(rng, S),
            actions=(
                bc.ActionSpec("H", c_h, bc.Distribution(tuple(principal_h)),
                              bc.Distribution(tuple(pi_h))),
                bc.ActionSpec("L", c_l, bc.Distribution(tuple(eta)),
                              bc.Distribution(tuple(eta))),
            ),
            reservation_utility=ubar,
            utility=model,
        )
        if not solvable:
            return inst
        try:
            sol = bc.solve_second_best(inst, "H")
        except bc.BeliefContractsError:
            continue
        # keep economies at desk scale: near-degenerate incentive geometry
        # (agent beliefs barely moving with effort) blows the multipliers and
        # wage spread past what double precision can certify
        if sol.lam > 5e3 or (sol.mu and max(sol.mu) > 5e3):
            continue
        if max(abs(w) for w in sol.wages) > 1e5:
            continue
        # certificate conditioning: the stationarity residual at a punished
        # state cancels O(lam) terms down to delta_s h'(v_s); cap the ratio
        q = np.asarray(inst.action("H").agent_beliefs.probs)
        dl = np.asarray(inst.action("H").principal_beliefs.probs)
        hp = np.asarray([float(model.inverse_derivative(v)) for v in sol.utility_levels])
        drows = [q - np.asarray(a.agent_beliefs.probs) for a in inst.other_actions("H")]
        gross = sol.lam * q
        for m, row in zip(sol.mu, drows):
            gross = gross + abs(m) * np.abs(row)
        if float(np.max(gross / (dl * hp))) > 1e6:
            continue
        return inst
    raise RuntimeError("two-action instance sampling exhausted")


def cara_system_draw(rng, require_binding=True):
    """Random 3-state exponential-utility system, optionally filtered to the
    regime where the incentive constraint binds (the closed form's domain)."""
    for _ in range(500):
        pi_l = rand_simplex(rng, 3)
        pi_h = ratio_ladder(rng, pi_l)
        principal = rand_simplex(rng, 3)
        cost = float(rng.uniform(0.25, 0.85))
        ubar = float(rng.uniform(-2.6, -cost - 0.4))
        try:
            sys_ = bc.CaraSystem(bc.Distribution(tuple(pi_h)), bc.Distribution(tuple(pi_l)),
                                 bc.Distribution(tuple(principal)), cost, ubar)
            bc.branch_interval(sys_)
        except bc.BeliefContractsError:
            continue
        if not require_binding:
            return sys_
        inst = bc.to_problem_instance(sys_)
        try:
            sol = bc.solve_second_best(inst, "H")
        except bc.BeliefContractsError:
            continue
        if not sol.coincides_with_first_best and sol.mu[0] > 1e-7:
            return sys_
    raise RuntimeError("cara system sampling exhausted")


def four_state_spread_draw(rng, require_binding=True):
    """4-state exponential-utility instance satisfying the ordering chain."""
    for _ in range(500):
        eta = rand_simplex(rng, 4)
        principal_h = ratio_ladder(rng, eta, lo=1.06, hi=1.5)
        pi_h = ratio_ladder(rng, principal_h, lo=1.06, hi=1.5)
        cost = float(rng.uniform(0.25, 0.8))
        ubar = float(rng.uniform(-2.6, -cost - 0.4))
        inst = bc.ProblemInstance(
            outputs=(1.0, 2.0, 3.0, 4.0),
            actions=(
                bc.ActionSpec("H", cost, bc.Distribution(tuple(principal_h)),
                              bc.Distribution(tuple(pi_h))),
                bc.ActionSpec("L", 0.0, bc.Distribution(tuple(eta)),
                              bc.Distribution(tuple(eta))),
            ),
            reservation_utility=ubar,
            utility=bc.CaraUtility(r=1.0),
        )
        try:
            sp = bc.SpreadProblem(inst, "H")
            sol = bc.solve_second_best(inst, "H")
        except bc.BeliefContractsError:
            continue
        if require_binding and (sol.coincides_with_first_best or sol.mu[0] <= 1e-7):
            continue
        return sp
    raise RuntimeError("4-state spread sampling exhausted")


def mlrp_pair(rng, S, min_p=0.01):
    g = rand_simplex(rng, S, min_p=0.02)
    f = ratio_ladder(rng, g, min_p=min_p)
    return bc.Distribution(tuple(f)), bc.Distribution(tuple(g))


def grid_around(inst, utility_levels, points, pad=0.3):
    """Oracle grid straddling a solution's promised utilities, clamped to the
    utility range of the instance's family."""
    vs = np.asarray(utility_levels, dtype=float)
    span = max(float(vs.max() - vs.min()), 0.25)
    lo = float(vs.min() - pad * span)
    hi = float(vs.max() + pad * span)
    r_lo, r_hi = inst.utility.utility_range
    if np.isfinite(r_lo):
        lo = max(lo, r_lo + 1e-6 * span)
    if np.isfinite(r_hi):
        hi = min(hi, r_hi - 1e-6 * span)
    return bc.GridSpec(lo, hi, points)

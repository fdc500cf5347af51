"""Sweep engine: wage paths, verdicts, power series, regime detection."""

import numpy as np
import pytest

import beliefcontracts as bc
from beliefcontracts import Monotonicity, Party, SolverKind

D = lambda *p: bc.Distribution(tuple(p))


def cara_three_state():
    return bc.ProblemInstance(
        (1.0, 2.0, 3.0),
        (bc.ActionSpec("H", 0.6, D(0.4, 0.35, 0.25), D(0.2, 0.3, 0.5)),
         bc.ActionSpec("L", 0.0, D(0.5, 0.3, 0.2), D(0.5, 0.3, 0.2))),
        -1.5, bc.CaraUtility(r=1.0))


def log_two_state():
    return bc.ProblemInstance(
        (1.0, 2.0),
        (bc.ActionSpec("H", 1.0, D(0.5, 0.5), D(0.25, 0.75)),
         bc.ActionSpec("L", 0.0, D(0.75, 0.25), D(0.75, 0.25))),
        0.0, bc.LogUtility())


class TestSweep:
    def test_first_best_cara_pattern(self):
        res = bc.sweep(cara_three_state(), "H", Party.PRINCIPAL, "H", 1, 2,
                       np.linspace(0.0, 0.1, 8), SolverKind.FIRST_BEST)
        assert res.verdicts == (Monotonicity.FLAT, Monotonicity.DECREASING,
                                Monotonicity.INCREASING)
        assert res.failed_rows == ()
        assert res.regime_changes == ()

    def test_second_best_cara_moves_the_low_state(self):
        res = bc.sweep(cara_three_state(), "H", Party.PRINCIPAL, "H", 1, 2,
                       np.linspace(0.0, 0.1, 8), SolverKind.SECOND_BEST)
        assert res.verdicts[1] is Monotonicity.DECREASING
        assert res.verdicts[2] is Monotonicity.INCREASING
        assert res.verdicts[0] is not Monotonicity.FLAT
        assert all(m > 0 for m in res.mu_path)

    def test_single_point_grid_is_flat(self):
        res = bc.sweep(cara_three_state(), "H", Party.PRINCIPAL, "H", 1, 2,
                       [0.0], SolverKind.SECOND_BEST)
        assert res.verdicts == (Monotonicity.FLAT,) * 3
        assert len(res.eps_values) == 1

    def test_two_state_binding_paths_are_flat(self):
        inst = log_two_state()
        res = bc.sweep(inst, "H", Party.PRINCIPAL, "H", 0, 1,
                       np.linspace(0.0, 0.05, 6), SolverKind.SECOND_BEST)
        assert res.verdicts == (Monotonicity.FLAT, Monotonicity.FLAT)
        assert all(not c for c in res.coincides_path)

    def test_power_is_translation_invariant(self):
        from beliefcontracts.compstat import _variance
        w = np.array([1.0, 2.5, 4.0])
        p = np.array([0.2, 0.3, 0.5])
        assert _variance(w, p) == pytest.approx(_variance(w + 7.3, p))

    def test_power_paths_reported_under_both_measures(self):
        res = bc.sweep(cara_three_state(), "H", Party.PRINCIPAL, "H", 1, 2,
                       np.linspace(0.0, 0.1, 5), SolverKind.SECOND_BEST)
        assert len(res.power_path) == 5
        assert len(res.power_path_principal) == 5
        assert all(p > 0 for p in res.power_path)

    def test_eps_leaving_simplex(self):
        with pytest.raises(bc.EpsilonTooLarge):
            bc.sweep(cara_three_state(), "H", Party.PRINCIPAL, "H", 1, 2,
                     [0.0, 0.5], SolverKind.SECOND_BEST)

    def test_agent_side_sweep_runs(self):
        res = bc.sweep(cara_three_state(), "H", Party.AGENT, "L", 0, 2,
                       np.linspace(0.0, 0.05, 5), SolverKind.SECOND_BEST)
        assert res.failed_rows == ()


class TestRegimeDetection:
    def test_tilt_toward_low_state_finds_a_flip(self):
        inst = log_two_state()
        tilt = bc.BeliefTilt(Party.PRINCIPAL, "H", 0, 1)
        eps = bc.detect_regime_change(inst, tilt, 0.45, target="H")
        assert eps is not None
        # beyond the flip the incentive constraint is slack and costs agree
        from beliefcontracts.compstat import _tilted_instance
        above = _tilted_instance(inst, Party.PRINCIPAL, "H", 0, 1, eps + 5e-3)
        below = _tilted_instance(inst, Party.PRINCIPAL, "H", 0, 1, eps - 5e-3)
        assert bc.solve_second_best(above, "H").coincides_with_first_best
        assert not bc.solve_second_best(below, "H").coincides_with_first_best

    def test_tilt_away_returns_none(self):
        inst = log_two_state()
        tilt = bc.BeliefTilt(Party.PRINCIPAL, "H", 1, 0)
        assert bc.detect_regime_change(inst, tilt, 0.2, target="H") is None

    def test_crossing_stable_under_refinement(self):
        inst = log_two_state()
        tilt = bc.BeliefTilt(Party.PRINCIPAL, "H", 0, 1)
        coarse = bc.detect_regime_change(inst, tilt, 0.45, target="H", tol=1e-6)
        fine = bc.detect_regime_change(inst, tilt, 0.45, target="H", tol=1e-9)
        assert abs(coarse - fine) <= 1e-6

    def test_sweep_records_the_regime_change(self):
        inst = log_two_state()
        eps_star = bc.detect_regime_change(
            inst, bc.BeliefTilt(Party.PRINCIPAL, "H", 0, 1), 0.45, target="H")
        grid = np.linspace(0.0, 0.44, 23)
        res = bc.sweep(inst, "H", Party.PRINCIPAL, "H", 0, 1, grid,
                       SolverKind.SECOND_BEST)
        assert len(res.regime_changes) == 1
        assert abs(res.regime_changes[0] - eps_star) <= grid[1] - grid[0] + 1e-9

"""Distribution types, likelihood-ratio ordering, reduction, and cross terms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import beliefcontracts as bc
from beliefcontracts import MlrpOrder
from support import mlrp_pair

D = lambda *p: bc.Distribution(tuple(p))


class TestDistribution:
    def test_rejects_short(self):
        with pytest.raises(bc.ValidationError):
            bc.Distribution((1.0,))

    def test_rejects_negative(self):
        with pytest.raises(bc.ValidationError):
            D(-0.1, 1.1)

    def test_rejects_off_simplex_without_renormalizing(self):
        with pytest.raises(bc.ValidationError):
            D(0.5, 0.49)

    def test_accepts_zeros(self):
        D(0.0, 1.0)


class TestMlrpCompare:
    def test_increasing_ratios_dominate(self):
        assert bc.mlrp_compare(D(0.1, 0.3, 0.6), D(0.6, 0.3, 0.1)) is MlrpOrder.F_DOMINATES_G

    def test_identical_are_equal(self):
        assert bc.mlrp_compare(D(0.5, 0.5), D(0.5, 0.5)) is MlrpOrder.EQUAL

    def test_cross_products_fail_both_ways(self):
        assert bc.mlrp_compare(D(0.5, 0.0, 0.5), D(0.0, 1.0, 0.0)) is MlrpOrder.INCOMPARABLE

    def test_length_mismatch(self):
        with pytest.raises(bc.LengthMismatch):
            bc.mlrp_compare(D(0.5, 0.5), D(0.2, 0.3, 0.5))

    def test_strict_flag(self):
        assert bc.mlrp_strict(D(0.1, 0.3, 0.6), D(0.6, 0.3, 0.1))
        assert not bc.mlrp_strict(D(0.5, 0.5), D(0.5, 0.5))

    def test_random_pairs_ordered_and_imply_fosd(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            f, g = mlrp_pair(rng, int(rng.integers(2, 6)))
            assert bc.mlrp_compare(f, g) is MlrpOrder.F_DOMINATES_G
            # MLRP implies first-order stochastic dominance: lower cdf everywhere
            cf = np.cumsum(f.as_array())
            cg = np.cumsum(g.as_array())
            assert np.all(cf <= cg + 1e-12)


@st.composite
def simplex_pairs(draw):
    S = draw(st.integers(2, 5))
    raw_f = draw(st.lists(st.floats(0.01, 1.0), min_size=S, max_size=S))
    raw_g = draw(st.lists(st.floats(0.01, 1.0), min_size=S, max_size=S))
    f = np.asarray(raw_f) / np.sum(raw_f)
    g = np.asarray(raw_g) / np.sum(raw_g)
    return bc.Distribution(tuple(f)), bc.Distribution(tuple(g))


@given(simplex_pairs())
@settings(max_examples=200, deadline=None)
def test_mlrp_antisymmetric(pair):
    f, g = pair
    fwd = bc.mlrp_compare(f, g)
    bwd = bc.mlrp_compare(g, f)
    flip = {MlrpOrder.F_DOMINATES_G: MlrpOrder.G_DOMINATES_F,
            MlrpOrder.G_DOMINATES_F: MlrpOrder.F_DOMINATES_G}
    assert bwd is flip.get(fwd, fwd)


class TestReduce:
    def test_lumps_tail(self):
        assert bc.reduce_distribution(D(0.1, 0.2, 0.3, 0.4), 3).probs == (0.1, 0.2, 0.7)

    def test_identity_at_full_length(self):
        assert bc.reduce_distribution(D(0.5, 0.5), 2).probs == (0.5, 0.5)

    def test_lump_to_two(self):
        assert bc.reduce_distribution(D(0.25, 0.25, 0.25, 0.25), 2).probs == (0.25, 0.75)

    @pytest.mark.parametrize("keep", [1, 5, 0])
    def test_out_of_range(self, keep):
        with pytest.raises(bc.InvalidReduction):
            bc.reduce_distribution(D(0.25, 0.25, 0.25, 0.25), keep)

    def test_preserves_order_on_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            S = int(rng.integers(3, 7))
            f, g = mlrp_pair(rng, S)
            for keep in range(2, S + 1):
                rf = bc.reduce_distribution(f, keep)
                rg = bc.reduce_distribution(g, keep)
                assert bc.mlrp_compare(rf, rg) in (MlrpOrder.F_DOMINATES_G, MlrpOrder.EQUAL)


class TestDeltaAndKappa:
    A = lambda self, cost, p, q: bc.ActionSpec("x", cost, D(*p), D(*q))

    def test_delta_two_state(self):
        d = bc.delta_vector(self.A(1, (0.5, 0.5), (0.25, 0.75)),
                            self.A(0, (0.5, 0.5), (0.75, 0.25)))
        assert d.values == (-0.5, 0.5)

    def test_delta_zero_for_identical(self):
        d = bc.delta_vector(self.A(1, (0.5, 0.5), (0.3, 0.7)),
                            self.A(0, (0.5, 0.5), (0.3, 0.7)))
        assert d.values == (0.0, 0.0)

    def test_delta_three_state(self):
        d = bc.delta_vector(self.A(1, (0.3, 0.3, 0.4), (0.2, 0.3, 0.5)),
                            self.A(0, (0.3, 0.3, 0.4), (0.5, 0.3, 0.2)))
        assert d.values == pytest.approx((-0.3, 0.0, 0.3))

    def test_kappa_two_state(self):
        hi = D(0.25, 0.75)
        d = bc.DeltaVector((-0.5, 0.5))
        assert bc.kappa(d, hi, 1, 0) == pytest.approx(0.5)

    def test_kappa_zero_for_equal_beliefs(self):
        assert bc.kappa(bc.DeltaVector((0.0, 0.0)), D(0.3, 0.7), 1, 0) == 0.0

    def test_kappa_three_state(self):
        hi = D(0.2, 0.3, 0.5)
        d = bc.DeltaVector((-0.3, 0.0, 0.3))
        assert bc.kappa(d, hi, 2, 0) == pytest.approx(0.21)

    def test_kappa_index_order(self):
        with pytest.raises(bc.IndexOrder):
            bc.kappa(bc.DeltaVector((-0.5, 0.5)), D(0.25, 0.75), 0, 1)

    def test_kappa_positive_under_strict_order(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            S = int(rng.integers(2, 6))
            f, g = mlrp_pair(rng, S)
            hi = bc.ActionSpec("h", 1.0, f, f)
            lo = bc.ActionSpec("l", 0.0, g, g)
            d = bc.delta_vector(hi, lo)
            for s_lo in range(S):
                for s_hi in range(s_lo + 1, S):
                    assert bc.kappa(d, f, s_hi, s_lo) > 0


class TestProblemInstance:
    def test_outputs_must_increase(self):
        with pytest.raises(bc.ValidationError):
            bc.ProblemInstance((2.0, 1.0),
                               (bc.ActionSpec("a", 0.0, D(0.5, 0.5), D(0.5, 0.5)),),
                               0.0, bc.LogUtility())

    def test_reservation_outside_family_range(self):
        with pytest.raises(bc.ValidationError):
            bc.ProblemInstance((1.0, 2.0),
                               (bc.ActionSpec("a", 0.5, D(0.5, 0.5), D(0.5, 0.5)),),
                               -0.2, bc.CaraUtility())  # ubar + c = 0.3 >= 0

    def test_tied_costs_warn_but_pass(self):
        with pytest.warns(UserWarning):
            bc.ProblemInstance(
                (1.0, 2.0),
                (bc.ActionSpec("a", 0.5, D(0.5, 0.5), D(0.5, 0.5)),
                 bc.ActionSpec("b", 0.5, D(0.5, 0.5), D(0.25, 0.75))),
                0.1, bc.LogUtility())

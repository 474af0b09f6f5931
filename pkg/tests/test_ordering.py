import numpy as np
import pytest

from monoride import (ControlSystem, EcmParams, FdSpmParams, OrderRelation,
                      ParameterError, build_ecm, build_fd_spm,
                      check_cost_monotone, check_excitability,
                      check_kamke_muller, is_metzler, is_nonneg,
                      trajectory_order_test, vec_compare)


class TestVecCompare:
    def test_definitions(self):
        assert vec_compare([1, 2], [1, 3]) is OrderRelation.LESS
        assert vec_compare([1, 2], [2, 3]) is OrderRelation.STRICTLY_LESS
        assert vec_compare([1, 3], [2, 2]) is OrderRelation.INCOMPARABLE
        assert vec_compare([1, 2], [1, 2]) is OrderRelation.EQUAL
        assert vec_compare([2, 3], [1, 2]) is OrderRelation.STRICTLY_GREATER
        assert vec_compare([1, 3], [1, 2]) is OrderRelation.GREATER

    def test_implication_chain(self):
        # strictly-less implies less implies leq
        r = vec_compare([1, 2], [2, 3])
        assert r.ll and r.lt and r.leq
        r = vec_compare([1, 2], [1, 3])
        assert not r.ll and r.lt and r.leq
        r = vec_compare([1, 2], [1, 2])
        assert not r.lt and r.leq

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            vec_compare([1, 2], [1, 2, 3])

    def test_partial_order_properties(self):
        rng = np.random.default_rng(0)
        vecs = [rng.integers(-2, 3, size=3).astype(float) for _ in range(12)]
        for x in vecs:
            assert vec_compare(x, x) is OrderRelation.EQUAL  # reflexive
        for x in vecs:
            for y in vecs:
                # antisymmetric
                if vec_compare(x, y).leq and vec_compare(y, x).leq:
                    assert np.array_equal(x, y)
        for x in vecs[:6]:
            for y in vecs[:6]:
                for z in vecs[:6]:
                    if vec_compare(x, y).leq and vec_compare(y, z).leq:
                        assert vec_compare(x, z).leq  # transitive


class TestStructuralChecks:
    def test_is_metzler(self):
        assert is_metzler(np.array([[0.0, 0.0], [0.0, -0.1]])) == (True, None)
        ok, entry = is_metzler(np.array([[-1.0, -1e-3], [0.0, -1.0]]), tol=0.0)
        assert not ok and entry == (0, 1)
        with pytest.raises(ParameterError):
            is_metzler(np.zeros((2, 3)))

    def test_is_metzler_fd_spm(self):
        p = FdSpmParams(diffusivity=1.0, particle_radius=3.0, n_interior=2,
                        surface_area=1.0, collector_area=1.0, thickness=1.0)
        A, _ = build_fd_spm(p)[0].linear_part
        assert is_metzler(A)[0]

    def test_is_nonneg(self):
        assert is_nonneg(np.array([[1 / 3300.0], [0.001]]))[0]
        # the raw (untransformed) particle-model input vector fails
        ok, entry = is_nonneg(np.array([[-0.5], [0.7], [0.9]]))
        assert not ok and entry == (0, 0)
        assert is_nonneg(np.zeros((3, 3)))[0]


class TestKamkeMuller:
    def test_linear_short_circuit_agrees_with_sampling(self, simple_ecm_system):
        box = [(0.0, 1.0), (0.0, 0.25), (0.0, 10.0)]
        structural = check_kamke_muller(simple_ecm_system, box)
        sampled = check_kamke_muller(simple_ecm_system, box, method="sampled")
        assert structural.method == "structural"
        assert sampled.method == "sampled"
        assert structural.verdict == sampled.verdict == "monotone"

    def test_thermal_verdict_depends_on_current_sign(self, thermal_system):
        state_box = [(0.0, 1.0), (0.0, 0.25), (0.0, 8.0)]
        rep_neg = check_kamke_muller(thermal_system, state_box + [(-10.0, 10.0)])
        assert rep_neg.verdict == "non_monotone"
        # the witness is the cross term dT'/d(rc voltage) = u/(m Cp) at u < 0
        w = next(w for w in rep_neg.witnesses if w.wrt == "state")
        assert w.at_input[0] < 0
        rep_pos = check_kamke_muller(thermal_system, state_box + [(0.0, 10.0)])
        assert rep_pos.verdict == "monotone"

    def test_witness_invariant(self, thermal_system):
        state_box = [(0.0, 1.0), (0.0, 0.25), (0.0, 8.0)]
        for u_box in [(-10.0, 10.0), (0.0, 10.0)]:
            rep = check_kamke_muller(thermal_system, state_box + [u_box])
            assert (rep.verdict == "non_monotone") == bool(rep.witnesses)

    def test_bad_box_shape(self, simple_ecm_system):
        with pytest.raises(ParameterError, match="box"):
            check_kamke_muller(simple_ecm_system, [(0.0, 1.0)])

    def test_deterministic_given_seed(self, thermal_system):
        box = [(0.0, 1.0), (0.0, 0.25), (0.0, 8.0), (-10.0, 10.0)]
        a = check_kamke_muller(thermal_system, box, seed=42)
        b = check_kamke_muller(thermal_system, box, seed=42)
        assert a == b


class TestExcitability:
    def test_positive_b_direct_edges(self):
        from monoride import PadeSpmParams, build_pade_spm
        sys_, _ = build_pade_spm(PadeSpmParams(-1.0, -2.0, 1.0, 1.0, 1.0, 1, 1, 1))
        rep = check_excitability(sys_, [(0.0, 1.0)] * 3 + [(0.0, 1.0)])
        assert rep.excitable and rep.method == "influence-graph"

    def test_decoupled_state_unreachable(self):
        A = np.diag([0.0, -0.1])
        B = np.array([[1 / 3300.0], [0.0]])
        sys_ = ControlSystem(2, 1, lambda x, u: x @ A.T + u @ B.T, linear_part=(A, B))
        rep = check_excitability(sys_, [(0.0, 1.0)] * 2 + [(0.0, 1.0)])
        assert not rep.excitable
        assert (0, 1) in rep.unreachable

    def test_fd_chain_reachability(self):
        p = FdSpmParams(diffusivity=1.0, particle_radius=9.0, n_interior=8,
                        surface_area=1.0, collector_area=1.0, thickness=1.0)
        sys_, _ = build_fd_spm(p)
        rep = check_excitability(sys_, [(0.0, 1.0)] * 8 + [(0.0, 1.0)])
        assert rep.excitable  # the input enters at the last node and diffuses


class TestTrajectoryOrder:
    def test_ecm_ordered_inputs(self, simple_ecm_system):
        res = trajectory_order_test(simple_ecm_system, np.zeros(2), np.zeros(2),
                                    lambda t: 5.0, lambda t: 10.0, 300.0, 0.5)
        assert res.ordered and res.min_margin >= -1e-12

    def test_identical_inputs_zero_margin(self, simple_ecm_system):
        res = trajectory_order_test(simple_ecm_system, np.zeros(2), np.zeros(2),
                                    lambda t: 5.0, lambda t: 5.0, 100.0, 0.5)
        assert res.ordered and res.min_margin == 0.0

    def test_non_monotone_toy_fails_immediately(self):
        toy = ControlSystem(2, 1,
                            lambda x, u: np.stack([-u[..., 0], u[..., 0]], axis=-1))
        res = trajectory_order_test(toy, np.zeros(2), np.zeros(2),
                                    lambda t: 0.0, lambda t: 1.0, 10.0, 0.1)
        assert not res.ordered
        assert res.first_violation_time == pytest.approx(0.1)

    def test_unordered_arguments_are_caller_errors(self, simple_ecm_system):
        with pytest.raises(ParameterError, match="initial states"):
            trajectory_order_test(simple_ecm_system, np.array([0.5, 0.0]), np.zeros(2),
                                  lambda t: 1.0, lambda t: 1.0, 10.0, 0.1)
        with pytest.raises(ParameterError, match="inputs"):
            trajectory_order_test(simple_ecm_system, np.zeros(2), np.zeros(2),
                                  lambda t: 2.0, lambda t: 1.0, 10.0, 0.1)

    def test_random_ordered_pairs_on_certified_system(self, simple_ecm_system):
        # executable content of order preservation on a certified-monotone model
        rng = np.random.default_rng(5)
        for _ in range(10):
            x0_b = rng.uniform(0.0, 0.5, size=2)
            x0_a = x0_b * rng.uniform(0.0, 1.0, size=2)
            levels_b = rng.uniform(0.0, 10.0, size=4)
            levels_a = levels_b * rng.uniform(0.0, 1.0, size=4)

            def make(levels):
                return lambda t: levels[min(3, int(t / 25.0))]

            res = trajectory_order_test(simple_ecm_system, x0_a, x0_b,
                                        make(levels_a), make(levels_b), 100.0, 0.25)
            assert res.ordered


def test_check_cost_monotone_flags_temperature_penalty():
    # charging reward minus a temperature penalty is not monotone
    def bad_cost(x, u):
        return x[..., 0] + u[..., 0] - x[..., 2]

    box = [(0.0, 1.0), (0.0, 0.25), (0.0, 8.0), (0.0, 10.0)]
    rep = check_cost_monotone(bad_cost, box, n_states=3)
    assert rep.verdict == "non_monotone"
    assert any(w.wrt == "state" and w.from_index == 2 for w in rep.witnesses)

    def good_cost(x, u):
        return u[..., 0]

    assert check_cost_monotone(good_cost, box, n_states=3).verdict == "monotone"

import numpy as np
import pytest

from monoride import (BangRidePolicy, ConstraintSet, EcmParams, ParameterError,
                      RideInfeasibleError, build_ecm, engaged_profile, integrate,
                      max_violation, ride_input, simulate_bang_ride,
                      upper_bound_input, upper_bound_state, voltage_limit)

from conftest import make_fastcharge_constraints


@pytest.fixture
def cc_only_policy(ecm_params):
    cset = ConstraintSet((upper_bound_input(9.0, name="current_max"),))
    return build_ecm(ecm_params), BangRidePolicy(constraints=cset, u_max=9.0)


class TestRideInput:
    def test_bang_phase(self, cc_only_policy):
        sys_, policy = cc_only_policy
        u, engaged = ride_input(sys_, np.zeros(2), policy, lookahead_dt=0.1)
        assert u == 9.0
        assert engaged == [policy.constraints.index_of("current_max")]

    def test_voltage_ride_solves_linear_constraint(self, ecm_params):
        # U(1)=4.2, rc voltage 0.2 -> 4.4 + 0.01 u = 4.5 at u = 10
        cset = ConstraintSet((upper_bound_input(50.0, name="current_max"),
                              voltage_limit(ecm_params, 4.5, name="voltage_max")))
        policy = BangRidePolicy(constraints=cset, u_max=50.0)
        sys_ = build_ecm(ecm_params)
        u, engaged = ride_input(sys_, np.array([1.0, 0.2]), policy, lookahead_dt=0.1)
        assert u == pytest.approx(10.0, abs=1e-6)
        assert engaged == [cset.index_of("voltage_max")]

    def test_soc_cap_forces_zero_current(self, ecm_params):
        cset = ConstraintSet((upper_bound_state(0, 1.0, name="soc_max"),
                              upper_bound_input(9.0, name="current_max")))
        policy = BangRidePolicy(constraints=cset, u_max=9.0)
        sys_ = build_ecm(ecm_params)
        u, engaged = ride_input(sys_, np.array([1.0, 0.0]), policy, lookahead_dt=1.0)
        # fully charged: the lookahead lets through only the tolerance slack
        assert 0.0 <= u <= cset.tol_active * 3300.0 / 1.0 + 1e-9
        assert cset.index_of("soc_max") in engaged

    def test_infeasible_state_raises(self, ecm_params):
        cset = ConstraintSet((upper_bound_state(0, 1.0, name="soc_max"),
                              upper_bound_input(9.0, name="current_max")))
        policy = BangRidePolicy(constraints=cset, u_max=9.0)
        sys_ = build_ecm(ecm_params)
        with pytest.raises(RideInfeasibleError) as exc:
            ride_input(sys_, np.array([1.5, 0.0]), policy, lookahead_dt=0.1)
        assert exc.value.constraint_name == "soc_max"

    def test_policy_validation(self, ecm_params):
        cset = ConstraintSet((upper_bound_input(9.0),))
        with pytest.raises(ParameterError, match="u_min"):
            BangRidePolicy(constraints=cset, u_max=0.0, u_min=0.0)


class TestSimulateBangRide:
    def test_bang_only_equals_constant_current(self, cc_only_policy):
        sys_, policy = cc_only_policy
        closed = simulate_bang_ride(sys_, np.zeros(2), policy, 100.0, 0.5)
        open_loop = integrate(sys_, np.zeros(2), lambda t: 9.0, 100.0, 0.5)
        assert np.array_equal(closed.states, open_loop.states)
        assert np.all(closed.inputs == 9.0)

    def test_inadmissible_x0_fails_at_t0(self, ecm_params):
        cset = ConstraintSet((upper_bound_state(0, 1.0, name="soc_max"),
                              upper_bound_input(9.0, name="current_max")))
        policy = BangRidePolicy(constraints=cset, u_max=9.0)
        sys_ = build_ecm(ecm_params)
        with pytest.raises(RideInfeasibleError) as exc:
            simulate_bang_ride(sys_, np.array([2.0, 0.0]), policy, 10.0, 0.1)
        assert exc.value.time == 0.0

    def test_fastcharge_phases(self, fastcharge_problem):
        sys_, x0, cset, policy = fastcharge_problem
        traj = simulate_bang_ride(sys_, x0, policy, 600.0, 0.25)
        u_bar = policy.u_max

        # admissibility within twice the active tolerance
        worst, _, _ = max_violation(traj, cset)
        assert worst >= -2 * cset.tol_active

        u = traj.inputs[:, 0]
        # initial current-limited phase of positive duration
        assert np.all(u[:100] == u_bar)
        # the current eventually leaves the bound and decays
        assert u[-1] < 0.05 * u_bar
        # soc approaches its cap from below
        soc = traj.states[:, 0]
        assert np.all(np.diff(soc) >= -1e-15)
        assert soc[-1] >= 0.999

    def test_engagement_never_leaves_a_slack_tail(self, fastcharge_problem):
        # at every grid time some constraint is engaged at that time or later
        sys_, x0, cset, policy = fastcharge_problem
        traj = simulate_bang_ride(sys_, x0, policy, 600.0, 0.25)
        tol_engaged = 1e-4
        worst = cset.residuals(traj.states, traj.inputs).min(axis=1)
        engaged_somewhere_later = np.minimum.accumulate(worst[::-1])[::-1] <= tol_engaged
        assert np.all(engaged_somewhere_later)


class TestEngagedProfile:
    def test_pure_bang_profile(self, cc_only_policy):
        sys_, policy = cc_only_policy
        traj = simulate_bang_ride(sys_, np.zeros(2), policy, 10.0, 0.5)
        profile = engaged_profile(traj, policy.constraints)
        assert all(p == [0] for p in profile)

    def test_fastcharge_sequence(self, fastcharge_problem):
        sys_, x0, cset, policy = fastcharge_problem
        traj = simulate_bang_ride(sys_, x0, policy, 600.0, 0.25)
        profile = engaged_profile(traj, cset)
        i_u = cset.index_of("current_max")
        i_v = cset.index_of("voltage_max")
        i_s = cset.index_of("soc_max")
        # collapse to the sequence of distinct engaged sets, dropping
        # transition points where nothing sits exactly at zero
        sequence = []
        for p in profile:
            if p and (not sequence or sequence[-1] != p):
                sequence.append(p)
        assert sequence == [[i_u], [i_v], [i_s]]

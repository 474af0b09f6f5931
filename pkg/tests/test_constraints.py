import numpy as np
import pytest

from monoride import (ConstraintSet, EcmParams, ParameterError, PlatingTable,
                      lower_bound_input, plating_constraint, temperature_limit,
                      upper_bound_input, upper_bound_state,
                      verify_nonincreasing_in_u, voltage_limit)


@pytest.fixture
def voltage_ecm():
    return EcmParams(capacity=3300.0, series_resistance=0.01,
                     rc_pairs=((0.01, 1000.0),))


class TestConstructors:
    def test_upper_bound_state(self):
        c = upper_bound_state(0, 1.0)
        assert c(np.array([0.4, 0.0]), 0.0) == pytest.approx(0.6)
        assert c(np.array([1.0, 0.0]), 0.0) == pytest.approx(0.0)
        assert c(np.array([1.2, 0.0]), 0.0) == pytest.approx(-0.2)
        assert not c.depends_on_u

    def test_upper_bound_input(self):
        c = upper_bound_input(9.0)
        assert c(np.zeros(2), 0.0) == pytest.approx(9.0)
        assert c(np.zeros(2), 9.0) == pytest.approx(0.0)
        assert c(np.zeros(2), 10.0) == pytest.approx(-1.0)
        assert c.depends_on_u and c.declared_nonincreasing_in_u

    def test_voltage_limit(self, voltage_ecm):
        c = voltage_limit(voltage_ecm, 4.5)
        # voltage example: U(0.5)=3.6, +0.1 rc, +0.1 ohmic = 3.8 -> slack 0.7
        assert c(np.array([0.5, 0.1]), 10.0) == pytest.approx(0.7)
        # residual hits zero exactly where 4.4 + 0.01 u = 4.5
        x = np.array([1.0, 0.2])  # U(1)=4.2, +0.2 -> 4.4
        assert c(x, 10.0) == pytest.approx(0.0, abs=1e-12)
        # extra trailing thermal state is ignored
        assert c(np.array([1.0, 0.2, 5.0]), 10.0) == pytest.approx(0.0, abs=1e-12)

    def test_temperature_limit(self):
        c = temperature_limit(8.0, 2)
        assert c(np.array([0.0, 0.0, 0.0]), 0.0) == pytest.approx(8.0)
        assert c(np.array([0.0, 0.0, 8.0]), 0.0) == pytest.approx(0.0)
        assert c(np.array([0.0, 0.0, 10.0]), 0.0) == pytest.approx(-2.0)


class TestPlating:
    def table(self):
        return PlatingTable(np.array([0.0, 0.5, 1.0]), np.array([3.0, 2.0, 0.0]))

    def surf(self):
        # surface concentration = first state, no feedthrough
        return lambda x, u: x[..., 0]

    def test_residual_values(self):
        c = plating_constraint(self.table(), self.surf())
        assert c(np.array([0.5]), 1.5) == pytest.approx(0.5)
        assert c(np.array([0.5]), 2.0) == pytest.approx(0.0)   # on the boundary
        assert c(np.array([1.0]), 0.1) == pytest.approx(-0.1)  # inadmissible region

    def test_clamping_counts(self):
        t = self.table()
        c = plating_constraint(t, self.surf())
        c(np.array([2.0]), 0.0)   # above the table range
        c(np.array([-1.0]), 0.0)  # below
        c(np.array([0.5]), 0.0)   # inside
        assert t.clamp_count == 2

    def test_validation(self):
        with pytest.raises(ParameterError, match="strictly increasing"):
            PlatingTable(np.array([0.0, 0.0, 1.0]), np.array([3.0, 2.0, 1.0]))
        with pytest.raises(ParameterError, match="non-increasing"):
            PlatingTable(np.array([0.0, 0.5, 1.0]), np.array([1.0, 2.0, 3.0]))

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("concentration,max_current\n0.0,3.0\n0.5,2.0\n1.0,0.0\n")
        t = PlatingTable.from_csv(path)
        assert t.boundary(0.25) == pytest.approx(2.5)

    def test_csv_requires_header(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("0.0,3.0\n1.0,0.0\n")
        with pytest.raises(ParameterError, match="header"):
            PlatingTable.from_csv(path)

    def test_residual_nonincreasing_in_u(self):
        # with a u-feedthrough in the surface the two effects compound
        table = self.table()
        surf = lambda x, u: x[..., 0] + 0.05 * u[..., 0]  # noqa: E731
        c = plating_constraint(table, surf)
        rng = np.random.default_rng(2)
        for _ in range(100):
            x = rng.uniform(0.0, 1.0, size=1)
            u1 = rng.uniform(0.0, 3.0)
            u2 = u1 + rng.uniform(0.0, 1.0)
            assert c(x, u2) <= c(x, u1) + 1e-12


class TestConstraintSet:
    def make_set(self, voltage_ecm):
        return ConstraintSet((
            upper_bound_state(0, 1.0, name="soc_max"),
            upper_bound_input(9.0, name="current_max"),
            voltage_limit(voltage_ecm, 4.5, name="voltage_max"),
        ))

    def test_residual_stacking_order(self, voltage_ecm):
        cset = self.make_set(voltage_ecm)
        x = np.array([0.5, 0.1])
        r = cset.residuals(x, 10.0)
        assert r.shape == (3,)
        assert r[0] == pytest.approx(0.5)
        assert r[1] == pytest.approx(-1.0)
        assert r[2] == pytest.approx(0.7)
        # name round trip keeps indices stable
        assert cset.names == ("soc_max", "current_max", "voltage_max")
        assert cset.index_of("voltage_max") == 2

    def test_is_admissible_boundary_inclusive(self, voltage_ecm):
        cset = self.make_set(voltage_ecm)
        x = np.array([0.2, 0.0])
        assert cset.is_admissible(x, 1.0)
        assert not cset.is_admissible(x, 9.0 + 3e-6)   # exceeds by 2 tol
        assert cset.is_admissible(x, 9.0 + 1e-6)       # exactly -tol residual

    def test_active_set(self, voltage_ecm):
        cset = self.make_set(voltage_ecm)
        # engineered residuals (0.1, 0, ~0): input and voltage tight, soc slack
        x = np.array([0.9, 0.33])  # U(0.9)=4.08, +0.33 +0.01*9 = 4.5 at u = 9
        r = cset.residuals(x, 9.0)
        assert r[0] == pytest.approx(0.1)
        assert r[1] == pytest.approx(0.0, abs=1e-12)
        assert r[2] == pytest.approx(0.0, abs=1e-12)
        assert cset.active_set(x, 9.0) == [1, 2]
        # residuals within +/- tol count as engaged, including exact zeros
        assert cset.active_set(np.array([1.0 - 1e-9, 0.0]), 0.0) == [0]
        assert cset.active_set(np.array([1.0, 0.0]), 0.0) == [0]
        assert cset.active_set(np.array([0.2, 0.0]), 1.0) == []

    def test_unique_names_required(self):
        with pytest.raises(ParameterError, match="unique"):
            ConstraintSet((upper_bound_input(1.0), upper_bound_input(2.0)))

    def test_empty_set_rejected(self):
        with pytest.raises(ParameterError, match="at least one"):
            ConstraintSet(())


class TestInputDirection:
    def test_shipped_constructors_pass_and_lower_bound_fails(self, voltage_ecm):
        cset = ConstraintSet((
            upper_bound_state(0, 1.0, name="soc_max"),
            upper_bound_input(9.0, name="current_max"),
            voltage_limit(voltage_ecm, 4.5, name="voltage_max"),
            lower_bound_input(0.5, name="current_min"),
        ))
        box = [(0.0, 1.0), (0.0, 0.25), (0.0, 10.0)]
        reports = {r.name: r for r in verify_nonincreasing_in_u(cset, box, n_states=2)}
        assert reports["soc_max"].nonincreasing
        assert reports["current_max"].nonincreasing
        assert reports["current_max"].max_derivative == pytest.approx(-1.0, abs=1e-6)
        assert reports["voltage_max"].nonincreasing
        # sampled derivative of the voltage residual is exactly -R0
        assert reports["voltage_max"].max_derivative == pytest.approx(-0.01, abs=1e-8)
        assert not reports["current_min"].nonincreasing
        assert reports["current_min"].witnesses

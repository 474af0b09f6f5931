from pathlib import Path

import numpy as np
import pytest

from monoride import (BangRidePolicy, ConstraintSet, EcmParams, ThermalParams,
                      affine_ocv, build_ecm, build_thermal_coupled_ecm,
                      temperature_limit, upper_bound_input, upper_bound_state,
                      voltage_limit)

REPO_ROOT = Path(__file__).resolve().parents[1]
EXAMPLES_DIR = REPO_ROOT / "examples"
SECTION3_CONFIG = EXAMPLES_DIR / "section3.json"


@pytest.fixture
def ecm_params():
    # plain 2-state circuit with the repo default affine OCV
    return EcmParams(capacity=3300.0, series_resistance=0.01,
                     rc_pairs=((0.01, 1000.0),))


@pytest.fixture
def fastcharge_ecm_params():
    # parameters of the shipped fast-charge config
    return EcmParams(capacity=3300.0, series_resistance=0.01,
                     rc_pairs=((0.02, 1000.0),), ocv=affine_ocv(3.0, 1.35))


@pytest.fixture
def thermal_params():
    return ThermalParams(mass=0.05, heat_capacity=2000.0, thermal_resistance=2.0)


@pytest.fixture
def thermal_system(fastcharge_ecm_params, thermal_params):
    return build_thermal_coupled_ecm(fastcharge_ecm_params, thermal_params)


def make_fastcharge_constraints(ecm, u_bar=10 * 3300 / 3600.0):
    return ConstraintSet((
        upper_bound_state(0, 1.0, name="soc_max"),
        upper_bound_state(1, 0.25, name="rc_voltage_max"),
        temperature_limit(8.0, 2, name="temperature_max"),
        upper_bound_input(u_bar, name="current_max"),
        voltage_limit(ecm, 4.5, name="voltage_max"),
    ))


@pytest.fixture
def fastcharge_problem(fastcharge_ecm_params, thermal_system):
    u_bar = 10 * 3300 / 3600.0
    cset = make_fastcharge_constraints(fastcharge_ecm_params, u_bar)
    policy = BangRidePolicy(constraints=cset, u_max=u_bar)
    return thermal_system, np.zeros(3), cset, policy


@pytest.fixture
def simple_ecm_system(ecm_params):
    return build_ecm(ecm_params)

"""Fixed-step RK4 integration, trajectory records, and the cost functional.

The integrator is deliberately a classical fixed-step fourth-order
Runge-Kutta scheme with the input held constant over each step (zero-order
hold, sampled at the step start).  Fixed stepping keeps grids deterministic,
which makes golden files and trajectory-ordering comparisons reproducible;
the battery models here are non-stiff at charging timescales so nothing
fancier is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .constraints import ConstraintSet
from .dynamics import ControlSystem
from .errors import IntegrationBlowupError, ParameterError

__all__ = [
    "Trajectory",
    "MonotonicityClass",
    "RunningCost",
    "soc_rate_cost",
    "state_component_cost",
    "rk4_step",
    "integrate",
    "cost",
    "max_violation",
    "zero_order_hold",
    "STEP_CAP",
]

STEP_CAP = 10**7


@dataclass(frozen=True)
class Trajectory:
    """A sampled (input, state) pair on a strictly increasing time grid.

    ``states`` has one row per grid time; ``inputs`` likewise, with the
    input at each grid time being the value held over the following step.
    """

    times: np.ndarray      # (T+1,)
    states: np.ndarray     # (T+1, n)
    inputs: np.ndarray     # (T+1, m)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        inputs = np.asarray(self.inputs, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)
        if times.ndim != 1 or states.ndim != 2 or inputs.ndim != 2:
            raise ParameterError("times must be 1-D; states and inputs 2-D")
        if not (len(times) == len(states) == len(inputs)):
            raise ParameterError("times, states and inputs must have equal length")
        if len(times) < 1 or times[0] != 0.0:
            raise ParameterError("the time grid must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("times must be strictly increasing")
        for name, arr in (("times", times), ("states", states), ("inputs", inputs)):
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} contains non-finite values")

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def to_csv(self, path) -> None:
        """Write ``t,x1..xn,u1..um`` rows with 17 significant digits and LF
        line endings."""
        header = ["t"]
        header += [f"x{k}" for k in range(1, self.n_states + 1)]
        header += [f"u{k}" for k in range(1, self.n_inputs + 1)]
        data = np.column_stack([self.times, self.states, self.inputs])
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path) as fh:
            header = fh.readline().strip()
            cols = header.split(",")
            if not cols or cols[0] != "t":
                raise ParameterError(f"trajectory CSV must start with a 't' column, got {header!r}")
            n = sum(1 for c in cols if c.startswith("x"))
            m = sum(1 for c in cols if c.startswith("u"))
            if n < 1 or m < 1 or len(cols) != 1 + n + m:
                raise ParameterError(f"unrecognised trajectory CSV header {header!r}")
            try:
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise ParameterError(f"malformed trajectory CSV {path}: {exc}") from exc
        if data.size == 0:
            raise ParameterError(f"trajectory CSV {path} has no data rows")
        if data.shape[1] != 1 + n + m:
            raise ParameterError(f"trajectory CSV rows have {data.shape[1]} columns, expected {1 + n + m}")
        return cls(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:])


class MonotonicityClass(Enum):
    """Declared monotonicity structure of a running cost.

    MONOTONE: non-decreasing jointly in state and input.
    STRICT_IN_INPUT: additionally strictly increasing in the input.
    STRICT_IN_STATE: strictly increasing in the state; yields strict cost
    gains only in combination with an excitable system.
    """

    MONOTONE = "monotone"
    STRICT_IN_INPUT = "strict_in_input"
    STRICT_IN_STATE = "strict_in_state"


@dataclass(frozen=True)
class RunningCost:
    """Integrand L(x, u) of the cost functional, with its declared
    monotonicity class.  ``evaluate`` follows the broadcasting convention."""

    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    monotonicity_class: MonotonicityClass = MonotonicityClass.MONOTONE
    description: str = ""

    def __call__(self, x, u):
        return self.evaluate(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def soc_rate_cost(capacity: float) -> RunningCost:
    """L = u / Q: integrating it gives the state of charge added over the
    horizon.  Strictly increasing in the input."""
    if not capacity > 0:
        raise ParameterError("capacity must be > 0")

    def evaluate(x, u):
        return np.asarray(u, dtype=float)[..., 0] / capacity

    return RunningCost(evaluate, MonotonicityClass.STRICT_IN_INPUT,
                       description="charge_rate")


def state_component_cost(index: int, description: str = "") -> RunningCost:
    """L = x[index] (0-based): e.g. index 0 on an ECM integrates the state
    of charge over time.  Strict in the state, so strict cost gains need an
    excitable system."""
    if index < 0:
        raise ParameterError("state index must be >= 0")

    def evaluate(x, u):
        return np.asarray(x, dtype=float)[..., index]

    return RunningCost(evaluate, MonotonicityClass.STRICT_IN_STATE,
                       description=description or f"state_{index}")


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def rk4_step(field, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step with the input held constant."""
    k1 = field(x, u)
    k2 = field(x + 0.5 * dt * k1, u)
    k3 = field(x + 0.5 * dt * k2, u)
    k4 = field(x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _grid(t_f: float, dt: float) -> tuple[int, float]:
    if not t_f > 0:
        raise ParameterError("t_f must be > 0")
    if not dt > 0:
        raise ParameterError("dt must be > 0")
    if t_f / dt > STEP_CAP:
        raise ParameterError(f"t_f/dt = {t_f / dt:.3g} exceeds the step cap {STEP_CAP:g}")
    n_steps = max(1, int(round(t_f / dt)))
    return n_steps, t_f / n_steps


def zero_order_hold(traj: Trajectory) -> Callable[[float], np.ndarray]:
    """Replay a recorded input column as a piecewise-constant control."""
    times = traj.times
    inputs = traj.inputs

    def control(t: float) -> np.ndarray:
        k = int(np.searchsorted(times, t, side="right")) - 1
        return inputs[min(max(k, 0), len(times) - 1)]

    return control


def integrate(sys: ControlSystem, x0: np.ndarray,
              control: Callable[[float], np.ndarray | float],
              t_f: float, dt: float) -> Trajectory:
    """Integrate ``dx/dt = f(x, u)`` from 0 to ``t_f`` with RK4 and a
    zero-order-hold input.

    ``control(t)`` is sampled at the start of each step and held constant
    over it; it may return a scalar for single-input systems.  The step size
    is rounded so the grid lands on ``t_f`` exactly.  A non-finite state
    aborts with :class:`IntegrationBlowupError` carrying the last good time.
    """
    n_steps, dt_eff = _grid(t_f, dt)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n_states,):
        raise ParameterError(f"x0 must have shape ({sys.n_states},), got {x0.shape}")

    times = np.linspace(0.0, t_f, n_steps + 1)
    states = np.empty((n_steps + 1, sys.n_states))
    inputs = np.empty((n_steps + 1, sys.n_inputs))
    states[0] = x0

    x = x0
    for k in range(n_steps + 1):
        u = np.atleast_1d(np.asarray(control(float(times[k])), dtype=float))
        if u.shape != (sys.n_inputs,):
            raise ParameterError(f"control(t) must return {sys.n_inputs} value(s), got shape {u.shape}")
        inputs[k] = u
        if k == n_steps:
            break
        x = rk4_step(sys.field, x, u, dt_eff)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowupError(
                f"state became non-finite between t = {times[k]:.6g} and t = {times[k + 1]:.6g}",
                last_good_time=float(times[k]))
        states[k + 1] = x

    return Trajectory(times, states, inputs)


def cost(traj: Trajectory, running_cost: RunningCost) -> float:
    """Trapezoidal integral of L(x, u) over the trajectory grid."""
    values = np.asarray(running_cost(traj.states, traj.inputs), dtype=float)
    if values.shape != traj.times.shape:
        raise ParameterError("running cost must return one value per grid point")
    return float(np.trapezoid(values, traj.times))


def max_violation(traj: Trajectory, cset: ConstraintSet) -> tuple[float, float, int]:
    """Worst constraint residual along a trajectory.

    Returns ``(worst residual, time, constraint index)``; a nonnegative
    worst residual means the trajectory is admissible at grid resolution.
    """
    if len(cset) < 1:
        raise ParameterError("constraint set is empty")
    r = cset.residuals(traj.states, traj.inputs)  # (T+1, s)
    flat = int(np.argmin(r))
    k_time, k_con = np.unravel_index(flat, r.shape)
    return float(r[k_time, k_con]), float(traj.times[k_time]), int(k_con)

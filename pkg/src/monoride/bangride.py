"""Bang-and-ride charging policy.

At every instant the policy applies the largest input in ``[u_min, u_max]``
that keeps all constraints satisfied: the maximum itself while everything is
slack (bang), or the input pinning the binding constraint at zero (ride).
Because every residual is non-increasing in the input, the feasible set in u
is an interval ``[u_min, u*]`` and the boundary ``u*`` can be found by
bisection.

Mixed constraints (those depending on u) are enforced instantaneously.
Pure state constraints cannot be steered instantaneously, so they are
enforced through a one-step lookahead: a candidate u is feasible only if the
state one RK4 step ahead still satisfies them.  The lookahead horizon
defaults to the simulation step, which bounds the discretisation error of
the ride by the usual O(dt) of the zero-order hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet
from .dynamics import ControlSystem
from .errors import ParameterError, RideInfeasibleError
from .simulate import Trajectory, rk4_step, _grid

__all__ = ["BangRidePolicy", "ride_input", "simulate_bang_ride", "engaged_profile"]


@dataclass(frozen=True)
class BangRidePolicy:
    """Search interval, constraint set and numerical knobs of the policy.

    ``u_min`` is the charging floor (an interval attribute, deliberately not
    a constraint); the default 0 encodes charging-only operation.
    ``bisection_tol`` is absolute in input units; when None it defaults to
    ``1e-9 * (u_max - u_min)``.
    """

    constraints: ConstraintSet
    u_max: float
    u_min: float = 0.0
    bisection_tol: float | None = None
    max_iter: int = 60
    lookahead_dt: float | None = None

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ParameterError("u_min must be < u_max")
        if self.bisection_tol is not None and not self.bisection_tol > 0:
            raise ParameterError("bisection_tol must be > 0")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.lookahead_dt is not None and not self.lookahead_dt > 0:
            raise ParameterError("lookahead_dt must be > 0")

    @property
    def tol(self) -> float:
        return self.bisection_tol if self.bisection_tol is not None \
            else 1e-9 * (self.u_max - self.u_min)


def _split(cset: ConstraintSet):
    mixed = [(k, c) for k, c in enumerate(cset) if c.depends_on_u]
    state_only = [(k, c) for k, c in enumerate(cset) if not c.depends_on_u]
    return mixed, state_only


def ride_input(sys: ControlSystem, x: np.ndarray, policy: BangRidePolicy,
               lookahead_dt: float) -> tuple[float, list[int]]:
    """Largest admissible input at state ``x`` and the engaged constraints.

    Returns ``(u, engaged)`` where ``engaged`` lists the indices of
    constraints within the active tolerance of zero at the returned point
    (for state-only constraints, at the lookahead state).  Raises
    :class:`RideInfeasibleError` when even ``u_min`` is inadmissible, which
    signals the state has left the admissible region.
    """
    x = np.asarray(x, dtype=float)
    cset = policy.constraints
    tol = cset.tol_active
    mixed, state_only = _split(cset)

    def residual_vector(u: float) -> np.ndarray:
        u_arr = np.array([u])
        r = np.empty(len(cset))
        for k, c in mixed:
            r[k] = c.residual(x, u_arr)
        if state_only:
            x_ahead = rk4_step(sys.field, x, u_arr, lookahead_dt)
            for k, c in state_only:
                r[k] = c.residual(x_ahead, u_arr)
        return r

    def feasible(u: float) -> bool:
        return bool(np.all(residual_vector(u) >= -tol))

    r_max = residual_vector(policy.u_max)
    if np.all(r_max >= -tol):
        u_star, r_star = policy.u_max, r_max
    else:
        r_min = residual_vector(policy.u_min)
        if not np.all(r_min >= -tol):
            k_bad = int(np.argmin(r_min))
            raise RideInfeasibleError(
                f"constraint '{cset.names[k_bad]}' is violated even at u_min = "
                f"{policy.u_min:g} (residual {r_min[k_bad]:.3g})",
                constraint_name=cset.names[k_bad], residual=float(r_min[k_bad]))
        # bisection needs the feasible set to be a lower interval in u
        assert np.all(r_min >= r_max - 1e-9 * (1.0 + np.abs(r_min))), \
            "constraint residuals must be non-increasing in u"
        lo, hi = policy.u_min, policy.u_max
        for _ in range(policy.max_iter):
            if hi - lo <= policy.tol:
                break
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        u_star, r_star = lo, residual_vector(lo)

    engaged = [k for k in range(len(cset)) if abs(r_star[k]) <= tol]
    return float(u_star), engaged


def simulate_bang_ride(sys: ControlSystem, x0: np.ndarray, policy: BangRidePolicy,
                       t_f: float, dt: float) -> Trajectory:
    """Closed-loop bang-and-ride run: recompute the ride input at every grid
    time and hold it for one step.

    The initial state must be admissible; infeasibility at any grid time is
    reported with the time attached.
    """
    n_steps, dt_eff = _grid(t_f, dt)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n_states,):
        raise ParameterError(f"x0 must have shape ({sys.n_states},), got {x0.shape}")
    lookahead = policy.lookahead_dt if policy.lookahead_dt is not None else dt_eff

    times = np.linspace(0.0, t_f, n_steps + 1)
    states = np.empty((n_steps + 1, sys.n_states))
    inputs = np.empty((n_steps + 1, 1))
    states[0] = x0

    x = x0
    for k in range(n_steps + 1):
        try:
            u, _ = ride_input(sys, x, policy, lookahead)
        except RideInfeasibleError as exc:
            exc.time = float(times[k])
            raise
        inputs[k, 0] = u
        if k == n_steps:
            break
        x = rk4_step(sys.field, x, np.array([u]), dt_eff)
        states[k + 1] = x

    return Trajectory(times, states, inputs)


def engaged_profile(traj: Trajectory, cset: ConstraintSet,
                    tol: float | None = None) -> list[list[int]]:
    """Active constraint indices at every grid point of a trajectory.

    Useful for segmenting a charge into named phases (current-limited,
    voltage-limited, capacity-capped, ...).  When several constraints sit at
    zero simultaneously all of them are reported; the order carries no
    meaning.
    """
    if len(cset) < 1:
        raise ParameterError("constraint set is empty")
    tol = cset.tol_active if tol is None else tol
    r = cset.residuals(traj.states, traj.inputs)
    return [[int(k) for k in np.flatnonzero(np.abs(row) <= tol)] for row in r]

"""Necessity test for optimality, improvement certificates, and a
brute-force oracle.

For monotone dynamics, monotone running cost and constraints that are
non-increasing in the input, an admissible trajectory whose constraints are
all *strictly* slack on a terminal window ``[t0, t_f]`` cannot be optimal:
a small nonnegative input bump supported in that window keeps the trajectory
admissible and strictly increases the cost.  :func:`necessity_check`
implements this test constructively -- it never declares a trajectory
non-optimal without actually building an admissible perturbation and
verifying the cost gain by re-integration.

:func:`brute_force_best` is the desk-scale verification oracle: exhaustive
enumeration of piecewise-constant controls over a level grid, integrated
with the same RK4 scheme and step size as the main simulation so observed
gaps reflect policy differences rather than solver differences.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bangride import BangRidePolicy, simulate_bang_ride
from .constraints import ConstraintSet
from .dynamics import ControlSystem
from .errors import (AllInadmissibleError, CertificationError, ParameterError)
from .simulate import (RunningCost, Trajectory, cost, integrate, max_violation,
                       rk4_step, zero_order_hold, _grid)

__all__ = [
    "DEFAULT_TOL_ENGAGED",
    "Improvement",
    "NecessityVerdict",
    "necessity_check",
    "improving_perturbation",
    "OracleResult",
    "brute_force_best",
    "sequence_control",
    "GapResult",
    "oracle_gap",
]

DEFAULT_TOL_ENGAGED = 1e-4
ORACLE_CAP = 10**6


# ---------------------------------------------------------------------------
# Necessity condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Improvement:
    """An admissible input perturbation with a verified cost gain."""

    bump_start: float
    bump_width: float
    bump_height: float
    delta_cost: float
    control: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class NecessityVerdict:
    status: str  # "not_optimal" | "passes_necessity"
    interior_tail: tuple[float, float] | None = None  # (t0, min residual over tail)
    improvement: Improvement | None = None

    @property
    def not_optimal(self) -> bool:
        return self.status == "not_optimal"


def _interior_tail_start(traj: Trajectory, cset: ConstraintSet,
                         tol_engaged: float) -> int | None:
    """Index of the earliest grid point from which every residual stays
    strictly above ``tol_engaged`` through t_f, or None.

    A single-point "tail" at t_f does not count: the test needs a window of
    positive length.
    """
    worst = cset.residuals(traj.states, traj.inputs).min(axis=1)
    slack = worst > tol_engaged
    if not slack[-1]:
        return None
    k0 = len(slack) - 1
    while k0 > 0 and slack[k0 - 1]:
        k0 -= 1
    if k0 >= len(slack) - 1:
        return None  # tail would start at t_f itself
    return k0


def necessity_check(sys: ControlSystem, traj: Trajectory, cset: ConstraintSet,
                    running_cost: RunningCost,
                    tol_engaged: float = DEFAULT_TOL_ENGAGED,
                    bump_height: float = 1.0) -> NecessityVerdict:
    """Test an admissible trajectory against the interior-tail necessity
    condition.

    If some terminal window keeps every constraint slack by more than
    ``tol_engaged``, the trajectory is declared not optimal and the claim is
    certified by :func:`improving_perturbation` (a verified ``delta_cost > 0``
    is part of the verdict).  Otherwise the trajectory passes: note that
    passing is necessary for optimality, not sufficient.  Strictly slack
    windows *before* the last engagement are fine; only a slack tail fails.
    """
    worst, t_worst, k_worst = max_violation(traj, cset)
    if worst < -cset.tol_active:
        raise ParameterError(
            f"trajectory is not admissible: constraint '{cset.names[k_worst]}' "
            f"reaches {worst:.3g} at t = {t_worst:.6g}")

    k0 = _interior_tail_start(traj, cset, tol_engaged)
    if k0 is None:
        return NecessityVerdict("passes_necessity")

    residuals = cset.residuals(traj.states, traj.inputs).min(axis=1)
    t0 = float(traj.times[k0])
    tail_margin = float(residuals[k0:].min())
    improvement = improving_perturbation(sys, traj, cset, running_cost,
                                         bump_height=bump_height,
                                         tol_engaged=tol_engaged)
    return NecessityVerdict("not_optimal", (t0, tail_margin), improvement)


def improving_perturbation(sys: ControlSystem, traj: Trajectory,
                           cset: ConstraintSet, running_cost: RunningCost,
                           bump_height: float = 1.0,
                           bump_width: float | None = None,
                           tol_engaged: float = DEFAULT_TOL_ENGAGED,
                           max_halvings: int = 60) -> Improvement:
    """Build an admissible rectangular input bump inside the interior tail
    and verify that it strictly increases the cost.

    The bump starts at the tail start with width 10% of the tail (at least
    one grid step) unless overridden, and its height is halved until the
    perturbed trajectory is admissible.  Both the baseline and the perturbed
    cost are recomputed with the same integrator and grid, so the reported
    gain is self-consistent.  If no admissible bump with a positive gain is
    found before the height collapses, a :class:`CertificationError` is
    raised -- the claim is never silently assumed.
    """
    if not bump_height > 0:
        raise ParameterError("bump_height must be > 0")
    k0 = _interior_tail_start(traj, cset, tol_engaged)
    if k0 is None:
        raise ParameterError("trajectory has no strictly slack terminal window")

    times = traj.times
    t_f = float(times[-1])
    dt = float(times[1] - times[0])
    t0 = float(times[k0])
    tail = t_f - t0
    if bump_width is None:
        bump_width = max(dt, 0.1 * tail)
    # snap the bump to the grid so trapezoidal quadrature of the bump is exact
    k1 = min(len(times) - 1, k0 + max(1, int(round(bump_width / dt))))
    width = float(times[k1] - times[k0])

    base_control = zero_order_hold(traj)
    x0 = traj.states[0]
    n_steps = len(times) - 1
    base = integrate(sys, x0, base_control, t_f, t_f / n_steps)
    j_base = cost(base, running_cost)

    height = float(bump_height)
    for _ in range(max_halvings):
        def control(t: float, _h=height) -> np.ndarray:
            u = np.atleast_1d(np.asarray(base_control(t), dtype=float)).copy()
            if t0 <= t < t0 + width:
                u = u + _h
            return u

        perturbed = integrate(sys, x0, control, t_f, t_f / n_steps)
        if max_violation(perturbed, cset)[0] >= -cset.tol_active:
            delta = cost(perturbed, running_cost) - j_base
            if delta > 0.0:
                return Improvement(t0, width, height, float(delta), control)
            raise CertificationError(
                f"admissible bump of height {height:.3g} produced a non-positive "
                f"cost change {delta:.3g}; the running cost is not strict enough "
                "for a constructive certificate")
        height *= 0.5

    raise CertificationError(
        f"no admissible bump found before the height collapsed below "
        f"{height:.3g}; cannot certify non-optimality")


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _decode_sequence(index: int, levels: tuple[float, ...], n_steps: int) -> tuple[float, ...]:
    """Enumeration index -> control levels (first step is the most
    significant digit, matching ``itertools.product`` order)."""
    digits = []
    base = len(levels)
    for _ in range(n_steps):
        index, d = divmod(index, base)
        digits.append(levels[d])
    return tuple(reversed(digits))


@dataclass(frozen=True)
class OracleResult:
    """Outcome of exhaustive enumeration over piecewise-constant controls.

    ``all_costs``/``all_admissible`` keep the per-sequence audit trail in
    enumeration order (first step varies slowest, mirroring
    ``itertools.product``); sequence i decodes from i via mixed-radix digits
    over the level grid.
    """

    best_cost: float
    best_sequence: tuple[float, ...]
    n_evaluated: int
    n_admissible: int
    levels: tuple[float, ...]
    n_steps: int
    all_costs: np.ndarray
    all_admissible: np.ndarray

    def sequence(self, index: int) -> tuple[float, ...]:
        return _decode_sequence(index, self.levels, self.n_steps)

    def to_csv(self, path) -> None:
        """Audit export: one row per sequence with its cost and
        admissibility flag."""
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"step_{k}" for k in range(1, self.n_steps + 1)]
                            + ["cost", "admissible"])
            for i in range(self.n_evaluated):
                row = [f"{v:.17g}" for v in self.sequence(i)]
                row.append(f"{self.all_costs[i]:.17g}")
                row.append(str(int(self.all_admissible[i])))
                writer.writerow(row)


def brute_force_best(sys: ControlSystem, x0: np.ndarray, cset: ConstraintSet,
                     running_cost: RunningCost, t_f: float, n_steps: int,
                     levels: Sequence[float], dt: float,
                     cap: int = ORACLE_CAP) -> OracleResult:
    """Exhaustively enumerate piecewise-constant controls on ``n_steps``
    equal intervals over the level grid and return the admissible maximiser.

    Every sequence is integrated with the same RK4 scheme and grid as
    :func:`monoride.simulate.integrate`; admissibility is judged at grid
    resolution against ``cset.tol_active``.  Ties break to the first
    sequence in enumeration order, so parallel or batched evaluation cannot
    change the winner.  The total count ``len(levels) ** n_steps`` must stay
    under ``cap``.

    Implementation note: sequences sharing a prefix share the integration of
    that prefix, and all branches at one tree depth advance through numpy in
    a single batch.  This changes nothing observable -- per-sequence results
    equal one-at-a-time integration to floating round-off -- but is what
    makes six-figure sequence counts tractable.
    """
    levels = tuple(float(v) for v in levels)
    if len(levels) < 1:
        raise ParameterError("levels must be non-empty")
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    n_seq = len(levels) ** n_steps
    if n_seq > cap:
        raise ParameterError(f"{len(levels)}^{n_steps} = {n_seq} sequences exceeds the cap {cap}")
    if sys.n_inputs != 1:
        raise ParameterError("the oracle supports single-input systems")

    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n_states,):
        raise ParameterError(f"x0 must have shape ({sys.n_states},), got {x0.shape}")

    n_time, dt_eff = _grid(t_f, dt)
    seg_steps = math.ceil(n_time / n_steps)
    n_time = seg_steps * n_steps
    dt_eff = t_f / n_time

    level_col = np.asarray(levels, dtype=float)[:, None]  # (L, 1)
    n_levels = len(levels)

    x = x0[None, :].copy()            # (B, n)
    j_acc = np.zeros(1)               # running trapezoidal cost per branch
    worst = np.full(1, np.inf)        # most violated residual per branch
    prev_l = None                     # integrand at the previous grid point

    for _ in range(n_steps):
        b = x.shape[0]
        x = np.repeat(x, n_levels, axis=0)
        j_acc = np.repeat(j_acc, n_levels)
        worst = np.repeat(worst, n_levels)
        if prev_l is not None:
            prev_l = np.repeat(prev_l, n_levels)
        u = np.tile(level_col, (b, 1))  # (B*L, 1), children in level order

        for _ in range(seg_steps):
            r = cset.residuals(x, u).min(axis=-1)
            np.minimum(worst, r, out=worst)
            l_now = np.asarray(running_cost(x, u), dtype=float)
            if prev_l is not None:
                j_acc += 0.5 * dt_eff * (prev_l + l_now)
            prev_l = l_now
            x = rk4_step(sys.field, x, u, dt_eff)

    # final grid point, with the last segment's level still applied
    r = cset.residuals(x, u).min(axis=-1)
    np.minimum(worst, r, out=worst)
    l_now = np.asarray(running_cost(x, u), dtype=float)
    j_acc += 0.5 * dt_eff * (prev_l + l_now)

    admissible = worst >= -cset.tol_active
    n_admissible = int(np.count_nonzero(admissible))
    if n_admissible == 0:
        raise AllInadmissibleError(
            f"all {n_seq} control sequences violate the constraints "
            f"(best residual {worst.max():.3g})")

    scored = np.where(admissible, j_acc, -np.inf)
    best = int(np.argmax(scored))  # first occurrence wins exact ties

    return OracleResult(
        best_cost=float(j_acc[best]),
        best_sequence=_decode_sequence(best, levels, n_steps),
        n_evaluated=n_seq,
        n_admissible=n_admissible,
        levels=levels,
        n_steps=n_steps,
        all_costs=j_acc,
        all_admissible=admissible,
    )


def sequence_control(sequence: Sequence[float], t_f: float) -> Callable[[float], np.ndarray]:
    """Piecewise-constant control over equal intervals, for replaying oracle
    sequences through the plain integrator."""
    seq = np.asarray(sequence, dtype=float)
    n = len(seq)

    def control(t: float) -> np.ndarray:
        k = min(n - 1, int(t / t_f * n)) if t < t_f else n - 1
        return seq[k:k + 1]

    return control


@dataclass(frozen=True)
class GapResult:
    cost_bang_ride: float
    cost_oracle: float
    gap: float  # oracle minus bang-and-ride; negative means bang-and-ride won
    trajectory: Trajectory
    oracle: OracleResult


def oracle_gap(sys: ControlSystem, x0: np.ndarray, cset: ConstraintSet,
               running_cost: RunningCost, t_f: float, n_steps: int,
               levels: Sequence[float], policy: BangRidePolicy,
               dt: float) -> GapResult:
    """Run bang-and-ride and the exhaustive oracle on the same problem and
    report the cost gap.

    The gap may come out slightly negative: bang-and-ride chooses inputs
    from the continuum while the oracle is restricted to the level grid.
    """
    traj = simulate_bang_ride(sys, x0, policy, t_f, dt)
    j_br = cost(traj, running_cost)
    oracle = brute_force_best(sys, x0, cset, running_cost, t_f, n_steps, levels, dt)
    return GapResult(j_br, oracle.best_cost, oracle.best_cost - j_br, traj, oracle)

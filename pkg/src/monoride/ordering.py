"""Componentwise partial-order utilities and monotonicity certification.

A control system is *monotone* when ordered initial states and ordered
inputs produce ordered state trajectories (componentwise, in the
nonnegative-orthant order).  For smooth dynamics this is equivalent to the
Kamke-Muller sign conditions: every off-diagonal state Jacobian entry and
every input Jacobian entry is nonnegative.  For linear systems that reduces
to A being Metzler and B componentwise nonnegative, which is checked exactly;
for nonlinear systems the conditions are sampled with central finite
differences over a user-supplied box, so a "monotone" verdict means
*certified on the sampled box*, not proved globally.

Excitability (every input eventually moves every state) is checked with the
sufficient influence-graph reachability test; verdicts carry the method tag
so callers know a graph-test "True" is sufficient, not characterising.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .dynamics import ControlSystem
from .errors import ParameterError

__all__ = [
    "OrderRelation",
    "vec_compare",
    "is_metzler",
    "is_nonneg",
    "JacobianWitness",
    "MonotonicityReport",
    "check_kamke_muller",
    "ExcitabilityReport",
    "check_excitability",
    "TrajectoryOrderResult",
    "trajectory_order_test",
    "check_cost_monotone",
]

DEFAULT_N_SAMPLES = 512
DEFAULT_FD_STEP = 1e-6
DEFAULT_TOL = 1e-9


class OrderRelation(enum.Enum):
    """How one vector compares to another, componentwise.

    ``STRICTLY_LESS`` means every component is strictly smaller; ``LESS``
    means smaller-or-equal with at least one strict component but not all;
    the GREATER variants mirror these.  Exactly one member applies to any
    pair of equal-length vectors.
    """

    EQUAL = "equal"
    STRICTLY_LESS = "strictly_less"
    LESS = "less"
    STRICTLY_GREATER = "strictly_greater"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"

    @property
    def leq(self) -> bool:
        """True when the relation implies x <= y."""
        return self in (OrderRelation.EQUAL, OrderRelation.LESS,
                        OrderRelation.STRICTLY_LESS)

    @property
    def lt(self) -> bool:
        """True when the relation implies x <= y with x != y."""
        return self in (OrderRelation.LESS, OrderRelation.STRICTLY_LESS)

    @property
    def ll(self) -> bool:
        """True when every component of x is strictly below y."""
        return self is OrderRelation.STRICTLY_LESS


def vec_compare(x: Sequence[float], y: Sequence[float]) -> OrderRelation:
    """Classify the componentwise order of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError(f"vectors must be 1-D with equal length, got {x.shape} and {y.shape}")
    if np.array_equal(x, y):
        return OrderRelation.EQUAL
    if np.all(x < y):
        return OrderRelation.STRICTLY_LESS
    if np.all(x <= y):
        return OrderRelation.LESS
    if np.all(x > y):
        return OrderRelation.STRICTLY_GREATER
    if np.all(x >= y):
        return OrderRelation.GREATER
    return OrderRelation.INCOMPARABLE


def is_metzler(A: np.ndarray, tol: float = 0.0) -> tuple[bool, tuple[int, int] | None]:
    """Check that every off-diagonal entry of a square matrix is >= -tol.

    Returns ``(ok, entry)`` where ``entry`` is the (row, col) index of the
    first violating entry in row-major order, or None.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"matrix must be square, got shape {A.shape}")
    mask = A < -tol
    np.fill_diagonal(mask, False)
    if not mask.any():
        return True, None
    i, j = np.argwhere(mask)[0]
    return False, (int(i), int(j))


def is_nonneg(B: np.ndarray, tol: float = 0.0) -> tuple[bool, tuple[int, int] | None]:
    """Check that every entry of a matrix is >= -tol; same return convention
    as :func:`is_metzler`."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    mask = B < -tol
    if not mask.any():
        return True, None
    i, j = np.argwhere(mask)[0]
    return False, (int(i), int(j))


# ---------------------------------------------------------------------------
# Sampled Kamke-Muller check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JacobianWitness:
    """A sampled point where a sign condition failed.

    ``wrt`` is "state" or "input"; the estimate is the central-difference
    partial derivative of state component ``to_index`` with respect to
    coordinate ``from_index`` of that block.
    """

    wrt: str
    from_index: int
    to_index: int
    estimate: float
    at_state: tuple[float, ...] = ()
    at_input: tuple[float, ...] = ()


@dataclass(frozen=True)
class MonotonicityReport:
    verdict: str  # "monotone" | "non_monotone" | "inconclusive"
    witnesses: tuple[JacobianWitness, ...]
    samples_used: int
    box: tuple[tuple[float, float], ...]
    min_margin: float
    method: str  # "structural" | "sampled"

    @property
    def monotone(self) -> bool:
        return self.verdict == "monotone"


def _validate_box(box, dim) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    if box.shape != (dim, 2):
        raise ParameterError(f"box must have shape ({dim}, 2), got {box.shape}")
    if np.any(box[:, 1] < box[:, 0]):
        raise ParameterError("box upper bounds must be >= lower bounds")
    return box


def _sample_box(box: np.ndarray, n_samples: int, seed: int) -> np.ndarray:
    """Low-discrepancy points filling the box; deterministic given the seed."""
    sampler = qmc.Halton(d=box.shape[0], scramble=True, seed=seed)
    unit = sampler.random(n_samples)
    return box[:, 0] + unit * (box[:, 1] - box[:, 0])


def _jacobian_estimates(sys: ControlSystem, pts: np.ndarray, fd_step: float):
    """Central-difference Jacobian columns of f at a batch of (x, u) points.

    Yields ``(wrt, i, derivative_block)`` where derivative_block has shape
    (n_samples, n_states) and holds d f_j / d z_i for every sample.
    """
    n, m = sys.n_states, sys.n_inputs
    x = pts[:, :n]
    u = pts[:, n:]
    for i in range(n + m):
        col = pts[:, i]
        h = fd_step * np.maximum(1.0, np.abs(col))
        dz = np.zeros_like(pts)
        dz[:, i] = h
        hi = sys.field((pts + dz)[:, :n], (pts + dz)[:, n:])
        lo = sys.field((pts - dz)[:, :n], (pts - dz)[:, n:])
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise ParameterError("vector field returned non-finite values inside the box")
        block = (hi - lo) / (2.0 * h[:, None])
        if i < n:
            yield "state", i, block, x, u
        else:
            yield "input", i - n, block, x, u


def _structural_report(sys: ControlSystem, box, tol: float) -> MonotonicityReport:
    A, B = sys.linear_part  # type: ignore[misc]
    witnesses = []
    offdiag = A - np.diag(np.diag(A))
    min_margin = min(float(offdiag.min(initial=0.0)), float(B.min()))
    ok_a, entry_a = is_metzler(A, tol)
    if not ok_a:
        i, j = entry_a
        witnesses.append(JacobianWitness("state", j, i, float(A[i, j])))
    ok_b, entry_b = is_nonneg(B, tol)
    if not ok_b:
        i, j = entry_b
        witnesses.append(JacobianWitness("input", j, i, float(B[i, j])))
    verdict = "monotone" if ok_a and ok_b else "non_monotone"
    return MonotonicityReport(verdict, tuple(witnesses), 0, tuple(map(tuple, box)),
                              min_margin, "structural")


def check_kamke_muller(sys: ControlSystem,
                       box: Sequence[tuple[float, float]],
                       n_samples: int = DEFAULT_N_SAMPLES,
                       fd_step: float = DEFAULT_FD_STEP,
                       tol: float = DEFAULT_TOL,
                       seed: int = 0,
                       method: str = "auto",
                       max_witnesses: int = 10) -> MonotonicityReport:
    """Certify the Kamke-Muller sign conditions on a box.

    ``box`` lists one (low, high) interval per state coordinate followed by
    one per input coordinate.  With ``method="auto"`` linear systems are
    checked structurally (exact); otherwise the partial derivatives are
    estimated by central differences at ``n_samples`` low-discrepancy points.
    A sampled violation smaller in magnitude than ``10 * tol`` is treated as
    finite-difference noise: the verdict is then "inconclusive" rather than
    "non_monotone", and no witness is recorded.
    """
    box = _validate_box(box, sys.n_states + sys.n_inputs)
    if method not in ("auto", "structural", "sampled"):
        raise ParameterError("method must be 'auto', 'structural' or 'sampled'")
    if method in ("auto", "structural") and sys.is_linear:
        return _structural_report(sys, box, tol)
    if method == "structural":
        raise ParameterError("structural check requires a linear_part")
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")

    pts = _sample_box(box, n_samples, seed)
    decisive = 10.0 * tol
    witnesses: list[JacobianWitness] = []
    min_margin = np.inf
    n = sys.n_states
    for wrt, i, block, x, u in _jacobian_estimates(sys, pts, fd_step):
        checked = block.copy()
        if wrt == "state":
            checked[:, i] = np.inf  # diagonal entries are unconstrained
        min_margin = min(min_margin, float(checked.min()))
        bad = np.argwhere(checked < -decisive)
        for k, j in bad[: max(0, max_witnesses - len(witnesses))]:
            witnesses.append(JacobianWitness(
                wrt, i, int(j), float(block[k, j]),
                tuple(np.round(x[k], 12)), tuple(np.round(u[k], 12))))

    if min_margin >= -tol:
        verdict = "monotone"
    elif witnesses:
        verdict = "non_monotone"
    else:
        verdict = "inconclusive"
    return MonotonicityReport(verdict, tuple(witnesses), n_samples,
                              tuple(map(tuple, box)), min_margin, "sampled")


# ---------------------------------------------------------------------------
# Excitability (influence-graph test)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcitabilityReport:
    excitable: bool
    unreachable: tuple[tuple[int, int], ...]  # (input index, state index) pairs
    method: str = "influence-graph"


def _influence_edges(sys: ControlSystem, box, n_samples, tol, seed):
    """Adjacency of the influence graph: state_adj[i][j] true when state i
    moves state j somewhere in the box, input_adj likewise for inputs."""
    n, m = sys.n_states, sys.n_inputs
    state_adj = np.zeros((n, n), dtype=bool)
    input_adj = np.zeros((m, n), dtype=bool)
    if sys.is_linear:
        A, B = sys.linear_part  # type: ignore[misc]
        state_adj = np.abs(A.T) > tol
        np.fill_diagonal(state_adj, False)
        input_adj = np.abs(B.T) > tol
        return state_adj, input_adj
    pts = _sample_box(box, n_samples, seed)
    for wrt, i, block, _, _ in _jacobian_estimates(sys, pts, DEFAULT_FD_STEP):
        hit = np.any(np.abs(block) > tol, axis=0)
        if wrt == "state":
            hit[i] = False
            state_adj[i] |= hit
        else:
            input_adj[i] |= hit
    return state_adj, input_adj


def check_excitability(sys: ControlSystem,
                       box: Sequence[tuple[float, float]],
                       n_samples: int = DEFAULT_N_SAMPLES,
                       tol: float = DEFAULT_TOL,
                       seed: int = 0) -> ExcitabilityReport:
    """Graph-based sufficient test for excitability.

    Builds the influence graph (edge i -> j when coordinate i demonstrably
    moves state j, from the linear structure or from sampled derivatives)
    and reports True iff every state is reachable from every input.
    """
    box = _validate_box(box, sys.n_states + sys.n_inputs)
    state_adj, input_adj = _influence_edges(sys, box, n_samples, tol, seed)
    n = sys.n_states

    # transitive closure of state reachability, including zero-length paths
    reach = state_adj | np.eye(n, dtype=bool)
    for _ in range(n):
        step = (reach.astype(np.uint8) @ reach.astype(np.uint8)) > 0
        new = reach | step
        if np.array_equal(new, reach):
            break
        reach = new

    unreachable = []
    for i in range(sys.n_inputs):
        reached = np.any(reach[input_adj[i], :], axis=0) if input_adj[i].any() \
            else np.zeros(n, dtype=bool)
        for j in np.flatnonzero(~reached):
            unreachable.append((i, int(j)))
    return ExcitabilityReport(not unreachable, tuple(unreachable))


# ---------------------------------------------------------------------------
# Executable order-preservation test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryOrderResult:
    ordered: bool
    first_violation_time: float | None
    min_margin: float  # most negative normalized componentwise gap seen


def trajectory_order_test(sys: ControlSystem,
                          x0_a: np.ndarray, x0_b: np.ndarray,
                          control_a: Callable[[float], np.ndarray],
                          control_b: Callable[[float], np.ndarray],
                          t_f: float, dt: float,
                          tol_order: float = 1e-8) -> TrajectoryOrderResult:
    """Simulate two ordered initial conditions / inputs and check that the
    state order is preserved on the whole grid.

    Preconditions ``x0_a <= x0_b`` and ``control_a(t) <= control_b(t)`` on
    the grid are verified first; failures there are caller errors, not
    monotonicity violations.  The componentwise gap ``x_b - x_a`` is
    normalized by ``max(1, |x|)`` per state so the tolerance is meaningful
    across states with different physical scales.
    """
    from .simulate import integrate  # local import to avoid a cycle

    x0_a = np.asarray(x0_a, dtype=float)
    x0_b = np.asarray(x0_b, dtype=float)
    if not vec_compare(x0_a, x0_b).leq:
        raise ParameterError("initial states are not ordered: x0_a <= x0_b required")

    traj_a = integrate(sys, x0_a, control_a, t_f, dt)
    traj_b = integrate(sys, x0_b, control_b, t_f, dt)
    if np.any(traj_a.inputs > traj_b.inputs + 1e-12):
        raise ParameterError("inputs are not ordered on the grid: u_a <= u_b required")

    scale = np.maximum(1.0, np.maximum(np.abs(traj_a.states), np.abs(traj_b.states)))
    gap = (traj_b.states - traj_a.states) / scale
    min_margin = float(gap.min())
    bad = np.any(gap < -tol_order, axis=1)
    if bad.any():
        t_bad = float(traj_a.times[int(np.argmax(bad))])
        return TrajectoryOrderResult(False, t_bad, min_margin)
    return TrajectoryOrderResult(True, None, min_margin)


def check_cost_monotone(cost_eval: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        box: Sequence[tuple[float, float]],
                        n_states: int,
                        n_samples: int = 256,
                        fd_step: float = DEFAULT_FD_STEP,
                        tol: float = DEFAULT_TOL,
                        seed: int = 0) -> MonotonicityReport:
    """Sampled check that a running cost is non-decreasing in every state
    and input coordinate over the box.

    Useful as a guard before trusting monotone-policy arguments: a cost that
    penalises a state (e.g. temperature) fails here and the resulting
    witnesses show which coordinate breaks the assumption.
    """
    box_arr = _validate_box(box, len(box))
    pts = _sample_box(box_arr, n_samples, seed)
    witnesses: list[JacobianWitness] = []
    min_margin = np.inf
    decisive = 10.0 * tol
    for i in range(box_arr.shape[0]):
        h = fd_step * np.maximum(1.0, np.abs(pts[:, i]))
        dz = np.zeros_like(pts)
        dz[:, i] = h
        hi = np.asarray(cost_eval((pts + dz)[:, :n_states], (pts + dz)[:, n_states:]))
        lo = np.asarray(cost_eval((pts - dz)[:, :n_states], (pts - dz)[:, n_states:]))
        est = (hi - lo) / (2.0 * h)
        min_margin = min(min_margin, float(est.min()))
        bad = np.flatnonzero(est < -decisive)
        for k in bad[: max(0, 10 - len(witnesses))]:
            wrt = "state" if i < n_states else "input"
            idx = i if i < n_states else i - n_states
            witnesses.append(JacobianWitness(
                wrt, idx, 0, float(est[k]),
                tuple(np.round(pts[k, :n_states], 12)),
                tuple(np.round(pts[k, n_states:], 12))))
    if min_margin >= -tol:
        verdict = "monotone"
    elif witnesses:
        verdict = "non_monotone"
    else:
        verdict = "inconclusive"
    return MonotonicityReport(verdict, tuple(witnesses), n_samples,
                              tuple(map(tuple, box_arr)), min_margin, "sampled")

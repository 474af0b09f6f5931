"""Mixed state/input constraints ``h_k(x, u) >= 0``.

Each constraint is a scalar residual that must stay nonnegative along an
admissible trajectory; a constraint is *engaged* where its residual is zero.
Every constructor here produces residuals that are non-increasing in the
input, which is what makes largest-feasible-input searches (bisection in
:mod:`monoride.bangride`) well posed.  Lower input bounds deliberately have
no constructor: a residual ``u - u_min`` increases with u, so the charging
floor lives on the policy's search interval instead of in the constraint set.

Residual callables follow the package broadcasting convention:
``residual(x, u)`` with ``x`` of shape ``(..., n)`` and ``u`` of shape
``(..., m)`` returns shape ``(...,)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .dynamics import EcmParams, _ecm_voltage_raw
from .errors import ParameterError
from .ordering import _sample_box, _validate_box

__all__ = [
    "Constraint",
    "ConstraintSet",
    "PlatingTable",
    "upper_bound_state",
    "upper_bound_input",
    "voltage_limit",
    "temperature_limit",
    "plating_constraint",
    "lower_bound_input",
    "InputDirectionReport",
    "verify_nonincreasing_in_u",
]

DEFAULT_TOL_ACTIVE = 1e-6


@dataclass(frozen=True)
class Constraint:
    """A named scalar residual with metadata used by the ride logic.

    ``depends_on_u`` controls whether the bang-and-ride search treats the
    constraint instantaneously (mixed constraint) or through a one-step
    state lookahead (pure state constraint).
    """

    name: str
    residual: Callable[[np.ndarray, np.ndarray], np.ndarray]
    depends_on_u: bool
    declared_nonincreasing_in_u: bool = True

    def __call__(self, x, u):
        return self.residual(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def _as_input(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    return u


@dataclass(frozen=True)
class ConstraintSet:
    """Ordered collection of constraints evaluated together.

    The ordering is stable: residual component k always belongs to the k-th
    constraint passed at construction.
    """

    constraints: tuple[Constraint, ...]
    tol_active: float = DEFAULT_TOL_ACTIVE

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.constraints) < 1:
            raise ParameterError("a constraint set needs at least one constraint")
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise ParameterError(f"constraint names must be unique, got {names}")
        if not self.tol_active > 0:
            raise ParameterError("tol_active must be > 0")

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def residuals(self, x, u) -> np.ndarray:
        """Stack of residuals, shape ``(..., len(self))``, in declared order."""
        x = np.asarray(x, dtype=float)
        u = _as_input(u)
        vals = [np.asarray(c.residual(x, u), dtype=float) for c in self.constraints]
        return np.stack(np.broadcast_arrays(*vals), axis=-1) if len(vals) > 1 \
            else vals[0][..., None]

    def is_admissible(self, x, u, tol: float | None = None) -> bool:
        tol = self.tol_active if tol is None else tol
        return bool(np.all(self.residuals(x, u) >= -tol))

    def active_set(self, x, u, tol: float | None = None) -> list[int]:
        """Indices of constraints whose residual is within ``tol`` of zero."""
        tol = self.tol_active if tol is None else tol
        r = self.residuals(x, u)
        if r.ndim != 1:
            raise ParameterError("active_set expects a single (x, u) point")
        return [int(k) for k in np.flatnonzero(np.abs(r) <= tol)]


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def upper_bound_state(index: int, bound: float, name: str | None = None) -> Constraint:
    """``x[index] <= bound`` as the residual ``bound - x[index]``.

    ``index`` is 0-based.
    """
    if index < 0:
        raise ParameterError("state index must be >= 0")

    def residual(x, u):
        return bound - np.asarray(x, dtype=float)[..., index]

    return Constraint(name or f"state_{index}_max", residual, depends_on_u=False)


def upper_bound_input(bound: float, name: str = "input_max") -> Constraint:
    """``u <= bound`` as the residual ``bound - u`` (single-input systems)."""

    def residual(x, u):
        return bound - _as_input(u)[..., 0]

    return Constraint(name, residual, depends_on_u=True)


def lower_bound_input(bound: float, name: str = "input_min") -> Constraint:
    """``u >= bound`` as the residual ``u - bound``.

    This residual *increases* with u, so it is flagged accordingly and will
    fail :func:`verify_nonincreasing_in_u`.  It exists as a negative fixture
    and for callers who knowingly want it; the shipped policies keep the
    charging floor on the search interval instead.
    """

    def residual(x, u):
        return _as_input(u)[..., 0] - bound

    return Constraint(name, residual, depends_on_u=True,
                      declared_nonincreasing_in_u=False)


def voltage_limit(params: EcmParams, bound: float, name: str = "voltage_max") -> Constraint:
    """``terminal voltage <= bound`` for an ECM-family model.

    The residual ``bound - (U(soc) + sum of RC voltages + R0 u)`` is
    non-increasing in u because the series resistance is nonnegative.  Extra
    trailing states (a thermal one, say) are ignored.
    """

    def residual(x, u):
        return bound - _ecm_voltage_raw(params, x, _as_input(u))

    return Constraint(name, residual, depends_on_u=True)


def temperature_limit(bound: float, temp_index: int, name: str = "temperature_max") -> Constraint:
    """``x[temp_index] <= bound`` for the thermal state (0-based index)."""
    return upper_bound_state(temp_index, bound, name=name)


# ---------------------------------------------------------------------------
# Plating boundary
# ---------------------------------------------------------------------------

@dataclass
class PlatingTable:
    """Maximum admissible current as a function of surface concentration.

    The boundary is stored as a piecewise-linear table: strictly increasing
    concentration breakpoints against a non-increasing current ceiling (the
    admissible region shrinks as the surface fills up).  Queries outside the
    table are clamped to the end values and counted in ``clamp_count``.
    """

    concentration: np.ndarray
    max_current: np.ndarray
    clamp_count: int = field(default=0, compare=False)

    def __post_init__(self):
        self.concentration = np.asarray(self.concentration, dtype=float)
        self.max_current = np.asarray(self.max_current, dtype=float)
        if self.concentration.ndim != 1 or self.concentration.shape != self.max_current.shape:
            raise ParameterError("plating table needs matching 1-D concentration/current arrays")
        if self.concentration.size < 2:
            raise ParameterError("plating table needs at least two breakpoints")
        if np.any(np.diff(self.concentration) <= 0):
            raise ParameterError("plating table concentration breakpoints must be strictly increasing")
        if np.any(np.diff(self.max_current) > 0):
            raise ParameterError("plating table max_current must be non-increasing")

    def boundary(self, conc) -> np.ndarray:
        conc = np.asarray(conc, dtype=float)
        out_of_range = (conc < self.concentration[0]) | (conc > self.concentration[-1])
        self.clamp_count += int(np.count_nonzero(out_of_range))
        return np.interp(conc, self.concentration, self.max_current)

    @classmethod
    def from_csv(cls, path) -> "PlatingTable":
        """Load a two-column CSV with the header ``concentration,max_current``."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParameterError(f"plating table CSV {path} is empty") from None
            if [h.strip() for h in header] != ["concentration", "max_current"]:
                raise ParameterError(
                    f"plating table CSV must start with header 'concentration,max_current', got {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        if not rows:
            raise ParameterError(f"plating table CSV {path} has no data rows")
        conc, cur = zip(*rows)
        return cls(np.array(conc), np.array(cur))


def plating_constraint(table: PlatingTable,
                       surface_concentration: Callable[[np.ndarray, np.ndarray], np.ndarray],
                       name: str = "plating") -> Constraint:
    """Keep the operating point below the plating boundary.

    Residual ``boundary(surface(x, u)) - u``: directly non-increasing in u
    through the trailing term, and also through the boundary when the
    surface concentration grows with u (the feedthrough of the discretised
    particle model), since the boundary itself is non-increasing.
    """

    def residual(x, u):
        u = _as_input(u)
        surf = np.asarray(surface_concentration(np.asarray(x, dtype=float), u), dtype=float)
        return table.boundary(surf) - u[..., 0]

    return Constraint(name, residual, depends_on_u=True)


# ---------------------------------------------------------------------------
# Input-direction verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InputDirectionReport:
    name: str
    nonincreasing: bool
    max_derivative: float
    witnesses: tuple[tuple[tuple[float, ...], tuple[float, ...], int, float], ...]
    samples_used: int


def verify_nonincreasing_in_u(cset: ConstraintSet,
                              box: Sequence[tuple[float, float]],
                              n_samples: int = 256,
                              fd_step: float = 1e-6,
                              tol: float = 1e-9,
                              seed: int = 0,
                              n_states: int | None = None) -> list[InputDirectionReport]:
    """Sampled check that every residual is non-increasing in every input.

    ``box`` covers states then inputs, as in the monotonicity checks.  A
    constraint fails when some sampled central-difference derivative of its
    residual with respect to an input exceeds ``tol``; witnesses record the
    sample point, the input index and the estimate.
    """
    box_arr = _validate_box(box, len(box))
    if n_states is None:
        n_states = box_arr.shape[0] - 1
    n_inputs = box_arr.shape[0] - n_states
    if n_inputs < 1:
        raise ParameterError("box must cover at least one input coordinate")
    pts = _sample_box(box_arr, n_samples, seed)
    x = pts[:, :n_states]
    reports = []
    for con in cset:
        worst = -np.inf
        witnesses = []
        for j in range(n_inputs):
            h = fd_step * np.maximum(1.0, np.abs(pts[:, n_states + j]))
            du = np.zeros((n_samples, n_inputs))
            du[:, j] = h
            hi = np.asarray(con.residual(x, pts[:, n_states:] + du), dtype=float)
            lo = np.asarray(con.residual(x, pts[:, n_states:] - du), dtype=float)
            est = (hi - lo) / (2.0 * h)
            worst = max(worst, float(est.max()))
            for k in np.flatnonzero(est > tol)[:5]:
                witnesses.append((tuple(np.round(x[k], 12)),
                                  tuple(np.round(pts[k, n_states:], 12)),
                                  j, float(est[k])))
        reports.append(InputDirectionReport(con.name, not witnesses, worst,
                                            tuple(witnesses), n_samples))
    return reports

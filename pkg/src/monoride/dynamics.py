"""Battery model family expressed as control systems ``dx/dt = f(x, u)``.

Four builders are provided:

* :func:`build_ecm` -- equivalent circuit model (SOC integrator + RC pairs),
* :func:`build_pade_spm` -- reduced-order single particle model obtained from
  a third-order Pade approximation of the particle diffusion dynamics,
* :func:`build_fd_spm` -- single particle model discretised by finite
  differences on the particle radius,
* :func:`build_thermal_coupled_ecm` -- ECM coupled to a lumped thermal state.

All vector fields follow one calling convention: ``field(x, u)`` accepts
``x`` of shape ``(..., n_states)`` and ``u`` of shape ``(..., n_inputs)``
and returns the state derivative with the same leading shape.  The leading
axes let simulators batch many trajectories through one call.

Sign convention used throughout the package: positive current charges the
cell.  The per-electrode flip for the discretised particle model is carried
by ``FdSpmParams.electrode_sign``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "ControlSystem",
    "EcmParams",
    "PadeSpmParams",
    "FdSpmParams",
    "ThermalParams",
    "affine_ocv",
    "tabulated_ocv",
    "DEFAULT_OCV",
    "build_ecm",
    "ecm_voltage",
    "build_pade_spm",
    "build_fd_spm",
    "build_thermal_coupled_ecm",
]


@dataclass(frozen=True)
class ControlSystem:
    """A controlled ODE ``dx/dt = field(x, u)``.

    ``linear_part`` is set when the dynamics are exactly ``A x + B u``;
    monotonicity checks then reduce to structural matrix tests.  Instances
    are immutable and safe to share across threads.
    """

    n_states: int
    n_inputs: int
    field: Callable[[np.ndarray, np.ndarray], np.ndarray]
    linear_part: tuple[np.ndarray, np.ndarray] | None = None
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n_states < 1:
            raise ParameterError("n_states must be a positive integer")
        if self.n_inputs < 1:
            raise ParameterError("n_inputs must be a positive integer")
        if self.labels and len(self.labels) != self.n_states:
            raise ParameterError("labels must have one entry per state")
        if self.linear_part is not None:
            A, B = self.linear_part
            if A.shape != (self.n_states, self.n_states):
                raise ParameterError("linear_part A must be n_states x n_states")
            if B.shape != (self.n_states, self.n_inputs):
                raise ParameterError("linear_part B must be n_states x n_inputs")

    @property
    def is_linear(self) -> bool:
        return self.linear_part is not None

    def __call__(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.field(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def _linear_system(A: np.ndarray, B: np.ndarray, labels: Sequence[str]) -> ControlSystem:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)

    def field(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return x @ A.T + u @ B.T

    return ControlSystem(
        n_states=A.shape[0],
        n_inputs=B.shape[1],
        field=field,
        linear_part=(A, B),
        labels=tuple(labels),
    )


# ---------------------------------------------------------------------------
# Open circuit voltage curves
# ---------------------------------------------------------------------------

def affine_ocv(offset: float, slope: float) -> Callable[[np.ndarray], np.ndarray]:
    """Affine open-circuit-voltage curve ``U(soc) = offset + slope * soc``.

    ``slope`` must be nonnegative so the curve is non-decreasing.
    """
    if slope < 0:
        raise ParameterError("ocv slope must be >= 0 (curve must be non-decreasing)")

    def ocv(soc):
        return offset + slope * np.asarray(soc, dtype=float)

    ocv.kind = "affine"  # type: ignore[attr-defined]
    ocv.offset = float(offset)  # type: ignore[attr-defined]
    ocv.slope = float(slope)  # type: ignore[attr-defined]
    return ocv


def tabulated_ocv(soc_points: Sequence[float],
                  voltage_points: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear OCV curve from (soc, voltage) breakpoints.

    Breakpoints must be strictly increasing in soc and non-decreasing in
    voltage; queries outside the table are clamped to the end values.
    """
    soc = np.asarray(soc_points, dtype=float)
    volts = np.asarray(voltage_points, dtype=float)
    if soc.ndim != 1 or soc.shape != volts.shape or soc.size < 2:
        raise ParameterError("ocv table needs matching 1-D soc/voltage arrays, length >= 2")
    if np.any(np.diff(soc) <= 0):
        raise ParameterError("ocv table soc breakpoints must be strictly increasing")
    if np.any(np.diff(volts) < 0):
        raise ParameterError("ocv table voltage must be non-decreasing")

    def ocv(s):
        return np.interp(np.asarray(s, dtype=float), soc, volts)

    ocv.kind = "table"  # type: ignore[attr-defined]
    ocv.soc_points = soc  # type: ignore[attr-defined]
    ocv.voltage_points = volts  # type: ignore[attr-defined]
    return ocv


#: Repo default curve; affine so hand-checked voltage arithmetic stays exact.
DEFAULT_OCV = affine_ocv(3.0, 1.2)


def _check_ocv_monotone(ocv: Callable) -> None:
    s = np.linspace(0.0, 1.0, 101)
    v = np.asarray(ocv(s), dtype=float)
    if v.shape != s.shape or not np.all(np.isfinite(v)):
        raise ParameterError("ocv must map soc arrays to finite voltage arrays")
    if np.any(np.diff(v) < -1e-12):
        raise ParameterError("ocv must be non-decreasing on [0, 1]")


# ---------------------------------------------------------------------------
# Parameter blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EcmParams:
    """Equivalent circuit model parameters.

    capacity is in ampere-seconds; rc_pairs holds (resistance_ohm, capacitance_farad)
    tuples, one per RC relaxation branch.
    """

    capacity: float
    series_resistance: float = 0.0
    rc_pairs: tuple[tuple[float, float], ...] = ()
    ocv: Callable[[np.ndarray], np.ndarray] = DEFAULT_OCV

    def __post_init__(self):
        if not self.capacity > 0:
            raise ParameterError("capacity must be > 0")
        if self.series_resistance < 0:
            raise ParameterError("series_resistance must be >= 0")
        object.__setattr__(self, "rc_pairs", tuple(tuple(p) for p in self.rc_pairs))
        for k, (r, c) in enumerate(self.rc_pairs):
            if not r > 0:
                raise ParameterError(f"rc_pairs[{k}] resistance must be > 0")
            if not c > 0:
                raise ParameterError(f"rc_pairs[{k}] capacitance must be > 0")
        _check_ocv_monotone(self.ocv)

    @property
    def n_states(self) -> int:
        return 1 + len(self.rc_pairs)


@dataclass(frozen=True)
class PadeSpmParams:
    """Reduced-order particle model coefficients.

    Two diffusion rates a1, a2 <= 0, input gains b1..b3 >= 0 and surface
    output gains c1..c3 >= 0.  Values depend on cell chemistry and are always
    supplied by the caller; nothing is hard-coded here.
    """

    a1: float
    a2: float
    b1: float
    b2: float
    b3: float
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        for name in ("a1", "a2"):
            if getattr(self, name) > 0:
                raise ParameterError(f"{name} must be <= 0")
        for name in ("b1", "b2", "b3", "c1", "c2", "c3"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")


@dataclass(frozen=True)
class FdSpmParams:
    """Finite-difference particle model parameters.

    The particle radius is split into ``n_interior + 2`` equally spaced grid
    points; the interior concentrations are the states.  ``electrode_sign``
    is +1 for the electrode gaining lithium under positive current and -1
    for the electrode losing it.
    """

    diffusivity: float
    particle_radius: float
    n_interior: int
    surface_area: float
    collector_area: float
    thickness: float
    faraday: float = 96485.33212
    electrode_sign: int = 1

    def __post_init__(self):
        for name in ("diffusivity", "particle_radius", "surface_area",
                     "collector_area", "thickness", "faraday"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if int(self.n_interior) != self.n_interior or self.n_interior < 2:
            raise ParameterError("n_interior must be an integer >= 2")
        if self.electrode_sign not in (+1, -1):
            raise ParameterError("electrode_sign must be +1 or -1")

    @property
    def grid_spacing(self) -> float:
        return self.particle_radius / (self.n_interior + 1)


@dataclass(frozen=True)
class ThermalParams:
    """Lumped thermal parameters: cell mass [kg], specific heat [J/(kg K)]
    and thermal resistance to ambient [K/W]."""

    mass: float
    heat_capacity: float
    thermal_resistance: float

    def __post_init__(self):
        for name in ("mass", "heat_capacity", "thermal_resistance"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_ecm(params: EcmParams) -> ControlSystem:
    """Equivalent circuit model as a positive linear system.

    State 1 is the state of charge (integral of current over capacity);
    states 2.. are the RC branch voltages.  A is diagonal with entries
    ``(0, -1/(R1 C1), ...)`` and B is the column ``(1/Q, 1/C1, ...)``,
    so the system is monotone for any valid parameters.
    """
    n = params.n_states
    A = np.zeros((n, n))
    B = np.zeros((n, 1))
    B[0, 0] = 1.0 / params.capacity
    for k, (r, c) in enumerate(params.rc_pairs, start=1):
        A[k, k] = -1.0 / (r * c)
        B[k, 0] = 1.0 / c
    labels = ["state_of_charge [-]"]
    labels += [f"rc_voltage_{k} [V]" for k in range(1, n)]
    return _linear_system(A, B, labels)


def _ecm_voltage_raw(params: EcmParams, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Terminal voltage from the leading ECM states; extra trailing states
    (e.g. a thermal one) are ignored."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = params.n_states
    rc_sum = x[..., 1:n].sum(axis=-1)
    return params.ocv(x[..., 0]) + rc_sum + params.series_resistance * u[..., 0]


def ecm_voltage(params: EcmParams, x: np.ndarray, u: float | np.ndarray) -> float | np.ndarray:
    """Cell terminal voltage ``U(soc) + sum of RC voltages + R0 * u``.

    ``x`` must have exactly ``1 + len(rc_pairs)`` trailing state entries;
    ``u`` is the scalar current, or an array matching the leading shape of
    ``x`` (optionally with a trailing singleton input axis).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n_states:
        raise ParameterError(
            f"state vector has {x.shape[-1]} entries, expected {params.n_states}")
    u = np.asarray(u, dtype=float)
    if u.ndim == x.ndim and u.ndim > 0 and u.shape[-1] == 1:
        u = u[..., 0]
    v = params.ocv(x[..., 0]) + x[..., 1:].sum(axis=-1) + params.series_resistance * u
    return float(v) if np.ndim(v) == 0 else v


def build_pade_spm(params: PadeSpmParams):
    """Reduced-order particle model, stored in monotone coordinates.

    The raw realisation has ``B = (-b1, b2, b3)`` and surface output row
    ``(-c1, c2, c3)``, which is not order-preserving.  Flipping the sign of
    the first state gives an equivalent system with ``A = diag(a1, a2, 0)``
    (unchanged), ``B = (b1, b2, b3) >= 0`` and output row ``(c1, c2, c3) >= 0``,
    and that transformed system is what is returned.

    Returns the system together with ``surface_output(x, u)``, the lithium
    concentration at the particle surface (no direct feedthrough from u).
    """
    A = np.diag([params.a1, params.a2, 0.0])
    B = np.array([[params.b1], [params.b2], [params.b3]])
    c_row = np.array([params.c1, params.c2, params.c3])
    labels = ("diffusion_state_1 [mol/m^3]", "diffusion_state_2 [mol/m^3]",
              "stored_charge_state [mol/m^3]")
    sys = _linear_system(A, B, labels)

    def surface_output(x, u):
        x = np.asarray(x, dtype=float)
        return x @ c_row

    return sys, surface_output


def build_fd_spm(params: FdSpmParams):
    """Finite-difference particle diffusion model.

    Radial diffusion ``dc/dt = D d2c/dr2`` (spatially transformed) on
    ``n + 2`` grid points, with a zero boundary value at the centre and a
    current-driven flux condition at the surface.  Eliminating the surface
    ghost node via the flux condition yields a tridiagonal A whose last
    diagonal entry is ``(D/h^2)(-2 + (n+1)/n)`` and a B vector whose only
    nonzero entry drives the outermost interior node.

    Returns the system and ``surface_output(x, u)``, the concentration at
    the particle surface, which has a direct current feedthrough.
    """
    n = int(params.n_interior)
    h = params.grid_spacing
    scale = params.diffusivity / h**2
    A = np.zeros((n, n))
    for k in range(n):
        A[k, k] = -2.0
        if k > 0:
            A[k, k - 1] = 1.0
        if k + 1 < n:
            A[k, k + 1] = 1.0
    A[n - 1, n - 1] = -2.0 + (n + 1) / n
    A *= scale

    denom = n * params.faraday * params.surface_area * params.collector_area * params.thickness
    B = np.zeros((n, 1))
    B[n - 1, 0] = params.electrode_sign * (n + 1) ** 2 / denom

    labels = tuple(f"concentration_node_{k} [mol/m^3]" for k in range(1, n + 1))
    sys = _linear_system(A, B, labels)

    feed = params.electrode_sign * params.particle_radius**2 / (params.diffusivity * denom)
    edge = (n + 1) / n

    def surface_output(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return edge * x[..., n - 1] + feed * u[..., 0]

    return sys, surface_output


def build_thermal_coupled_ecm(ecm: EcmParams, thermal: ThermalParams) -> ControlSystem:
    """ECM with an appended lumped temperature state.

    The last state is the cell-to-ambient temperature difference T, driven by
    ohmic heating ``u * (sum of RC voltages + R0 u)`` and relaxed through the
    thermal resistance.  The product term makes the model nonlinear, and
    monotone only on the charging half-space ``u >= 0``.
    """
    base = build_ecm(ecm)
    A, B = base.linear_part  # type: ignore[misc]
    ne = ecm.n_states
    r0 = ecm.series_resistance
    m_cp = thermal.mass * thermal.heat_capacity
    r_th = thermal.thermal_resistance

    def field(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        elec = x[..., :ne] @ A.T + u @ B.T
        i = u[..., 0]
        heat = i * (x[..., 1:ne].sum(axis=-1) + r0 * i)
        d_temp = (-x[..., ne] / r_th + heat) / m_cp
        return np.concatenate([elec, d_temp[..., None]], axis=-1)

    labels = base.labels + ("temperature_rise [K]",)
    return ControlSystem(n_states=ne + 1, n_inputs=1, field=field,
                         linear_part=None, labels=labels)

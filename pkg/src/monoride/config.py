"""Experiment configuration: JSON schema, validation and problem assembly.

A configuration file fully describes one charging experiment: the model and
its parameters, the constraint list, the running cost, the horizon, the
policy knobs and an optional oracle block.  ``load_config`` validates and
fills every default, so the object it returns (and what ``save_config``
writes back) always shows the effective values.  Cross-references between
sections -- a voltage limit needs an equivalent-circuit model, a temperature
limit needs the thermal state, a plating limit needs a particle model -- are
checked here, not at run time.

The schema is documented in ``docs/config.md``; ``schema_version`` is
required and currently must be 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constraints as con
from . import dynamics as dyn
from . import simulate as sim
from .bangride import BangRidePolicy
from .errors import ConfigError, ParameterError

__all__ = [
    "SCHEMA_VERSION",
    "OcvSpec",
    "ModelSpec",
    "ConstraintSpec",
    "CostSpec",
    "HorizonSpec",
    "PolicySpec",
    "OracleSpec",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "Problem",
    "build_problem",
]

SCHEMA_VERSION = 1

MODEL_KINDS = ("ecm", "pade_spm", "fd_spm", "thermal_ecm")
ECM_FAMILY = ("ecm", "thermal_ecm")
SPM_FAMILY = ("pade_spm", "fd_spm")
CONSTRAINT_KINDS = ("state_upper", "input_upper", "voltage_upper",
                    "temperature_upper", "plating")
COST_KINDS = ("soc_rate", "soc_integral", "state_component")


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return d[key]


def _no_extras(d: dict, allowed: set[str], where: str):
    extras = set(d) - allowed
    if extras:
        raise ConfigError(f"{where}: unknown field(s) {sorted(extras)}")


@dataclass(frozen=True)
class OcvSpec:
    kind: str = "affine"
    offset: float = 3.0
    slope: float = 1.2
    soc: tuple[float, ...] = ()
    voltage: tuple[float, ...] = ()

    @classmethod
    def from_dict(cls, d: dict | None) -> "OcvSpec":
        if d is None:
            return cls()
        kind = _require(d, "kind", "model.ecm.ocv")
        if kind == "affine":
            _no_extras(d, {"kind", "offset", "slope"}, "model.ecm.ocv")
            return cls("affine", float(d.get("offset", 3.0)), float(d.get("slope", 1.2)))
        if kind == "table":
            _no_extras(d, {"kind", "soc", "voltage"}, "model.ecm.ocv")
            return cls("table", 0.0, 0.0,
                       tuple(float(v) for v in _require(d, "soc", "model.ecm.ocv")),
                       tuple(float(v) for v in _require(d, "voltage", "model.ecm.ocv")))
        raise ConfigError(f"model.ecm.ocv: unknown kind '{kind}'")

    def build(self):
        if self.kind == "affine":
            return dyn.affine_ocv(self.offset, self.slope)
        return dyn.tabulated_ocv(self.soc, self.voltage)

    def to_dict(self) -> dict:
        if self.kind == "affine":
            return {"kind": "affine", "offset": self.offset, "slope": self.slope}
        return {"kind": "table", "soc": list(self.soc), "voltage": list(self.voltage)}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    ecm: dict = field(default_factory=dict)
    thermal: dict = field(default_factory=dict)
    pade: dict = field(default_factory=dict)
    fd: dict = field(default_factory=dict)
    ocv: OcvSpec = OcvSpec()

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        kind = _require(d, "kind", "model")
        if kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got '{kind}'")
        _no_extras(d, {"kind", "ecm", "thermal", "pade_spm", "fd_spm"}, "model")
        ecm = dict(d.get("ecm", {}))
        ocv = OcvSpec.from_dict(ecm.pop("ocv", None))
        spec = cls(kind=kind, ecm=ecm, thermal=dict(d.get("thermal", {})),
                   pade=dict(d.get("pade_spm", {})), fd=dict(d.get("fd_spm", {})),
                   ocv=ocv)
        spec._validate()
        return spec

    def _validate(self):
        # defaults are written into the blocks so a saved config echoes them
        if self.kind in ECM_FAMILY:
            if "capacity" not in self.ecm:
                raise ConfigError("model.ecm: missing required field 'capacity'")
            _no_extras(self.ecm, {"capacity", "series_resistance", "rc_pairs"}, "model.ecm")
            self.ecm.setdefault("series_resistance", 0.0)
            self.ecm.setdefault("rc_pairs", [])
        if self.kind == "thermal_ecm":
            for key in ("mass", "heat_capacity", "thermal_resistance"):
                _require(self.thermal, key, "model.thermal")
            _no_extras(self.thermal, {"mass", "heat_capacity", "thermal_resistance"},
                       "model.thermal")
        if self.kind == "pade_spm":
            for key in ("a", "b", "c"):
                _require(self.pade, key, "model.pade_spm")
            _no_extras(self.pade, {"a", "b", "c"}, "model.pade_spm")
        if self.kind == "fd_spm":
            for key in ("diffusivity", "particle_radius", "n_interior",
                        "surface_area", "collector_area", "thickness"):
                _require(self.fd, key, "model.fd_spm")
            _no_extras(self.fd, {"diffusivity", "particle_radius", "n_interior",
                                 "surface_area", "collector_area", "thickness",
                                 "faraday", "electrode_sign"}, "model.fd_spm")
            self.fd.setdefault("faraday", 96485.33212)
            self.fd.setdefault("electrode_sign", 1)

    def ecm_params(self) -> dyn.EcmParams:
        return dyn.EcmParams(
            capacity=float(self.ecm["capacity"]),
            series_resistance=float(self.ecm.get("series_resistance", 0.0)),
            rc_pairs=tuple((float(r), float(c)) for r, c in self.ecm.get("rc_pairs", [])),
            ocv=self.ocv.build())

    def build(self):
        """Returns (system, ecm_params or None, surface_output or None)."""
        if self.kind == "ecm":
            p = self.ecm_params()
            return dyn.build_ecm(p), p, None
        if self.kind == "thermal_ecm":
            p = self.ecm_params()
            th = dyn.ThermalParams(mass=float(self.thermal["mass"]),
                                   heat_capacity=float(self.thermal["heat_capacity"]),
                                   thermal_resistance=float(self.thermal["thermal_resistance"]))
            return dyn.build_thermal_coupled_ecm(p, th), p, None
        if self.kind == "pade_spm":
            a = [float(v) for v in self.pade["a"]]
            b = [float(v) for v in self.pade["b"]]
            c = [float(v) for v in self.pade["c"]]
            if len(a) != 2 or len(b) != 3 or len(c) != 3:
                raise ConfigError("model.pade_spm: 'a' needs 2 entries, 'b' and 'c' need 3")
            p = dyn.PadeSpmParams(a[0], a[1], b[0], b[1], b[2], c[0], c[1], c[2])
            sys_, surf = dyn.build_pade_spm(p)
            return sys_, None, surf
        p = dyn.FdSpmParams(
            diffusivity=float(self.fd["diffusivity"]),
            particle_radius=float(self.fd["particle_radius"]),
            n_interior=int(self.fd["n_interior"]),
            surface_area=float(self.fd["surface_area"]),
            collector_area=float(self.fd["collector_area"]),
            thickness=float(self.fd["thickness"]),
            faraday=float(self.fd.get("faraday", 96485.33212)),
            electrode_sign=int(self.fd.get("electrode_sign", 1)))
        sys_, surf = dyn.build_fd_spm(p)
        return sys_, None, surf

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ECM_FAMILY:
            out["ecm"] = {**self.ecm, "ocv": self.ocv.to_dict()}
        if self.kind == "thermal_ecm":
            out["thermal"] = dict(self.thermal)
        if self.kind == "pade_spm":
            out["pade_spm"] = dict(self.pade)
        if self.kind == "fd_spm":
            out["fd_spm"] = dict(self.fd)
        return out


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    name: str
    state: int | None = None      # 1-based, matching CSV column x<i>
    bound: float | None = None
    c_rate: float | None = None
    amps: float | None = None
    table: str | None = None

    @classmethod
    def from_dict(cls, d: dict, idx: int) -> "ConstraintSpec":
        where = f"constraints[{idx}]"
        kind = _require(d, "kind", where)
        if kind not in CONSTRAINT_KINDS:
            raise ConfigError(f"{where}: unknown kind '{kind}' (expected one of {CONSTRAINT_KINDS})")
        allowed = {"kind", "name"}
        if kind == "state_upper":
            allowed |= {"state", "bound"}
        elif kind == "input_upper":
            allowed |= {"c_rate", "amps"}
        elif kind in ("voltage_upper", "temperature_upper"):
            allowed |= {"bound"}
        else:
            allowed |= {"table"}
        _no_extras(d, allowed, where)

        default_names = {"state_upper": f"state_{d.get('state', '?')}_max",
                         "input_upper": "current_max",
                         "voltage_upper": "voltage_max",
                         "temperature_upper": "temperature_max",
                         "plating": "plating"}
        spec = cls(kind=kind,
                   name=str(d.get("name", default_names[kind])),
                   state=int(d["state"]) if "state" in d else None,
                   bound=float(d["bound"]) if "bound" in d else None,
                   c_rate=float(d["c_rate"]) if "c_rate" in d else None,
                   amps=float(d["amps"]) if "amps" in d else None,
                   table=str(d["table"]) if "table" in d else None)
        if kind == "state_upper" and (spec.state is None or spec.bound is None):
            raise ConfigError(f"{where}: state_upper needs 'state' (1-based) and 'bound'")
        if kind == "input_upper" and (spec.c_rate is None) == (spec.amps is None):
            raise ConfigError(f"{where}: input_upper needs exactly one of 'c_rate' or 'amps'")
        if kind in ("voltage_upper", "temperature_upper") and spec.bound is None:
            raise ConfigError(f"{where}: {kind} needs 'bound'")
        if kind == "plating" and spec.table is None:
            raise ConfigError(f"{where}: plating needs 'table' (CSV path)")
        return spec

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "name": self.name}
        for key in ("state", "bound", "c_rate", "amps", "table"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        return out


@dataclass(frozen=True)
class CostSpec:
    kind: str
    state: int | None = None  # 1-based, for state_component

    @classmethod
    def from_dict(cls, d: dict) -> "CostSpec":
        kind = _require(d, "kind", "cost")
        if kind not in COST_KINDS:
            raise ConfigError(f"cost.kind must be one of {COST_KINDS}, got '{kind}'")
        _no_extras(d, {"kind", "state"}, "cost")
        state = int(d["state"]) if "state" in d else None
        if kind == "state_component" and state is None:
            raise ConfigError("cost: state_component needs 'state' (1-based)")
        return cls(kind, state)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.state is not None:
            out["state"] = self.state
        return out


@dataclass(frozen=True)
class HorizonSpec:
    t_f: float
    dt: float

    @classmethod
    def from_dict(cls, d: dict) -> "HorizonSpec":
        t_f = float(_require(d, "t_f", "horizon"))
        _no_extras(d, {"t_f", "dt"}, "horizon")
        if not t_f > 0:
            raise ConfigError("horizon.t_f must be > 0")
        dt = float(d.get("dt", t_f / 2000.0))
        if not dt > 0:
            raise ConfigError("horizon.dt must be > 0")
        return cls(t_f, dt)

    def to_dict(self) -> dict:
        return {"t_f": self.t_f, "dt": self.dt}


@dataclass(frozen=True)
class PolicySpec:
    u_min: float = 0.0
    u_max: float | None = None  # None: taken from the input_upper constraint
    bisection_tol: float | None = None
    max_iter: int = 60
    lookahead_dt: float | None = None

    @classmethod
    def from_dict(cls, d: dict | None) -> "PolicySpec":
        if d is None:
            return cls()
        _no_extras(d, {"u_min", "u_max", "bisection_tol", "max_iter", "lookahead_dt"},
                   "policy")
        return cls(u_min=float(d.get("u_min", 0.0)),
                   u_max=float(d["u_max"]) if d.get("u_max") is not None else None,
                   bisection_tol=float(d["bisection_tol"]) if d.get("bisection_tol") is not None else None,
                   max_iter=int(d.get("max_iter", 60)),
                   lookahead_dt=float(d["lookahead_dt"]) if d.get("lookahead_dt") is not None else None)

    def to_dict(self) -> dict:
        return {"u_min": self.u_min, "u_max": self.u_max,
                "bisection_tol": self.bisection_tol, "max_iter": self.max_iter,
                "lookahead_dt": self.lookahead_dt}


@dataclass(frozen=True)
class OracleSpec:
    n_steps: int
    levels: tuple[float, ...]

    @classmethod
    def from_dict(cls, d: dict | None) -> "OracleSpec | None":
        if d is None:
            return None
        _no_extras(d, {"n_steps", "levels"}, "oracle")
        n_steps = int(_require(d, "n_steps", "oracle"))
        levels = tuple(float(v) for v in _require(d, "levels", "oracle"))
        if n_steps < 1 or not levels:
            raise ConfigError("oracle: n_steps must be >= 1 and levels non-empty")
        return cls(n_steps, levels)

    def to_dict(self) -> dict:
        return {"n_steps": self.n_steps, "levels": list(self.levels)}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    constraints: tuple[ConstraintSpec, ...]
    cost: CostSpec
    horizon: HorizonSpec
    policy: PolicySpec = PolicySpec()
    oracle: OracleSpec | None = None
    initial_state: tuple[float, ...] | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "model": self.model.to_dict(),
            "initial_state": None if self.initial_state is None else list(self.initial_state),
            "constraints": [c.to_dict() for c in self.constraints],
            "cost": self.cost.to_dict(),
            "horizon": self.horizon.to_dict(),
            "policy": self.policy.to_dict(),
            "oracle": None if self.oracle is None else self.oracle.to_dict(),
        }


def _cross_validate(cfg: ExperimentConfig, n_states: int) -> None:
    kind = cfg.model.kind
    for i, c in enumerate(cfg.constraints):
        where = f"constraints[{i}] ('{c.name}')"
        if c.kind == "voltage_upper" and kind not in ECM_FAMILY:
            raise ConfigError(f"{where}: a voltage limit needs an ECM-family model, not '{kind}'")
        if c.kind == "temperature_upper" and kind != "thermal_ecm":
            raise ConfigError(f"{where}: a temperature limit needs model kind 'thermal_ecm', not '{kind}'")
        if c.kind == "plating" and kind not in SPM_FAMILY:
            raise ConfigError(f"{where}: a plating limit needs a particle model, not '{kind}'")
        if c.kind == "input_upper" and c.c_rate is not None and kind not in ECM_FAMILY:
            raise ConfigError(f"{where}: 'c_rate' needs an ECM-family model (for the capacity); use 'amps'")
        if c.kind == "state_upper" and not 1 <= c.state <= n_states:
            raise ConfigError(f"{where}: state index {c.state} out of range 1..{n_states}")
    if cfg.cost.kind in ("soc_rate", "soc_integral") and kind not in ECM_FAMILY:
        raise ConfigError(f"cost: '{cfg.cost.kind}' needs an ECM-family model, not '{kind}'")
    if cfg.cost.kind == "state_component" and not 1 <= cfg.cost.state <= n_states:
        raise ConfigError(f"cost: state index {cfg.cost.state} out of range 1..{n_states}")
    if cfg.initial_state is not None and len(cfg.initial_state) != n_states:
        raise ConfigError(f"initial_state has {len(cfg.initial_state)} entries, model has {n_states} states")
    if not any(c.kind == "input_upper" for c in cfg.constraints) and cfg.policy.u_max is None:
        raise ConfigError("policy.u_max is required when no input_upper constraint is present")


def load_config(path) -> ExperimentConfig:
    """Parse, validate and default-fill an experiment configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must contain a JSON object")

    version = _require(raw, "schema_version", "config")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config: unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    _no_extras(raw, {"schema_version", "seed", "model", "initial_state",
                     "constraints", "cost", "horizon", "policy", "oracle"}, "config")

    model = ModelSpec.from_dict(_require(raw, "model", "config"))
    con_specs = tuple(ConstraintSpec.from_dict(d, i)
                      for i, d in enumerate(_require(raw, "constraints", "config")))
    if not con_specs:
        raise ConfigError("config: at least one constraint is required")
    cfg = ExperimentConfig(
        model=model,
        constraints=con_specs,
        cost=CostSpec.from_dict(_require(raw, "cost", "config")),
        horizon=HorizonSpec.from_dict(_require(raw, "horizon", "config")),
        policy=PolicySpec.from_dict(raw.get("policy")),
        oracle=OracleSpec.from_dict(raw.get("oracle")),
        initial_state=None if raw.get("initial_state") is None
        else tuple(float(v) for v in raw["initial_state"]),
        seed=int(raw.get("seed", 0)),
    )
    try:
        system, _, _ = model.build()  # also validates model parameters
    except ParameterError as exc:
        raise ConfigError(f"config model: {exc}") from exc
    _cross_validate(cfg, system.n_states)
    return cfg


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """Everything an experiment runner needs, built from a validated config."""

    system: dyn.ControlSystem
    x0: np.ndarray
    constraint_set: con.ConstraintSet
    running_cost: sim.RunningCost
    policy: BangRidePolicy
    t_f: float
    dt: float
    seed: int
    oracle: OracleSpec | None
    ecm_params: dyn.EcmParams | None
    surface_output: object | None
    input_bound: float


def _resolve_input_bound(spec: ConstraintSpec, ecm: dyn.EcmParams | None) -> float:
    if spec.amps is not None:
        return spec.amps
    assert ecm is not None  # guaranteed by _cross_validate
    return spec.c_rate * ecm.capacity / 3600.0


def build_problem(cfg: ExperimentConfig, base_dir=None) -> Problem:
    """Instantiate the model, constraints, cost and policy of a config.

    ``base_dir`` resolves relative table paths; it defaults to the current
    directory and is normally the config file's parent.
    """
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    system, ecm, surface = cfg.model.build()

    built: list[con.Constraint] = []
    input_bound: float | None = None
    for spec in cfg.constraints:
        if spec.kind == "state_upper":
            built.append(con.upper_bound_state(spec.state - 1, spec.bound, name=spec.name))
        elif spec.kind == "input_upper":
            input_bound = _resolve_input_bound(spec, ecm)
            built.append(con.upper_bound_input(input_bound, name=spec.name))
        elif spec.kind == "voltage_upper":
            built.append(con.voltage_limit(ecm, spec.bound, name=spec.name))
        elif spec.kind == "temperature_upper":
            built.append(con.temperature_limit(spec.bound, system.n_states - 1, name=spec.name))
        else:
            table = con.PlatingTable.from_csv(base_dir / spec.table)
            built.append(con.plating_constraint(table, surface, name=spec.name))
    cset = con.ConstraintSet(tuple(built))

    if cfg.cost.kind == "soc_rate":
        running = sim.soc_rate_cost(ecm.capacity)
    elif cfg.cost.kind == "soc_integral":
        running = sim.state_component_cost(0, description="soc_integral")
    else:
        running = sim.state_component_cost(cfg.cost.state - 1)

    u_max = cfg.policy.u_max if cfg.policy.u_max is not None else input_bound
    if u_max is None:
        raise ConfigError("policy.u_max could not be resolved")
    policy = BangRidePolicy(constraints=cset, u_max=u_max, u_min=cfg.policy.u_min,
                            bisection_tol=cfg.policy.bisection_tol,
                            max_iter=cfg.policy.max_iter,
                            lookahead_dt=cfg.policy.lookahead_dt)

    x0 = np.zeros(system.n_states) if cfg.initial_state is None \
        else np.asarray(cfg.initial_state, dtype=float)

    return Problem(system=system, x0=x0, constraint_set=cset, running_cost=running,
                   policy=policy, t_f=cfg.horizon.t_f, dt=cfg.horizon.dt,
                   seed=cfg.seed, oracle=cfg.oracle, ecm_params=ecm,
                   surface_output=surface, input_bound=u_max)

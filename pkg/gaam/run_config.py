"""

Run Configuration for GAAM

A run configuration bundles the model parameters, the time-stepping settings,
the forcing and initial-data recipes, tolerance overrides and the output
directory. On disk it is a flat YAML mapping with section-prefixed keys:

    model.alpha: 2.0
    sim.dt: 0.01
    force.kind: random
    init.seed: 3
    tol.stationary: 1.0e-10
    out.dir: runs/example

Loading then dumping a configuration gives back the same mapping.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import itertools
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, get_args, get_origin

import numpy as np
import yaml

from gaam.config_discovery import find_config_path
from gaam.constants import (
    CHECK_REL_TOL,
    COLLAPSE_STARTS,
    COLLAPSE_TIME_SCALE,
    COLLAPSE_TOL,
    DEFAULT_EPS_SCHEDULE,
    DEFAULT_OUTPUT_ROOT,
    DEFAULT_SMALLNESS_C,
    ENERGY_TOL,
    OUTPUT_ROOT_ENVVAR,
    RANDOM_SPECTRUM_EXPONENT,
    STATIONARY_MAX_ITER,
    STATIONARY_TOL
)
from gaam.dynamics import SimulationConfig
from gaam.fields_metrics import ForcingField, random_divfree_field, sobolev_norm
from gaam.spectral_core import ModelParams, SpectralGrid, VectorField, leray_project


#
# CONSTANTS
#
logger = logging.getLogger(__name__)

FIELD_KINDS: Tuple[str, ...] = ("zero", "random", "mode", "checkpoint")


#
# ERRORS
#
class ConfigError(ValueError):
    """Invalid, incomplete or unknown configuration entries."""


#
# TYPES
#
@dataclass(frozen=True)
class FieldSpec:
    """Recipe for a forcing or initial field.

    kind: 'zero', 'random' (seeded, spectrum (1 + |k|^2)^spectrum_exponent),
    'mode' (single Fourier mode with vector `vector`, Leray-projected) or
    'checkpoint' (read from `path`). For 'random' and 'mode' the field is
    scaled to ||.||_{H^{beta/2}} = amplitude.
    """
    kind: str = "zero"
    amplitude: float = 0.0
    seed: int = 0
    spectrum_exponent: float = RANDOM_SPECTRUM_EXPONENT
    mode: Tuple[int, ...] = (1, 0, 0)
    vector: Tuple[float, ...] = (0.0, 1.0, 0.0)
    path: str = ""

    def __post_init__(self) -> None:
        if self.kind not in FIELD_KINDS:
            raise ConfigError(f"field kind must be one of {FIELD_KINDS} (got '{self.kind}')")
        if self.amplitude < 0:
            raise ConfigError(f"amplitude must be >= 0 (got {self.amplitude})")
        if self.kind == "checkpoint" and not self.path:
            raise ConfigError("checkpoint fields need a path")


@dataclass(frozen=True)
class Tolerances:
    stationary: float = STATIONARY_TOL
    max_iter: int = STATIONARY_MAX_ITER
    relaxation: float = 1.0
    check: float = CHECK_REL_TOL
    energy: float = ENERGY_TOL
    collapse: float = COLLAPSE_TOL
    smallness_C: float = DEFAULT_SMALLNESS_C
    eps_schedule: Tuple[float, ...] = tuple(DEFAULT_EPS_SCHEDULE)


@dataclass(frozen=True)
class VerifySettings:
    """Knobs of the verification suites.

    collapse_t_end: horizon of the singleton-collapse runs; 0 means 10 / gamma.
    """
    window_T: float = 1.0
    starts: int = COLLAPSE_STARTS
    collapse_t_end: float = 0.0
    family_size: int = 4
    perturbation: float = 1e-3
    snapshots: int = 3

    def __post_init__(self) -> None:
        if self.collapse_t_end < 0:
            raise ValueError(f"collapse_t_end must be >= 0 (got {self.collapse_t_end})")


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    sim: SimulationConfig
    force: FieldSpec = field(default_factory=FieldSpec)
    init: FieldSpec = field(default_factory=FieldSpec)
    tol: Tolerances = field(default_factory=Tolerances)
    verify: VerifySettings = field(default_factory=VerifySettings)
    reference: str = "none"
    out_dir: str = ""

    @property
    def grid(self) -> SpectralGrid:
        return self.model.grid

    @property
    def collapse_time(self) -> float:
        return self.verify.collapse_t_end or COLLAPSE_TIME_SCALE / self.model.gamma

    def output_dir(self, run_name: str = "run") -> Path:
        """out.dir, or <output root>/<run_name> where the root honours GAAM_OUTPUT_ROOT."""
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get(OUTPUT_ROOT_ENVVAR, DEFAULT_OUTPUT_ROOT)) / run_name

    def with_updates(self, **sections) -> "RunConfig":
        """Replace entries by flat dotted key, e.g. with_updates(**{'model.alpha': 1.5})."""
        flat = to_flat_dict(self)
        for key, value in sections.items():
            if key not in flat:
                raise ConfigError(f"Unknown config key '{key}'")
            flat[key] = value
        return from_flat_dict(flat)


#
# PUBLIC
#
def to_flat_dict(cfg: RunConfig) -> Dict[str, Any]:
    """Flat section-prefixed mapping of a RunConfig (lists in place of tuples)."""
    flat: Dict[str, Any] = {}
    for section, value in (("model", cfg.model), ("sim", cfg.sim), ("force", cfg.force),
                           ("init", cfg.init), ("tol", cfg.tol), ("verify", cfg.verify)):
        for key, item in asdict(value).items():
            flat[f"{section}.{key}"] = list(item) if isinstance(item, tuple) else item
    flat["sim.reference"] = cfg.reference
    flat["out.dir"] = cfg.out_dir
    return flat


def from_flat_dict(flat: Dict[str, Any]) -> RunConfig:
    """Build a RunConfig from a flat mapping; missing entries take their defaults.

    Raises:
        ConfigError: On unknown keys, missing model parameters or invalid values.
    """
    sections: Dict[str, Dict[str, Any]] = {s: {} for s in ("model", "sim", "force", "init", "tol", "verify")}
    reference, out_dir = "none", ""
    for key, value in flat.items():
        if key == "sim.reference":
            reference = str(value)
            continue
        if key == "out.dir":
            out_dir = "" if value is None else str(value)
            continue
        section, _, name = key.partition(".")
        if section not in sections or not name:
            raise ConfigError(f"Unknown config key '{key}'")
        sections[section][name] = value
    try:
        model = _build(ModelParams, sections["model"], "model")
        sim = _build(SimulationConfig, sections["sim"], "sim")
        force = _build(FieldSpec, sections["force"], "force")
        init = _build(FieldSpec, sections["init"], "init")
        tol = _build(Tolerances, sections["tol"], "tol")
        verify = _build(VerifySettings, sections["verify"], "verify")
    except ConfigError:
        raise
    except (TypeError, ValueError) as error:
        raise ConfigError(str(error)) from error
    return RunConfig(model=model, sim=sim, force=force, init=init, tol=tol,
                     verify=verify, reference=reference, out_dir=out_dir)


def load_run_config(config: Optional[str] = None) -> RunConfig:
    """Load a run config by name or path (see config_discovery.find_config_path).

    Raises:
        ConfigError: If the file cannot be found or parsed.
    """
    path, message = find_config_path(config, "runs")
    if not path:
        raise ConfigError(message)
    logger.debug(message)
    return from_flat_dict(_load_yaml(path))


def write_run_config(cfg: RunConfig, path: Union[str, Path], force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"File {path} already exists. Use force=True to overwrite.")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as file:
        yaml.safe_dump(to_flat_dict(cfg), file, sort_keys=False)
    return path


def load_sweep(config: str) -> Tuple[RunConfig, List[Tuple[Dict[str, Any], RunConfig]]]:
    """Load a sweep file: a base run config plus sweep.<section>.<key> value lists.

    The file holds `base: <run config name or path>` (default run config when
    absent), optional flat overrides of the base and one list per swept key.
    Cells are the Cartesian product in file order.

    Returns:
        (base config, [(cell overrides, cell config), ...])
    """
    path, message = find_config_path(config, "sweeps")
    if not path:
        raise ConfigError(message)
    raw = _load_yaml(path)
    base = load_run_config(raw.pop("base", None))
    axes: List[Tuple[str, List[Any]]] = []
    overrides: Dict[str, Any] = {}
    for key, value in raw.items():
        if key.startswith("sweep."):
            values = value if isinstance(value, list) else [value]
            if not values:
                raise ConfigError(f"sweep axis '{key}' is empty")
            axes.append((key[len("sweep."):], values))
        else:
            overrides[key] = value
    if overrides:
        base = base.with_updates(**overrides)
    cells = []
    for combo in itertools.product(*(values for _, values in axes)):
        cell = {name: value for (name, _), value in zip(axes, combo)}
        cells.append((cell, base.with_updates(**cell)))
    return base, cells


def build_field(spec: FieldSpec, params: ModelParams, divergence_free: bool = True) -> VectorField:
    """Materialize a FieldSpec on the grid of `params`."""
    grid = params.grid
    if spec.kind == "zero":
        return VectorField.zeros(grid)
    if spec.kind == "checkpoint":
        from gaam.persistence import read_checkpoint
        checkpoint = read_checkpoint(spec.path)
        if checkpoint.field.grid != grid:
            raise ConfigError(f"checkpoint {spec.path} lives on {checkpoint.field.grid}, expected {grid}")
        return leray_project(checkpoint.field)
    if spec.kind == "random":
        exponent = spec.spectrum_exponent
        raw = random_divfree_field(spec.seed, lambda k_sq: (1 + k_sq) ** exponent, grid)
    else:
        if len(spec.mode) != grid.dim or len(spec.vector) != grid.dim:
            raise ConfigError(f"mode and vector need {grid.dim} entries")
        try:
            raw = leray_project(VectorField.single_mode(grid, spec.mode, np.asarray(spec.vector, dtype=complex)))
        except ValueError as error:
            raise ConfigError(str(error)) from error
    norm = sobolev_norm(raw, params.beta / 2)
    if norm == 0 or spec.amplitude == 0:
        return VectorField.zeros(grid)
    return raw * (spec.amplitude / norm)


def build_forcing(cfg: RunConfig) -> ForcingField:
    return ForcingField.from_field(build_field(cfg.force, cfg.model))


def build_initial(cfg: RunConfig) -> VectorField:
    return build_field(cfg.init, cfg.model)


#
# INTERNAL
#
def _build(cls, values: Dict[str, Any], section: str):
    """Instantiate a dataclass from a section mapping, rejecting unknown keys."""
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"Unknown config key(s) in section '{section}': {', '.join(section + '.' + u for u in unknown)}")
    kwargs = {name: _coerce(value, known[name].type, f"{section}.{name}") for name, value in values.items()}
    try:
        return cls(**kwargs)
    except TypeError as error:
        raise ConfigError(f"section '{section}' is incomplete or malformed: {error}") from error


def _coerce(value: Any, annotation: Any, key: str) -> Any:
    """Convert a YAML scalar or list to the annotated field type."""
    if value is None:
        raise ConfigError(f"'{key}' must not be empty")
    if get_origin(annotation) is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"'{key}' must be a list (got {value!r})")
        element = get_args(annotation)[0]
        return tuple(_coerce(v, element, key) for v in value)
    try:
        if annotation is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"'{key}' must be true or false (got {value!r})")
            return value
        if annotation is int:
            number = float(value)
            if number != int(number):
                raise ConfigError(f"'{key}' must be an integer (got {value!r})")
            return int(number)
        if annotation is float:
            return float(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as error:
        raise ConfigError(f"'{key}' has an invalid value {value!r}") from error
    return str(value)


def _load_yaml(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as file:
            data = yaml.safe_load(file) or {}
    except yaml.YAMLError as error:
        raise ConfigError(f"Could not parse {path}: {error}") from error
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a flat key: value mapping")
    return data

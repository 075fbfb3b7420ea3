"""Load run configurations from YAML files."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from yaml import YAMLError

from pme_lab.drift.fields import CoefficientTerm
from pme_lab.exceptions import ConfigError
from pme_lab.runner.presets import AUDIT_CHECKS, DRIFT_FLAGS, DRIFT_PRESETS, SIGNAL_PRESETS, preset_data
from pme_lab.types import DriftStructure, ExperimentKind, FigureId, InitialPreset, SolverKind

__all__ = [
    "RunConfig",
    "ExperimentSection",
    "GridSection",
    "TimeSection",
    "ModelSection",
    "DriftSection",
    "InitialSection",
    "ToleranceSection",
    "AuditSection",
    "OutputSection",
    "load_run_config",
    "loads_run_config",
    "parse_run_config",
    "dump_run_config",
    "build_run_config",
]

VALID_SECTIONS = {
    "experiment",
    "grid",
    "time",
    "model",
    "drift",
    "initial",
    "tolerances",
    "audit",
    "output",
}

VALID_EXPERIMENT_FIELDS = {"kind", "name", "figure", "resolution"}
VALID_GRID_FIELDS = {"lower", "upper", "cells"}
VALID_TIME_FIELDS = {"horizon", "steps", "subintervals", "n_values"}
VALID_MODEL_FIELDS = {"m", "q", "d", "solver", "chemotaxis"}
VALID_DRIFT_FIELDS = {
    "preset",
    "amplitude",
    "vector",
    "kappa",
    "center",
    "coefficients",
    "flags",
    "structure",
    "q1",
    "q2",
}
VALID_INITIAL_FIELDS = {
    "preset",
    "center",
    "width",
    "centers",
    "time",
    "scaling",
    "floor",
    "signal",
    "signal_level",
}
VALID_TOLERANCE_FIELDS = {"newton_tol", "max_iter", "mass", "sinkhorn_epsilon", "growth"}
VALID_AUDIT_FIELDS = {"checks", "r1", "r2", "refinement"}
VALID_OUTPUT_FIELDS = {"directory", "fields", "field_stride"}

SIMULATION_KINDS = {ExperimentKind.SIMULATE, ExperimentKind.SPLIT_STUDY, ExperimentKind.AUDIT}

Vector = tuple[float, ...]


@dataclass(frozen=True)
class ExperimentSection:
    kind: ExperimentKind = ExperimentKind.SIMULATE
    name: str | None = None
    figure: FigureId | None = None
    resolution: int = 200


@dataclass(frozen=True)
class GridSection:
    lower: Vector = (0.0,)
    upper: Vector = (1.0,)
    cells: tuple[int, ...] = (64,)


@dataclass(frozen=True)
class TimeSection:
    horizon: float = 0.05
    steps: int = 64
    subintervals: int = 4
    n_values: tuple[int, ...] = (4, 8, 16, 32)


@dataclass(frozen=True)
class ModelSection:
    m: float = 2.0
    q: float | None = None
    d: int | None = None
    solver: SolverKind = SolverKind.MONOLITHIC
    chemotaxis: bool = True


@dataclass(frozen=True)
class DriftSection:
    preset: str = "zero"
    amplitude: float = 1.0
    vector: Vector | None = None
    kappa: float = 1.0
    center: Vector | None = None
    coefficients: tuple[tuple[CoefficientTerm, ...], ...] | None = None
    flags: tuple[str, ...] = ()
    structure: DriftStructure | None = None
    q1: float = math.inf
    q2: float = 2.0


@dataclass(frozen=True)
class InitialSection:
    preset: InitialPreset = InitialPreset.BUMP
    center: Vector | None = None
    width: float = 0.1
    centers: tuple[Vector, ...] | None = None
    time: float = 0.001
    scaling: float = 1.0
    floor: float = 0.0
    signal: str = "uniform"
    signal_level: float = 1.0


@dataclass(frozen=True)
class ToleranceSection:
    """``newton_tol`` and ``max_iter`` left unset fall back to :class:`LabSettings`."""

    newton_tol: float | None = None
    max_iter: int | None = None
    mass: float = 1e-6
    sinkhorn_epsilon: float | None = None
    growth: float = 0.10


@dataclass(frozen=True)
class AuditSection:
    checks: tuple[str, ...] = AUDIT_CHECKS
    r1: float | None = None
    r2: float | None = None
    refinement: bool = False


@dataclass(frozen=True)
class OutputSection:
    """``field_stride = 0`` dumps only the first and last field."""

    directory: str | None = None
    fields: bool = True
    field_stride: int = 0


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration, one attribute per YAML section."""

    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    model: ModelSection = field(default_factory=ModelSection)
    drift: DriftSection = field(default_factory=DriftSection)
    initial: InitialSection = field(default_factory=InitialSection)
    tolerances: ToleranceSection = field(default_factory=ToleranceSection)
    audit: AuditSection = field(default_factory=AuditSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def kind(self) -> ExperimentKind:
        return self.experiment.kind

    @property
    def dimension(self) -> int:
        return len(self.grid.cells)

    @property
    def q(self) -> float:
        return self.model.q if self.model.q is not None else self.model.m

    @property
    def d(self) -> int:
        return self.model.d if self.model.d is not None else self.dimension

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {
            name: {k: _plain(v) for k, v in vars(getattr(self, name)).items()}
            for name in (
                "experiment",
                "grid",
                "time",
                "model",
                "drift",
                "initial",
                "tolerances",
                "audit",
                "output",
            )
        }


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, CoefficientTerm):
        return value.to_dict()
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


class _Section:
    """Typed access to one YAML section with line-aware errors."""

    def __init__(self, name: str, data: Any, valid: set[str], lines: dict[tuple[str, ...], int]):
        self.name = name
        self.lines = lines
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(
                f"Section '{name}' must be a mapping, got {type(data).__name__}",
                line=lines.get((name,)),
            )
        unknown = set(data) - valid
        if unknown:
            first = min(unknown, key=lambda k: lines.get((name, k), 0))
            raise ConfigError(
                f"Unknown field(s) in section '{name}': {', '.join(sorted(map(str, unknown)))}",
                line=lines.get((name, first), lines.get((name,))),
            )
        self.data = data

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(f"{self.name}.{key}: {message}", line=self.lines.get((self.name, key)))

    def has(self, key: str) -> bool:
        return self.data.get(key) is not None

    def real(
        self,
        key: str,
        default: float | None,
        *,
        low: float | None = None,
        strict: bool = False,
        allow_inf: bool = False,
    ) -> float | None:
        raw = self.data.get(key)
        if raw is None:
            return default
        value = _to_float(raw)
        if value is None or math.isnan(value):
            raise self.error(key, f"expected a number, got {raw!r}")
        if math.isinf(value) and not (allow_inf and value > 0):
            raise self.error(key, f"must be finite, got {raw!r}")
        if low is not None and (value < low or (strict and value == low)):
            relation = ">" if strict else ">="
            raise self.error(key, f"must be {relation} {low:g}, got {value:g}")
        return value

    def integer(self, key: str, default: int | None, *, low: int | None = None) -> int | None:
        raw = self.data.get(key)
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise self.error(key, f"expected an integer, got {raw!r}")
        if low is not None and raw < low:
            raise self.error(key, f"must be >= {low}, got {raw}")
        return raw

    def flag(self, key: str, default: bool) -> bool:
        raw = self.data.get(key)
        if raw is None:
            return default
        if not isinstance(raw, bool):
            raise self.error(key, f"expected true or false, got {raw!r}")
        return raw

    def text(self, key: str, default: str | None, choices: tuple[str, ...] | None = None) -> str | None:
        raw = self.data.get(key)
        if raw is None:
            return default
        if not isinstance(raw, str):
            raise self.error(key, f"expected a string, got {raw!r}")
        if choices is not None and raw not in choices:
            raise self.error(key, f"unknown value '{raw}' (expected one of: {', '.join(choices)})")
        return raw

    def choice(self, key: str, enum: type[Enum], default: Any) -> Any:
        raw = self.data.get(key)
        if raw is None:
            return default
        try:
            return enum(raw)
        except ValueError as e:
            known = ", ".join(str(v.value) for v in enum)
            raise self.error(key, f"unknown value '{raw}' (expected one of: {known})") from e

    def vector(self, key: str, default: Any, *, integer: bool = False) -> Any:
        raw = self.data.get(key)
        if raw is None:
            return default
        if not isinstance(raw, list) or not raw:
            raise self.error(key, f"expected a non-empty list, got {raw!r}")
        out = []
        for item in raw:
            if integer:
                if isinstance(item, bool) or not isinstance(item, int):
                    raise self.error(key, f"expected integers, got {item!r}")
                out.append(item)
            else:
                value = _to_float(item)
                if value is None or not math.isfinite(value):
                    raise self.error(key, f"expected finite numbers, got {item!r}")
                out.append(value)
        return tuple(out)

    def points(self, key: str) -> tuple[Vector, ...] | None:
        raw = self.data.get(key)
        if raw is None:
            return None
        if not isinstance(raw, list) or not raw:
            raise self.error(key, f"expected a list of points, got {raw!r}")
        out = []
        for item in raw:
            if not isinstance(item, list):
                raise self.error(key, f"expected a list of points, got {item!r}")
            values = [_to_float(v) for v in item]
            if any(v is None or not math.isfinite(v) for v in values):
                raise self.error(key, f"expected finite coordinates, got {item!r}")
            out.append(tuple(values))
        return tuple(out)


def _to_float(raw: Any) -> float | None:
    # PyYAML reads exponent literals without a dot ("1e-10") as strings.
    if isinstance(raw, bool):
        return None
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float(raw)
        except ValueError:
            return None
    return None


def _key_lines(root: yaml.Node | None) -> dict[tuple[str, ...], int]:
    """1-based line of every section key and every key inside a section."""
    lines: dict[tuple[str, ...], int] = {}
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key, value in root.value:
        section = str(key.value)
        lines[(section,)] = key.start_mark.line + 1
        if isinstance(value, yaml.MappingNode):
            for sub_key, _ in value.value:
                lines[(section, str(sub_key.value))] = sub_key.start_mark.line + 1
    return lines


def _read_yaml(text: str, source: str) -> tuple[dict[str, Any], dict[tuple[str, ...], int]]:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"Invalid YAML in {source}: {problem}", line=line) from e

    if data is None:
        raise ConfigError(f"Empty config file: {source}")
    if not isinstance(data, dict):
        raise ConfigError(
            f"Top-level YAML must be a mapping/dict, got {type(data).__name__} in {source}"
        )
    return data, _key_lines(root)


def load_run_config(path: Path) -> RunConfig:
    """Load and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    return loads_run_config(text, source=str(path))


def loads_run_config(text: str, source: str = "<string>") -> RunConfig:
    data, lines = _read_yaml(text, source)
    return parse_run_config(data, lines)


def dump_run_config(config: RunConfig) -> str:
    """YAML text that :func:`loads_run_config` turns back into ``config``."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def parse_run_config(data: dict[str, Any], lines: dict[tuple[str, ...], int] | None = None) -> RunConfig:
    """Validate a raw config mapping.

    Every check that does not need a numerical solve happens here, so a bad
    config fails before any computation starts.

    Raises:
        ConfigError: On unknown sections or fields, bad values, or values
            missing for the experiment kind.
    """
    lines = lines or {}
    unknown = set(data) - VALID_SECTIONS
    if unknown:
        first = min(unknown, key=lambda k: lines.get((str(k),), 0))
        raise ConfigError(
            f"Unknown section(s): {', '.join(sorted(map(str, unknown)))}",
            line=lines.get((str(first),)),
        )

    def section(name: str, valid: set[str]) -> _Section:
        return _Section(name, data.get(name), valid, lines)

    experiment = _parse_experiment(section("experiment", VALID_EXPERIMENT_FIELDS))
    grid_reader = section("grid", VALID_GRID_FIELDS)
    grid = _parse_grid(grid_reader)
    dimension = len(grid.cells)
    time_reader = section("time", VALID_TIME_FIELDS)
    time = _parse_time(time_reader)
    model_reader = section("model", VALID_MODEL_FIELDS)
    model = _parse_model(model_reader)
    drift = _parse_drift(section("drift", VALID_DRIFT_FIELDS), dimension)
    initial = _parse_initial(section("initial", VALID_INITIAL_FIELDS), dimension)
    tolerances = _parse_tolerances(section("tolerances", VALID_TOLERANCE_FIELDS))
    audit = _parse_audit(section("audit", VALID_AUDIT_FIELDS))
    output = _parse_output(section("output", VALID_OUTPUT_FIELDS))

    config = RunConfig(
        experiment=experiment,
        grid=grid,
        time=time,
        model=model,
        drift=drift,
        initial=initial,
        tolerances=tolerances,
        audit=audit,
        output=output,
    )
    _check_kind(config, time_reader, model_reader, lines)
    return config


def _parse_experiment(s: _Section) -> ExperimentSection:
    return ExperimentSection(
        kind=s.choice("kind", ExperimentKind, ExperimentKind.SIMULATE),
        name=s.text("name", None),
        figure=s.choice("figure", FigureId, None),
        resolution=s.integer("resolution", 200, low=2),
    )


def _parse_grid(s: _Section) -> GridSection:
    defaults = GridSection()
    cells = s.vector("cells", defaults.cells, integer=True)
    d = len(cells)
    if d not in (1, 2):
        raise s.error("cells", f"grid must be one- or two-dimensional, got {d} axes")
    lower = s.vector("lower", (0.0,) * d)
    upper = s.vector("upper", (1.0,) * d)
    if len(lower) != d or len(upper) != d:
        raise s.error("lower", f"lower/upper/cells lengths differ: {len(lower)}, {len(upper)}, {d}")
    for axis, (a, b, n) in enumerate(zip(lower, upper, cells)):
        if b <= a:
            raise s.error("upper", f"axis {axis}: need lower < upper, got [{a:g}, {b:g}]")
        if n < 4:
            raise s.error("cells", f"axis {axis}: need at least 4 cells, got {n}")
    return GridSection(lower=lower, upper=upper, cells=cells)


def _parse_time(s: _Section) -> TimeSection:
    defaults = TimeSection()
    horizon = s.real("horizon", defaults.horizon, low=0.0, strict=True)
    steps = s.integer("steps", defaults.steps, low=1)
    subintervals = s.integer("subintervals", defaults.subintervals, low=1)
    if steps % subintervals != 0:
        raise s.error("subintervals", f"{subintervals} does not divide steps ({steps})")
    n_values = s.vector("n_values", defaults.n_values, integer=True)
    if len(n_values) < 2 or any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] < 1:
        raise s.error("n_values", f"must be positive and strictly increasing with two or more entries, got {list(n_values)}")
    return TimeSection(horizon=horizon, steps=steps, subintervals=subintervals, n_values=n_values)


def _parse_model(s: _Section) -> ModelSection:
    return ModelSection(
        m=s.real("m", 2.0, low=1.0, strict=True),
        q=s.real("q", None, low=1.0),
        d=s.integer("d", None, low=1),
        solver=s.choice("solver", SolverKind, SolverKind.MONOLITHIC),
        chemotaxis=s.flag("chemotaxis", True),
    )


def _parse_coefficients(s: _Section, dimension: int) -> tuple[tuple[CoefficientTerm, ...], ...] | None:
    raw = s.data.get("coefficients")
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != dimension:
        raise s.error("coefficients", f"expected one list of terms per axis ({dimension}), got {raw!r}")
    table = []
    for axis, terms in enumerate(raw):
        if not isinstance(terms, list):
            raise s.error("coefficients", f"component {axis}: expected a list of terms, got {terms!r}")
        try:
            table.append(tuple(CoefficientTerm.from_mapping(term, dimension) for term in terms))
        except ConfigError as e:
            raise s.error("coefficients", f"component {axis}: {e}") from e
    return tuple(table)


def _parse_drift(s: _Section, dimension: int) -> DriftSection:
    preset = s.text("preset", "zero", DRIFT_PRESETS)
    vector = s.vector("vector", None)
    center = s.vector("center", None)
    coefficients = _parse_coefficients(s, dimension)
    flags = ()
    if s.has("flags"):
        raw = s.data["flags"]
        if not isinstance(raw, list) or any(f not in DRIFT_FLAGS for f in raw):
            raise s.error("flags", f"expected any of {', '.join(DRIFT_FLAGS)}, got {raw!r}")
        flags = tuple(raw)
    if preset == "table" and coefficients is None:
        raise s.error("coefficients", "required for the table drift")
    if preset != "table" and (coefficients is not None or flags):
        raise s.error("preset", "coefficients and flags apply to the table drift only")
    if preset == "constant" and vector is None:
        raise s.error("vector", "required for the constant drift")
    if vector is not None and len(vector) != dimension:
        raise s.error("vector", f"must have length {dimension}, got {len(vector)}")
    if center is not None and len(center) != dimension:
        raise s.error("center", f"must have length {dimension}, got {len(center)}")
    if preset == "rotation" and dimension != 2:
        raise s.error("preset", "the rotation drift needs a two-dimensional grid")
    return DriftSection(
        preset=preset,
        amplitude=s.real("amplitude", 1.0),
        vector=vector,
        kappa=s.real("kappa", 1.0, low=0.0),
        center=center,
        coefficients=coefficients,
        flags=flags,
        structure=s.choice("structure", DriftStructure, None),
        q1=s.real("q1", math.inf, low=1.0, allow_inf=True),
        q2=s.real("q2", 2.0, low=1.0, allow_inf=True),
    )


def _parse_initial(s: _Section, dimension: int) -> InitialSection:
    center = s.vector("center", None)
    if center is not None and len(center) != dimension:
        raise s.error("center", f"must have length {dimension}, got {len(center)}")
    centers = s.points("centers")
    if centers is not None and any(len(c) != dimension for c in centers):
        raise s.error("centers", f"every center must have length {dimension}")
    return InitialSection(
        preset=s.choice("preset", InitialPreset, InitialPreset.BUMP),
        center=center,
        width=s.real("width", 0.1, low=0.0, strict=True),
        centers=centers,
        time=s.real("time", 0.001, low=0.0, strict=True),
        scaling=s.real("scaling", 1.0, low=0.0, strict=True),
        floor=s.real("floor", 0.0, low=0.0),
        signal=s.text("signal", "uniform", SIGNAL_PRESETS),
        signal_level=s.real("signal_level", 1.0, low=0.0, strict=True),
    )


def _parse_tolerances(s: _Section) -> ToleranceSection:
    return ToleranceSection(
        newton_tol=s.real("newton_tol", None, low=0.0, strict=True),
        max_iter=s.integer("max_iter", None, low=1),
        mass=s.real("mass", 1e-6, low=0.0, strict=True),
        sinkhorn_epsilon=s.real("sinkhorn_epsilon", None, low=0.0, strict=True),
        growth=s.real("growth", 0.10, low=0.0),
    )


def _parse_audit(s: _Section) -> AuditSection:
    checks = AUDIT_CHECKS
    if s.has("checks"):
        raw = s.data["checks"]
        if not isinstance(raw, list) or not all(isinstance(c, str) for c in raw):
            raise s.error("checks", f"expected a list of check names, got {raw!r}")
        unknown = [c for c in raw if c not in AUDIT_CHECKS]
        if unknown:
            raise s.error(
                "checks",
                f"unknown check(s) {', '.join(unknown)} (expected any of: {', '.join(AUDIT_CHECKS)})",
            )
        checks = tuple(raw)
    return AuditSection(
        checks=checks,
        r1=s.real("r1", None, low=1.0, allow_inf=True),
        r2=s.real("r2", None, low=1.0, allow_inf=True),
        refinement=s.flag("refinement", False),
    )


def _parse_output(s: _Section) -> OutputSection:
    return OutputSection(
        directory=s.text("directory", None),
        fields=s.flag("fields", True),
        field_stride=s.integer("field_stride", 0, low=0),
    )


def _check_kind(
    config: RunConfig,
    time_reader: _Section,
    model_reader: _Section,
    lines: dict[tuple[str, ...], int],
) -> None:
    kind = config.kind
    missing = []
    if kind is ExperimentKind.REGIONS and config.experiment.figure is None:
        missing.append("experiment.figure (use --figure)")
    if kind in (ExperimentKind.REGIONS, ExperimentKind.THRESHOLDS) and config.model.d is None:
        missing.append("model.d (use --d)")
    if missing:
        raise ConfigError("Missing required configuration:\n  - " + "\n  - ".join(missing))

    d = config.model.d
    if kind in (ExperimentKind.REGIONS, ExperimentKind.THRESHOLDS) and d < 2:
        raise model_reader.error("d", f"exponent diagrams need d >= 2, got {d}")
    if kind in SIMULATION_KINDS and d is not None and d != config.dimension:
        raise model_reader.error("d", f"is {d} but the grid is {config.dimension}-dimensional")
    if kind is ExperimentKind.KS and d is not None and d < 3:
        raise model_reader.error("d", f"Keller-Segel exponents need d >= 3, got {d}")
    if kind is ExperimentKind.SPLIT_STUDY:
        bad = [n for n in config.time.n_values if config.time.steps % n != 0]
        if bad:
            raise time_reader.error("n_values", f"{bad} do not divide steps ({config.time.steps})")


def build_run_config(
    kind: ExperimentKind,
    config_path: Path | None = None,
    preset: str | None = None,
    overrides: dict[str, dict[str, Any]] | None = None,
) -> RunConfig:
    """Layer preset, config file and command-line overrides, then validate.

    Raises:
        ConfigError: If the file declares a different experiment kind, or
            the merged config is invalid.
    """
    data: dict[str, Any] = preset_data(preset) if preset else {}
    lines: dict[tuple[str, ...], int] = {}
    if config_path is not None:
        path = Path(config_path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        file_data, lines = _read_yaml(text, str(path))
        declared = (file_data.get("experiment") or {}).get("kind")
        if declared is not None and declared != kind.value:
            raise ConfigError(
                f"Config file {path} declares experiment kind '{declared}', command is '{kind.value}'",
                line=lines.get(("experiment", "kind")),
            )
        data = _merge(data, file_data)
    data = _merge(data, overrides or {})
    experiment = data.get("experiment")
    if experiment is None:
        data["experiment"] = {}
    elif not isinstance(experiment, dict):
        raise ConfigError("Section 'experiment' must be a mapping", line=lines.get(("experiment",)))
    data["experiment"]["kind"] = kind.value
    return parse_run_config(data, lines)


def _merge(base: dict[str, Any], top: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in top.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **copy.deepcopy(value)}
        else:
            out[key] = copy.deepcopy(value)
    return out

"""Experiment configuration: YAML file -> validated :class:`ExperimentConfig`.

Unknown keys are rejected everywhere.  ``--override a.b.c=value`` edits the
raw document before validation; values are parsed as YAML scalars/lists.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .grid import CrossSection, GridError, build_grid

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "apply_override", "SCHEMA_VERSION"]

SCHEMA_VERSION = "1"


class ConfigError(Exception):
    """Schema or parse error; ``str()`` carries line/field diagnostics."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PotentialSpec(_Strict):
    name: Literal["ginzburg_landau", "polynomial"] = "ginzburg_landau"
    coefficients: Optional[list[float]] = None  # power series c0 + c1 t + ..., for name = polynomial

    @model_validator(mode="after")
    def _coeffs(self):
        if self.name == "polynomial" and not self.coefficients:
            raise ValueError("polynomial potential needs 'coefficients'")
        return self


class CoefficientSpec(_Strict):
    kind: Literal["constant", "periodic", "class1", "class2"] = "constant"
    value: float = 0.5                       # constant
    a: float = 2.0                           # periodic a + b cos(2 pi x); Class 1 companion
    b: float = 1.0
    gap: Literal["gaussian", "exponential"] = "gaussian"   # Class 1: A = A_p - gap
    gap_amplitude: float = 0.5
    gap_width: float = 1.0
    profile: Literal["gaussian_well"] = "gaussian_well"     # Class 2 profile
    a0: float = 1.0
    a_inf: float = 2.0
    width: float = 1.0
    epsilon: float = 1.0
    eps_list: list[float] = Field(default_factory=lambda: [2.0, 1.0, 0.5, 0.2, 0.1])

    @field_validator("eps_list")
    @classmethod
    def _descending(cls, v: list[float]):
        if not v or any(e <= 0 for e in v) or any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("eps_list must be non-empty, positive and strictly descending")
        return v


class CrossSpec(_Strict):
    extents: list[float] = Field(default_factory=lambda: [1.0])
    nodes: list[int] = Field(default_factory=lambda: [3])


class GridSpec(_Strict):
    T: int = 20
    h_x: float = 0.01
    cross: CrossSpec = Field(default_factory=CrossSpec)

    @model_validator(mode="after")
    def _buildable(self):
        try:
            self.build()
        except GridError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self):
        return build_grid(self.T, self.h_x, CrossSection(tuple(self.cross.extents), tuple(self.cross.nodes)))


class SeedSpec(_Strict):
    kind: Literal["phi", "custom"] = "phi"
    j: int = 0
    path: Optional[str] = None  # CSV field dump, for kind = custom

    @model_validator(mode="after")
    def _path(self):
        if self.kind == "custom" and not self.path:
            raise ValueError("custom seed needs 'path'")
        return self


class SolveSpec(_Strict):
    max_iterations: int = Field(20000, ge=0)
    gradient_tolerance: float = Field(1e-8, gt=0)
    energy_stall_tolerance: float = Field(1e-16, gt=0)
    step_rule: Literal["armijo", "fixed"] = "armijo"
    step_size: float = Field(1.0, gt=0)
    history: int = Field(10, ge=0)
    warm_start: bool = True
    seed: SeedSpec = Field(default_factory=SeedSpec)


def _beta_grid_default():
    return GridSpec(T=1, h_x=0.05, cross=CrossSpec(extents=[1.0], nodes=[21]))


class BetaSpec(_Strict):
    A0: float = Field(1.0, gt=0)
    grid: GridSpec = Field(default_factory=_beta_grid_default)
    gradient_tolerance: float = Field(1e-9, gt=0)
    max_iterations: int = Field(20000, ge=1)

    @field_validator("grid")
    @classmethod
    def _unit(cls, g: GridSpec):
        if g.T != 1:
            raise ValueError("beta grid must cover (-1, 1), i.e. T = 1")
        return g


class ValidateSpec(_Strict):
    samples: int = Field(2001, ge=100)


class ChecksSpec(_Strict):
    closed_form_rtol: float = 0.005    # minimize, constant A
    level_rtol: float = 0.01           # sweep-eps reference levels
    equipartition_tol: float = 0.01    # constant A
    gap_threshold: float = 0.0         # compare-levels: J_Ap(U*_p) - J_A(U*_p) must exceed this
    tail_tolerance: float = 1e-3       # end-slab tail norms (admissible-class proxy)


class OutputSpec(_Strict):
    dir: str = "out"
    gzip: bool = False


class ExperimentConfig(_Strict):
    kind: Literal["validate", "minimize", "compare-levels", "sweep-eps", "beta"] = "minimize"
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    coefficient: CoefficientSpec = Field(default_factory=CoefficientSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    solve: SolveSpec = Field(default_factory=SolveSpec)
    tau: Optional[float] = None
    beta: BetaSpec = Field(default_factory=BetaSpec)
    validate_: ValidateSpec = Field(default_factory=ValidateSpec, alias="validate")
    checks: ChecksSpec = Field(default_factory=ChecksSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    def resolved(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def _field_names(model: type[BaseModel]) -> dict[str, Any]:
    out = {}
    for name, f in model.model_fields.items():
        out[f.alias or name] = f.annotation
    return out


def _check_path(path: list[str]) -> None:
    model: Any = ExperimentConfig
    for i, key in enumerate(path):
        if not (isinstance(model, type) and issubclass(model, BaseModel)):
            raise ConfigError(f"override key {'.'.join(path)!r}: {'.'.join(path[:i])!r} is not a section")
        fields = _field_names(model)
        if key not in fields:
            raise ConfigError(f"override key {'.'.join(path)!r}: unknown key {key!r}"
                              f" (known: {', '.join(sorted(fields))})")
        ann = fields[key]
        model = next((a for a in getattr(ann, "__args__", (ann,)) if isinstance(a, type)
                      and issubclass(a, BaseModel)), ann)


def apply_override(doc: dict, override: str) -> dict:
    if "=" not in override:
        raise ConfigError(f"override {override!r} must look like key=value")
    key, raw = override.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"override {override!r} has an empty key")
    _check_path(path)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {override!r}: cannot parse value: {exc}") from None
    node = doc
    for p in path[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = node[p] = {}
        elif not isinstance(nxt, dict):
            raise ConfigError(f"override {override!r}: {p!r} is not a mapping in the config")
        node = nxt
    node[path[-1]] = value
    return doc


def _line_of(root: Optional[yaml.Node], loc: tuple) -> Optional[int]:
    """1-based line of the deepest key along ``loc`` present in the YAML document."""
    node, line = root, None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            hit = next(((k, v) for k, v in node.value if k.value == key), None)
            if hit is None:
                break
            line = hit[0].start_mark.line + 1
            node = hit[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def load_config(path: str | Path | None, overrides: Optional[list[str]] = None) -> ExperimentConfig:
    """Parse and validate ``path`` (``None`` means all defaults) after applying ``overrides``."""
    if path is None:
        path, text = Path("<defaults>"), ""
    else:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text) or {}
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for ov in overrides or []:
        apply_override(doc, ov)
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            where = ".".join(str(p) for p in loc) or "<root>"
            ln = _line_of(root, loc)
            prefix = f"{path}:{ln}" if ln else f"{path}"
            lines.append(f"{prefix}: {where}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from None

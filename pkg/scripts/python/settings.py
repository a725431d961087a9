"""
Numerical settings for quasi-extremity analyses.

Defaults live in the dataclass below and in inputs/qe_defaults.yaml
(camelCase keys under `configuration:`). Later sources override earlier ones:
defaults, YAML file, explicit keyword overrides.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import yaml

DEFAULTS_YAML = Path(__file__).resolve().parents[2] / "inputs" / "qe_defaults.yaml"


@dataclass(frozen=True)
class Tolerances:
    degree: int = 20
    nodes: int = 16
    stages: int = 5
    seed: int = 42
    radius: float = 0.9
    rcond: float = 1e-12
    range_tol: float = 1e-6
    contract_tol: float = 1e-8
    kernel_tol: float = 1e-8
    cross_tol: float = 0.01
    defect_tol: float = 1e-8
    plateau_tol: float = 0.02
    div_cap: float = 1e6
    iso_tol: float = 1e-8
    herglotz_guard: float = 1e-8
    richardson_levels: int = 5
    max_basis: int = 1500
    taylor_degree: int = 12
    positivity_degree: int = 20
    grid_size: int = 4096
    underflow_tol: float = 1e-14
    szego_cap: float = 50.0
    sarason_terms: int = 8
    sample_batch: int = 256

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.nodes < 1 or self.stages < 1:
            raise ValueError(f"nodes and stages must be >= 1, got {self.nodes}, {self.stages}")
        if not 0.0 < self.radius < 1.0:
            raise ValueError(f"radius must lie in (0, 1), got {self.radius}")
        if self.grid_size < 8 or self.grid_size & (self.grid_size - 1):
            raise ValueError(f"gridSize must be a power of two >= 8, got {self.grid_size}")

    @property
    def schedule(self) -> list:
        """Node counts n, 2n, 4n, ... of the membership schedule."""
        return [self.nodes * 2 ** k for k in range(self.stages)]

    def to_config(self) -> Dict[str, Any]:
        return {_camel(k): v for k, v in asdict(self).items()}


def _camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(part.capitalize() for part in rest)


def _snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


_FIELD_TYPES = {f.name: f.type for f in fields(Tolerances)}


def _coerce(key: str, value: Any) -> Any:
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("int", int):
            return int(float(value)) if isinstance(value, str) else int(value)
        return float(value)
    except (TypeError, ValueError) as e:
        raise ValueError(f"Setting {_camel(key)} expects {kind}, got {value!r}") from e


def normalize_overrides(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Accept camelCase or snake_case keys; reject unknown ones."""
    out: Dict[str, Any] = {}
    for key, value in (raw or {}).items():
        snake = _snake(key) if key not in _FIELD_TYPES else key
        if snake not in _FIELD_TYPES:
            raise ValueError(f"Unknown setting '{key}'. Known: {sorted(_camel(k) for k in _FIELD_TYPES)}")
        out[snake] = _coerce(snake, value)
    return out


def parse_overrides(items: Optional[Iterable[str]]) -> Dict[str, Any]:
    """Parse `key=value` strings from the --tol flag."""
    raw: Dict[str, Any] = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"Override must look like key=value, got '{item}'")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    return normalize_overrides(raw)


def _load_yaml(path: Path) -> dict:
    if not path.exists():
        raise FileNotFoundError(f"YAML not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_settings(path: Optional[Path] = None, **overrides: Any) -> Tolerances:
    """Build Tolerances from the YAML `configuration:` block plus keyword overrides."""
    settings = Tolerances()
    yaml_path = Path(path) if path else DEFAULTS_YAML
    if path or yaml_path.exists():
        cfg = _load_yaml(yaml_path)
        block = cfg.get("configuration") or {}
        if not isinstance(block, dict):
            raise ValueError(f"'configuration' in {yaml_path} must be a mapping")
        settings = replace(settings, **normalize_overrides(block))
    if overrides:
        settings = replace(settings, **normalize_overrides(overrides))
    return settings

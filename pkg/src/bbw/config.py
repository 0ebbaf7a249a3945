"""Experiment configuration files for the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .knots import KnotHierarchy
from .smooth import SmoothFamily

BUNDLED = ("figure1", "figure2")


@dataclass(frozen=True)
class ExperimentConfig:
    order: int
    families: dict
    hierarchy: KnotHierarchy
    vanishing_moments: int = 2
    sample_count: int = 1000

    @property
    def finest_size(self) -> int:
        return self.hierarchy[-1].count + self.order - 2

    def select(self, name: str | None) -> dict:
        """The named family, or all of them when ``name`` is None."""
        if name is None:
            return self.families
        if name not in self.families:
            raise ConfigError(f"unknown family {name!r}; config has {sorted(self.families)}")
        return {name: self.families[name]}


def _family(name, descs, order):
    if not isinstance(descs, list):
        raise ConfigError(f"family {name!r} must be a list of function descriptors")
    try:
        fam = SmoothFamily.from_descriptors(descs)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"family {name!r}: {exc}") from None
    if fam.order != order:
        raise ConfigError(f"family {name!r} has {fam.order} members but order is {order}")
    if not fam.starts_with_one_and_x():
        raise ConfigError(f"family {name!r} must start with the members 1 and x")
    return fam


def _hierarchy(knots):
    try:
        if isinstance(knots, dict):
            levels = int(knots.get("levels", 0))
            if levels < 0:
                raise ConfigError("knots.levels must be nonnegative")
            return KnotHierarchy.from_coarse(knots["coarse"], levels, knots.get("insertion", "midpoint"))
        if isinstance(knots, list) and knots and isinstance(knots[0], list):
            return KnotHierarchy(tuple(knots))
        raise ConfigError("knots must be a list of per-level lists or {coarse, levels, insertion}")
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"knots lacks field {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"invalid knots: {exc}") from None


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON config.

    Raises:
        ConfigError: on any invalid field.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    try:
        order = int(data["order"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("config needs an integer 'order'") from None
    if order < 2:
        raise ConfigError(f"order must be at least 2, got {order}")
    if "families" in data:
        raw = data["families"]
        if not isinstance(raw, dict) or not raw:
            raise ConfigError("'families' must map names to descriptor lists")
    elif "family" in data:
        raw = {"family": data["family"]}
    else:
        raise ConfigError("config needs 'family' or 'families'")
    families = {name: _family(name, descs, order) for name, descs in raw.items()}
    if "knots" not in data:
        raise ConfigError("config needs 'knots'")
    hierarchy = _hierarchy(data["knots"])
    if hierarchy[0].count < 3:
        raise ConfigError("the coarsest grid needs at least 3 knots")
    p = int(data.get("vanishing_moments", 2))
    if p != 2:
        raise ConfigError("only vanishing_moments = 2 is supported")
    samples = int(data.get("sample_count", 1000))
    if samples < 2:
        raise ConfigError("sample_count must be at least 2")
    return ExperimentConfig(order, families, hierarchy, p, samples)


def load_config(source: str) -> ExperimentConfig:
    """Load a config from a path or a bundled name (``figure1``, ``figure2``)."""
    path = Path(source)
    if path.exists():
        text = path.read_text()
    elif source in BUNDLED:
        text = resources.files("bbw.configs").joinpath(f"{source}.json").read_text()
    else:
        raise ConfigError(f"config {source!r} not found")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)

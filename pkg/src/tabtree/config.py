"""Config files: custom family trees, process entries, and pipeline options.

A config is a JSON object with up to three sections::

    {
      "transformdict": {"newt": {"parents": ["newt"], "auntsuncles": ["pwr2"],
                                 "cousins": ["NArw"], "friends": ["bins"]}},
      "processdict": {"newt": {"functionpointer": "retn", "NArowtype": "numeric",
                               "MLinfilltype": "numeric", "labelctgy": "newt"}},
      "pipeline": {"labels_column": "y", "assigncat": {"newt": ["col1"]}}
    }

``functionpointer`` clones the process entry of an existing category; the
clone takes its own id as suffix unless ``suffix`` is given.  Missing
transformdict slots default to empty lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .data_model import FamilyTree, ProcessEntry, TransformCategory, validate_registry
from .errors import ConfigError
from .pipeline import PipelineConfig
from .registry import builtin_registry

SECTIONS = ("transformdict", "processdict", "pipeline")

# processdict key -> ProcessEntry field
PROCESS_KEYS = {
    "NArowtype": "narowtype",
    "MLinfilltype": "mlinfilltype",
    "columntype": "columntype",
    "labelctgy": "labelctgy",
    "suffix": "suffix",
    "fit_fn": "fit_fn",
    "apply_fn": "apply_fn",
    "invert_fn": "invert_fn",
    "full_information": "full_information",
    "defaultparams": "default_params",
}


@dataclass
class ConfigFile:
    transformdict: dict = field(default_factory=dict)
    processdict: dict = field(default_factory=dict)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def to_dict(self) -> dict:
        return {
            "transformdict": {k: tree.to_dict() for k, tree in sorted(self.transformdict.items())},
            "processdict": {k: dict(sorted(v.items())) for k, v in sorted(self.processdict.items())},
            "pipeline": self.pipeline.to_dict(),
        }


def parse_config(data) -> ConfigFile:
    """Parse a config from JSON text, bytes, or an already-decoded dict."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    transformdict = {}
    for cat_id, slots in data.get("transformdict", {}).items():
        if not isinstance(slots, dict):
            raise ConfigError(f"transformdict[{cat_id!r}] must be an object of primitive lists")
        try:
            transformdict[cat_id] = FamilyTree.from_dict(slots)
        except ValueError as exc:
            raise ConfigError(f"transformdict[{cat_id!r}]: {exc}") from exc

    processdict = {}
    for cat_id, entry in data.get("processdict", {}).items():
        if not isinstance(entry, dict):
            raise ConfigError(f"processdict[{cat_id!r}] must be an object")
        bad = set(entry) - set(PROCESS_KEYS) - {"functionpointer"}
        if bad:
            raise ConfigError(f"processdict[{cat_id!r}] has unknown keys {sorted(bad)}")
        if "functionpointer" not in entry and not {"fit_fn", "apply_fn"} <= set(entry):
            raise ConfigError(f"processdict[{cat_id!r}] needs a functionpointer or both fit_fn and apply_fn")
        processdict[cat_id] = dict(entry)

    pipeline = PipelineConfig.from_dict(data.get("pipeline", {}))
    return ConfigFile(transformdict, processdict, pipeline)


def emit_config(config: ConfigFile) -> str:
    return json.dumps(config.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)


def load_config(path) -> ConfigFile:
    with open(path, "rb") as fh:
        return parse_config(fh.read())


def _process_for(cat_id, entry, registry, processdict, resolving) -> ProcessEntry:
    if "functionpointer" in entry:
        target = entry["functionpointer"]
        if target in resolving:
            raise ConfigError(f"functionpointer cycle through {target!r}")
        if target in processdict and target not in registry:
            registry[target] = TransformCategory(
                target, FamilyTree(), _process_for(target, processdict[target], registry, processdict,
                                                   resolving | {cat_id})
            )
        if target not in registry:
            raise ConfigError(f"processdict[{cat_id!r}] functionpointer {target!r} is not a known category")
        base = replace(registry[target].process, suffix=cat_id)
    else:
        base = ProcessEntry(fit_fn=entry["fit_fn"], apply_fn=entry["apply_fn"], suffix=cat_id)
    overrides = {PROCESS_KEYS[k]: v for k, v in entry.items() if k in PROCESS_KEYS}
    if "default_params" in overrides:
        overrides["default_params"] = {**base.default_params, **overrides["default_params"]}
    try:
        return replace(base, **overrides)
    except TypeError as exc:
        raise ConfigError(f"processdict[{cat_id!r}]: {exc}") from exc


def build_registry(config: ConfigFile, base: dict | None = None) -> dict:
    """Builtin registry (or ``base``) extended with the config's custom categories."""
    registry = dict(base if base is not None else builtin_registry())
    for cat_id, entry in config.processdict.items():
        process = _process_for(cat_id, entry, registry, config.processdict, frozenset({cat_id}))
        tree = registry[cat_id].tree if cat_id in registry else FamilyTree()
        registry[cat_id] = TransformCategory(cat_id, tree, process)
    for cat_id, tree in config.transformdict.items():
        if cat_id not in registry:
            raise ConfigError(f"transformdict[{cat_id!r}] has no processdict entry or builtin category")
        registry[cat_id] = TransformCategory(cat_id, tree, registry[cat_id].process)
    problems = validate_registry(registry)
    if problems:
        raise ConfigError("invalid categories: " + "; ".join(problems))
    return registry


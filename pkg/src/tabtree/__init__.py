"""Family-tree driven tabular preprocessing with invertible transforms, noise, and infill."""

from .config import ConfigFile, build_registry, emit_config, load_config, parse_config
from .data_model import (
    ColumnData,
    FamilyTree,
    FittedColumnBasis,
    PipelineStore,
    ProcessEntry,
    TransformCategory,
    deserialize_pipeline,
    serialize_pipeline,
    validate_registry,
)
from .errors import (
    ConfigError,
    ContractError,
    CycleError,
    FitError,
    InversionError,
    ParamError,
    PipelineParseError,
    RegistryError,
    TabTreeError,
)
from .inversion import build_inversion_paths, invert
from .pipeline import FitResult, PipelineConfig, apply, columntype_report, fit
from .registry import builtin_registry
from .tree import apply_tree, fit_tree

__version__ = "0.1.0"

"""Sign-constrained rectifier networks: separability oracles, constructive
separators, active-set decompositions and MM training."""

from .construct import (
    build_shl_multiclass,
    build_shl_separator,
    build_thl_multiclass,
    build_thl_separator,
    greedy_convex_cover,
)
from .decompose import full_drill_down, shl_decompose, thl_decompose
from .geometry import (
    hull_distance,
    hulls_distance,
    is_convexly_separable,
    is_linearly_separable,
    is_mutually_convexly_separable,
)
from .network import CanonicalShl, CanonicalThl, ReluLayer, Scrn1Model, Scrn2Model, load_model, save_model
from .train import TrainConfig, multiclass_train, train_shl, train_thl

__all__ = [
    "CanonicalShl",
    "CanonicalThl",
    "ReluLayer",
    "Scrn1Model",
    "Scrn2Model",
    "TrainConfig",
    "build_shl_multiclass",
    "build_shl_separator",
    "build_thl_multiclass",
    "build_thl_separator",
    "full_drill_down",
    "greedy_convex_cover",
    "hull_distance",
    "hulls_distance",
    "is_convexly_separable",
    "is_linearly_separable",
    "is_mutually_convexly_separable",
    "load_model",
    "multiclass_train",
    "save_model",
    "shl_decompose",
    "thl_decompose",
    "train_shl",
    "train_thl",
]

__version__ = "0.1.0"

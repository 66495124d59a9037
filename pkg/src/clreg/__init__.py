"""Sparse linear regression by minimum description length."""

from .data import FeatureProductSpec, RawDataset, SimSpec, estimate_delta_y, generate_sim, load_csv, split
from .estimator import CLRRegressor, FeatureProduct
from .intcode import decode_u, encode_u, encode_un, length_u, length_un
from .objective import DesignMatrix, clr_objective, exact_description_length
from .optimize import CLRModel, OptimizerConfig, fit_clr
from .ratcode import DEFAULT_CONSTANTS, alpha_decode, alpha_encode, alpha_len, alpha_smooth
from .sphere import CapacityError, h_bar, lattice_count, spiral_rank, spiral_unrank

__version__ = "0.1.0"

__all__ = [
    "CLRModel", "CLRRegressor", "CapacityError", "DEFAULT_CONSTANTS", "DesignMatrix", "FeatureProduct",
    "FeatureProductSpec", "OptimizerConfig", "RawDataset", "SimSpec", "alpha_decode", "alpha_encode",
    "alpha_len", "alpha_smooth", "clr_objective", "decode_u", "encode_u", "encode_un",
    "estimate_delta_y", "exact_description_length", "fit_clr", "generate_sim", "h_bar",
    "lattice_count", "length_u", "length_un", "load_csv", "spiral_rank", "spiral_unrank", "split",
]

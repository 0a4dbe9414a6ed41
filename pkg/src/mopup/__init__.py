"""Mode-wise principal subspace pursuit (MOP-UP) for matrix and tensor samples."""

__version__ = "0.1.0"

from .linalg import (Subspace, fold, kronecker, mode_product, orthonormal_complement,
                     project_out, sin_theta, top_eigenvectors, top_left_singular_vectors,
                     unfold)
from .model import (MatrixModelParams, MatrixSampleSet, NoiseSpec, TensorModelParams,
                    TensorSampleSet, covariance_residual, random_subspace, sample_matrix_set,
                    sample_tensor_set)
from .matrix import (ApOptions, FitResult, RankSelection, ap_fit, asc_init, denoise, fit_mopup,
                     objective, scree_table, select_rank)
from .tensor import TensorFitResult, ap_fit_tensor, hosvd_init
from .baselines import hooi_mpca_fit, hosvd_matrix_init

__all__ = [
    "Subspace", "fold", "kronecker", "mode_product", "orthonormal_complement", "project_out",
    "sin_theta", "top_eigenvectors", "top_left_singular_vectors", "unfold",
    "MatrixModelParams", "MatrixSampleSet", "NoiseSpec", "TensorModelParams", "TensorSampleSet",
    "covariance_residual", "random_subspace", "sample_matrix_set", "sample_tensor_set",
    "ApOptions", "FitResult", "RankSelection", "ap_fit", "asc_init", "denoise", "fit_mopup",
    "objective", "scree_table", "select_rank",
    "TensorFitResult", "ap_fit_tensor", "hosvd_init",
    "hooi_mpca_fit", "hosvd_matrix_init",
]

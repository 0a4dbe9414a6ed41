"""Comparison estimators: HOSVD initialization and the MPCA/HOOI iteration.

MPCA fits the core-only model ``X_i = U S_i V^T + Z_i``; its HOOI-style
update projects onto ``span(V)`` where AP projects onto the complement.
Both share :func:`mopup.matrix._alternate`, so stopping rules and traces
are directly comparable.
"""

import numpy as np

from .linalg import top_left_singular_vectors
from .matrix import _alternate, _check_ranks, as_sample_set


def hosvd_matrix_init(samples, r1, r2):
    """Top singular subspaces of ``[X_1 ... X_n]`` and ``[X_1^T ... X_n^T]`` after centering."""
    s = as_sample_set(samples)
    p1, p2 = s.shape
    _check_ranks(p1, p2, r1, r2)
    xc = s.centered()
    wide_u = np.concatenate(list(xc), axis=1)
    wide_v = np.concatenate(list(xc.transpose(0, 2, 1)), axis=1)
    return top_left_singular_vectors(wide_u, r1), top_left_singular_vectors(wide_v, r2)


def hooi_mpca_fit(samples, r1, r2, init=None, opts=None):
    """MPCA via HOOI: ``U <- Eigen_r1(sum_i X_i P_V X_i^T)`` and symmetrically for ``V``.

    Initialized with :func:`hosvd_matrix_init` unless ``init`` is given.
    ``objective_trace`` holds the MPCA residual ``sum_i ||X_i - P_U X_i P_V||_F^2``.
    """
    s = as_sample_set(samples)
    if init is None:
        init = hosvd_matrix_init(s, r1, r2)
    return _alternate(s, r1, r2, init, opts, complement=False)

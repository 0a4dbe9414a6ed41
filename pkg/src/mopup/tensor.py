"""Alternating projection for order-d tensor samples, with HOSVD start."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .linalg import Subspace, sin_theta, top_eigenvectors
from .matrix import ApOptions
from .model import TensorSampleSet


@dataclass(frozen=True)
class TensorFitResult:
    loadings: Tuple[Subspace, ...]
    iterations_run: int
    converged: bool
    step_trace: List[float] = field(default_factory=list)


def as_tensor_set(samples):
    if isinstance(samples, TensorSampleSet):
        return samples
    return TensorSampleSet(samples)


def _check_ranks(dims, ranks):
    if len(ranks) != len(dims):
        raise ValueError(f"got {len(ranks)} ranks for an order-{len(dims)} tensor")
    for k, (p, r) in enumerate(zip(dims, ranks)):
        if not 1 <= r < p:
            raise ValueError(f"rank of mode {k} must satisfy 1 <= r < {p}, got {r}")


def mode_gram(x, mode):
    """``sum_i M_k(X_i) M_k(X_i)^T`` for a stacked batch, without unfolding.

    The Gram matrix does not depend on the column order of the unfolding, so
    a single tensordot over every other axis suffices.
    """
    axes = [a for a in range(x.ndim) if a != mode + 1]
    return np.tensordot(x, x, axes=(axes, axes))


def hosvd_init(samples, ranks):
    """Per-mode top-``r_k`` left singular subspace of the concatenated unfoldings.

    Computed from the accumulated Gram matrix of the centered samples, which
    has the same leading eigenspace as the concatenation's left singular
    subspace.
    """
    s = as_tensor_set(samples)
    _check_ranks(s.dims, ranks)
    xc = s.centered()
    return [top_eigenvectors(mode_gram(xc, k), r) for k, r in enumerate(ranks)]


def _project_complements(xc, loadings, skip):
    """Apply ``U_k_perp^T`` along every mode ``k != skip`` of the batch."""
    y = xc
    for k, u in enumerate(loadings):
        if k == skip:
            continue
        comp = u.complement().basis
        y = np.moveaxis(np.tensordot(comp.T, y, axes=(1, k + 1)), 0, k + 1)
    return y


def ap_fit_tensor(samples, ranks, init=None, opts=None):
    """Order-d alternating projection.

    Each sweep updates every mode ``j`` (in ascending order) to the top
    ``r_j`` eigenspace of ``sum_i M_j(Y_i) M_j(Y_i)^T`` where ``Y_i`` is the
    centered sample with ``U_k_perp^T`` applied along all other modes.  All
    complements within a sweep come from the previous sweep.  Only
    ``opts.max_iter`` and ``opts.tol`` are used.
    """
    s = as_tensor_set(samples)
    if s.order < 3:
        raise ValueError("ap_fit_tensor needs order >= 3; use mopup.matrix.ap_fit for matrices")
    ranks = tuple(int(r) for r in ranks)
    _check_ranks(s.dims, ranks)
    opts = opts or ApOptions()
    if init is None:
        init = hosvd_init(s, ranks)
    loads = list(init)
    if len(loads) != s.order:
        raise ValueError(f"init has {len(loads)} loadings for order-{s.order} data")
    for k, (u, p, r) in enumerate(zip(loads, s.dims, ranks)):
        if u.ambient_dim != p or u.rank != r:
            raise ValueError(f"init loading {k} has shape ({u.ambient_dim}, {u.rank}), expected ({p}, {r})")

    xc = s.centered()
    steps = []
    converged = False
    t = 0
    while t < opts.max_iter:
        t += 1
        new = []
        for j in range(s.order):
            y = _project_complements(xc, loads, skip=j)
            new.append(top_eigenvectors(mode_gram(y, j), ranks[j]))
        step = max(sin_theta(a, b) for a, b in zip(new, loads))
        loads = new
        steps.append(step)
        if step <= opts.tol:
            converged = True
            break
    return TensorFitResult(tuple(loads), t, converged, steps)


def tensor_objective(samples, loadings):
    """``sum_i ||X_i x_1 U_1_perp^T ... x_d U_d_perp^T||_F^2`` on centered data."""
    s = as_tensor_set(samples)
    y = _project_complements(s.centered(), loadings, skip=-1)
    return float(np.sum(y * y))

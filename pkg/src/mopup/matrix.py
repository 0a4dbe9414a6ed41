"""Mode-wise principal subspace pursuit for collections of matrices.

The pipeline is Average Subspace Capture (:func:`asc_init`) followed by
Alternating Projection (:func:`ap_fit`).  Given loadings ``(U, V)`` the
observations are denoised by removing the ``U_perp``/``V_perp`` block
(:func:`denoise`), and ranks are picked with a BIC-type criterion
(:func:`select_rank`).
"""

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .linalg import Subspace, sin_theta, top_eigenvectors
from .model import MatrixSampleSet

UPDATE_ORDERS = ("paper_jacobi", "gauss_seidel")
BIC_LOSS_FLOOR = 1e-300
# losses below this fraction of the centered energy are rounding residue
BIC_REL_FLOOR = 1e-24


@dataclass(frozen=True)
class ApOptions:
    """Iteration controls shared by :func:`ap_fit` and the baselines.

    ``paper_jacobi`` builds both updates of iteration ``t`` from the
    iteration ``t - 1`` estimates.  ``gauss_seidel`` builds the ``U`` update
    from the freshly computed ``V``, which makes the objective monotone.
    """

    max_iter: int = 100
    tol: float = 1e-8
    update_order: str = "paper_jacobi"
    record_trace: bool = True

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.update_order not in UPDATE_ORDERS:
            raise ValueError(f"update_order must be one of {UPDATE_ORDERS}, got {self.update_order!r}")


@dataclass(frozen=True)
class FitResult:
    u_hat: Subspace
    v_hat: Subspace
    iterations_run: int
    converged: bool
    objective_trace: List[float] = field(default_factory=list)
    step_trace: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class RankSelection:
    grid: List[Tuple[int, int]]
    losses: List[float]
    bic_scores: List[float]
    chosen: Tuple[int, int]


def as_sample_set(samples):
    if isinstance(samples, MatrixSampleSet):
        return samples
    return MatrixSampleSet(samples)


def _complement_apply(x, u):
    """``P_{U_perp} X_i`` for a stacked batch ``x`` of shape ``(n, p1, p2)``."""
    b = u.basis
    return x - np.matmul(b, np.matmul(b.T, x))


def _complement_apply_right(x, v):
    """``X_i P_{V_perp}`` for a stacked batch."""
    b = v.basis
    return x - np.matmul(np.matmul(x, b), b.T)


def _gram_left(y):
    """``sum_i Y_i Y_i^T``, reduced in a fixed order."""
    return np.tensordot(y, y, axes=([0, 2], [0, 2]))


def _gram_right(y):
    """``sum_i Y_i^T Y_i``."""
    return np.tensordot(y, y, axes=([0, 1], [0, 1]))


def _check_ranks(p1, p2, r1, r2):
    if not 1 <= r1 < p1:
        raise ValueError(f"r1 must satisfy 1 <= r1 < p1={p1}, got {r1}")
    if not 1 <= r2 < p2:
        raise ValueError(f"r2 must satisfy 1 <= r2 < p2={p2}, got {r2}")


def _asc_side(xc, r, k):
    """Top-``r`` eigenspace of the averaged rank-``k`` sample projectors."""
    n, p, q = xc.shape
    k = min(k, q)
    acc = np.zeros((p, p))
    us, _, _ = np.linalg.svd(xc, full_matrices=False)
    for i in range(n):
        qi = us[i, :, :k]
        acc += qi @ qi.T
    return top_eigenvectors(acc / n, r)


def asc_init(samples, r1, r2):
    """Average Subspace Capture initialization.

    After centering, ``U`` is the top-``r1`` eigenspace of the average of the
    projectors onto the top ``r1 + r2`` left singular vectors of each
    sample; ``V`` is the same construction on the transposes.  If
    ``r1 + r2 >= p1`` the full identity basis of ``R^p1`` is returned for
    ``U`` (and likewise for ``V``).

    In the noiseless model with ``p2 >= r1 + r2`` and
    ``n r2 <= (n - 1)(p1 - r1)`` this recovers ``span(U)`` exactly.
    """
    s = as_sample_set(samples)
    p1, p2 = s.shape
    _check_ranks(p1, p2, r1, r2)
    xc = s.centered()
    k = r1 + r2
    u = _asc_side(xc, r1, k) if k < p1 else Subspace.identity(p1)
    v = _asc_side(xc.transpose(0, 2, 1), r2, k) if k < p2 else Subspace.identity(p2)
    return u, v


def objective(samples, u, v):
    """``sum_i ||U_perp^T (X_i - Xbar) V_perp||_F^2``."""
    s = as_sample_set(samples)
    _check_dims(s, u, v)
    y = _complement_apply_right(_complement_apply(s.centered(), u), v)
    return float(np.sum(y * y))


def _check_dims(s, u, v):
    p1, p2 = s.shape
    if u.ambient_dim != p1 or v.ambient_dim != p2:
        raise ValueError(
            f"loadings live in R^{u.ambient_dim} x R^{v.ambient_dim}, samples are {p1} x {p2}")


def _check_init(s, r1, r2, init):
    p1, p2 = s.shape
    _check_ranks(p1, p2, r1, r2)
    u0, v0 = init
    _check_dims(s, u0, v0)
    # a full-space init (ASC's else branch) is accepted; its complement is empty
    if u0.rank not in (r1, p1) or v0.rank not in (r2, p2):
        raise ValueError(
            f"init ranks ({u0.rank}, {v0.rank}) do not match target ranks ({r1}, {r2})")
    return u0, v0


def _alternate(s, r1, r2, init, opts, complement):
    """Shared loop for AP (``complement=True``) and MPCA/HOOI (``False``)."""
    opts = opts or ApOptions()
    u, v = _check_init(s, r1, r2, init)
    xc = s.centered()

    if complement:
        def v_gram(u_):
            return _gram_right(_complement_apply(xc, u_))

        def u_gram(v_):
            return _gram_left(_complement_apply_right(xc, v_))

        def loss(u_, v_):
            y = _complement_apply_right(_complement_apply(xc, u_), v_)
            return float(np.sum(y * y))
    else:
        def v_gram(u_):
            return _gram_right(np.matmul(u_.basis.T, xc))

        def u_gram(v_):
            return _gram_left(np.matmul(xc, v_.basis))

        def loss(u_, v_):
            core = np.matmul(np.matmul(u_.basis.T, xc), v_.basis)
            return float(np.sum(xc * xc) - np.sum(core * core))

    obj_trace, step_trace = [], []
    if opts.record_trace and u.rank == r1 and v.rank == r2:
        obj_trace.append(loss(u, v))
    converged = False
    t = 0
    while t < opts.max_iter:
        t += 1
        v_new = top_eigenvectors(v_gram(u), r2)
        v_src = v_new if opts.update_order == "gauss_seidel" else v
        u_new = top_eigenvectors(u_gram(v_src), r1)
        if u.rank == r1 and v.rank == r2:
            step = max(sin_theta(u_new, u), sin_theta(v_new, v))
        else:
            step = 1.0
        u, v = u_new, v_new
        step_trace.append(step)
        if opts.record_trace:
            obj_trace.append(loss(u, v))
        if step <= opts.tol:
            converged = True
            break
    return FitResult(u, v, t, converged, obj_trace, step_trace)


def ap_fit(samples, r1, r2, init=None, opts=None):
    """Alternating Projection.

    Iterates ``V <- Eigen_r2(sum_i X_i^T P_{U_perp} X_i)`` and
    ``U <- Eigen_r1(sum_i X_i P_{V_perp} X_i^T)`` on centered data until the
    largest per-mode sin-theta step is at most ``opts.tol`` or
    ``opts.max_iter`` iterations have run.

    Parameters
    ----------
    samples : MatrixSampleSet or array_like, shape (n, p1, p2)
    r1, r2 : int
        Target ranks.
    init : (Subspace, Subspace), optional
        Starting loadings; defaults to :func:`asc_init`.
    opts : ApOptions, optional

    Returns
    -------
    FitResult
        ``objective_trace[0]`` is the objective at ``init`` and entry ``t``
        the objective after iteration ``t``.
    """
    s = as_sample_set(samples)
    if init is None:
        init = asc_init(s, r1, r2)
    return _alternate(s, r1, r2, init, opts, complement=True)


def fit_mopup(samples, r1, r2, opts=None):
    """ASC initialization followed by AP."""
    s = as_sample_set(samples)
    return ap_fit(s, r1, r2, asc_init(s, r1, r2), opts)


def denoise(samples, u, v):
    """``X_i - P_{U_perp} (X_i - Xbar) P_{V_perp}`` for every sample.

    Returns an array of shape ``(n, p1, p2)``.
    """
    s = as_sample_set(samples)
    _check_dims(s, u, v)
    resid = _complement_apply_right(_complement_apply(s.centered(), u), v)
    return s.samples - resid


def bic_penalty(n, p1, p2, r1, r2):
    """Penalty term of the BIC rank criterion."""
    npp = n * p1 * p2
    return math.log(npp) / (2.0 * npp) * (r1 * (2 * p1 - r1 - 1) + r2 * (2 * p2 - r2 - 1))


def bic_score(loss, n, p1, p2, r1, r2, floor=BIC_LOSS_FLOOR):
    """``log(max(loss, floor))`` plus :func:`bic_penalty`."""
    return math.log(max(loss, floor)) + bic_penalty(n, p1, p2, r1, r2)


def scree_table(samples, grid, opts=None):
    """Complement-block loss of an ASC + AP fit for each ``(r1, r2)`` in ``grid``."""
    s = as_sample_set(samples)
    losses = []
    for r1, r2 in grid:
        fit = fit_mopup(s, r1, r2, opts)
        losses.append(objective(s, fit.u_hat, fit.v_hat))
    return losses


def select_rank(samples, r1_max, r2_max, opts=None, r1_min=1, r2_min=1):
    """BIC rank selection over the grid ``r1_min..r1_max x r2_min..r2_max``.

    Losses are floored at ``max(1e-300, 1e-24 * sum_i ||X_i - Xbar||_F^2)``
    so that exactly-fitting candidates tie instead of being ranked by
    rounding error.  Ties in the score go to the smallest ``r1 + r2``, then
    the smallest ``r1``.
    """
    s = as_sample_set(samples)
    p1, p2 = s.shape
    grid = [(a, b) for a in range(r1_min, r1_max + 1) for b in range(r2_min, r2_max + 1)]
    if not grid:
        raise ValueError("rank grid is empty")
    for a, b in grid:
        _check_ranks(p1, p2, a, b)
    losses = scree_table(s, grid, opts)
    xc = s.centered()
    floor = max(BIC_LOSS_FLOOR, BIC_REL_FLOOR * float(np.sum(xc * xc)))
    scores = [bic_score(l, s.n, p1, p2, a, b, floor) for l, (a, b) in zip(losses, grid)]
    best = min(range(len(grid)), key=lambda j: (scores[j], sum(grid[j]), grid[j][0]))
    return RankSelection(grid, losses, scores, grid[best])

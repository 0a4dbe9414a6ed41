"""Independent checks of the theory behind MOP-UP.

* :func:`common_column_space` computes ``cap_i span(X_i)`` directly, the set
  ASC should recover exactly in the noiseless model.
* :func:`check_prop1_minimizer` / :func:`prop1_angular_sweep` confirm that the
  eigen-update of AP is the exact block minimizer of the objective.
* :func:`check_perturbation_bound` evaluates the blockwise eigenspace
  perturbation bound and :func:`check_davis_kahan_comparison` sets it next
  to the classical Davis-Kahan bound.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import (Subspace, _check_symmetric, eigh_desc, sin_theta, sin_theta_fro,
                     top_eigenvectors)
from .matrix import _complement_apply_right, as_sample_set, objective
from .model import derive_seed, make_rng, random_subspace

APPLICABLE_MIN_DENOM = 1e-12
BOUND_SLACK = 1e-10


def common_column_space(samples, tol=1e-10, center=True, null_tol=1e-6):
    """Intersection of the column spaces of all samples.

    Each sample's column space is taken at numerical rank (singular values
    above ``tol * sigma_1``).  The intersection is the null space of the
    stacked complement bases ``[C_1^T; ...; C_n^T]``, read off as the right
    singular vectors with singular value at most ``null_tol``.

    Returns a rank-0 :class:`Subspace` when the intersection is trivial.
    """
    if not 0 < tol < 0.5:
        raise ValueError(f"tol must lie in (0, 0.5), got {tol}")
    s = as_sample_set(samples)
    x = s.centered() if center else s.samples
    p1 = s.shape[0]
    blocks = []
    for xi in x:
        u, sv, _ = np.linalg.svd(xi, full_matrices=True)
        rank = int(np.sum(sv > tol * sv[0])) if sv.size and sv[0] > 0 else 0
        if rank < p1:
            blocks.append(u[:, rank:].T)
    if not blocks:
        return Subspace.identity(p1)
    stacked = np.vstack(blocks)
    _, sv, vt = np.linalg.svd(stacked, full_matrices=True)
    sv_full = np.zeros(p1)
    sv_full[:sv.size] = sv
    null = vt[sv_full <= null_tol].T
    return Subspace(null, check=False)


@dataclass(frozen=True)
class MinimizerReport:
    minimizer: Subspace
    objective_at_minimizer: float
    worst_margin: float
    trials: int

    @property
    def optimal(self):
        return self.worst_margin >= -BOUND_SLACK


def prop1_minimizer(samples, v_fixed, r1):
    """``Eigen_r1(sum_i (X_i - Xbar) P_{V_perp} (X_i - Xbar)^T)``."""
    s = as_sample_set(samples)
    y = _complement_apply_right(s.centered(), v_fixed)
    return top_eigenvectors(np.tensordot(y, y, axes=([0, 2], [0, 2])), r1)


def check_prop1_minimizer(samples, v_fixed, r1, trials, seed, extra_candidates=()):
    """Compare the closed-form ``U`` minimizer with Haar-random candidates.

    ``worst_margin`` is ``min over candidates of objective(cand) -
    objective(U*)``; it is non-negative when ``U*`` is a minimizer.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    s = as_sample_set(samples)
    p1 = s.shape[0]
    u_star = prop1_minimizer(s, v_fixed, r1)
    f_star = objective(s, u_star, v_fixed)
    margins = []
    for k in range(trials):
        cand = random_subspace(p1, r1, derive_seed(seed, k))
        margins.append(objective(s, cand, v_fixed) - f_star)
    for cand in extra_candidates:
        margins.append(objective(s, cand, v_fixed) - f_star)
    return MinimizerReport(u_star, f_star, float(min(margins)), len(margins))


def prop1_angular_sweep(samples, v_fixed, n_angles=360, planes=4, seed=0):
    """Worst margin of rank-1 candidates swept along great circles.

    One great circle passes through the minimizer ``u*``; the remaining
    ``planes - 1`` are spanned by random orthonormal pairs.  Each is sampled
    at ``n_angles`` equally spaced angles in ``[0, pi)``.
    """
    s = as_sample_set(samples)
    p1 = s.shape[0]
    u_star = prop1_minimizer(s, v_fixed, 1)
    f_star = objective(s, u_star, v_fixed)
    rng = make_rng(seed)
    worst = math.inf
    theta = np.arange(n_angles) * (math.pi / n_angles)
    for plane in range(planes):
        g = rng.standard_normal((p1, 2))
        if plane == 0:
            g[:, 0] = u_star.basis[:, 0]
        q, _ = np.linalg.qr(g)
        for th in theta:
            w = math.cos(th) * q[:, 0] + math.sin(th) * q[:, 1]
            cand = Subspace(w[:, None] / np.linalg.norm(w), check=False)
            worst = min(worst, objective(s, cand, v_fixed) - f_star)
    return float(worst)


@dataclass(frozen=True)
class BoundReport:
    """Measured sin-theta against the blockwise perturbation bounds.

    ``satisfied`` is ``None`` when the bound is not applicable.  The
    ``*_sharp`` fields refer to the second form whose denominator subtracts
    ``||P_U_perp Xhat P_U_perp|| + ||P_U Z P_U_perp||``; the ``*_fro`` fields
    to the Frobenius-norm variant (capped at ``sqrt(r)``).
    """

    lhs: float
    rhs: float
    applicable: bool
    satisfied: Optional[bool]
    rhs_sharp: float
    applicable_sharp: bool
    satisfied_sharp: Optional[bool]
    lhs_fro: float
    rhs_fro: float
    satisfied_fro: Optional[bool]


def _ratio(num, den, cap):
    if den <= APPLICABLE_MIN_DENOM:
        return cap, False
    return min(cap, num / den), True


def _verdict(lhs, rhs, applicable):
    return (lhs <= rhs + BOUND_SLACK) if applicable else None


def _eig_pair(x, z, r):
    x = _check_symmetric(x, "x")
    z = _check_symmetric(z, "z")
    if x.shape != z.shape:
        raise ValueError(f"x and z differ in shape: {x.shape} vs {z.shape}")
    p = x.shape[0]
    if not 1 <= r < p:
        raise ValueError(f"r must satisfy 1 <= r < {p}, got {r}")
    xhat = x + z
    wx, qx = eigh_desc(x)
    wh, qh = eigh_desc(xhat)
    return x, z, xhat, wx, qx, wh, qh


def check_perturbation_bound(x, z, r):
    """Evaluate both displayed blockwise bounds for ``U = Eigen_r(x)`` and
    ``Uhat = Eigen_r(x + z)``."""
    x, z, xhat, wx, qx, wh, qh = _eig_pair(x, z, r)
    u, u_perp = qx[:, :r], qx[:, r:]
    uhat = qh[:, :r]
    su, suh = Subspace(u, check=False), Subspace(uhat, check=False)
    lhs = sin_theta(su, suh)
    lhs_fro = sin_theta_fro(su, suh)

    off = u.T @ z @ u_perp
    num = np.linalg.norm(off, 2)
    num_fro = np.linalg.norm(off)
    lam_r_block = np.linalg.eigvalsh(u.T @ xhat @ u)[::-1][r - 1]
    den = lam_r_block - wh[r]
    rhs, applicable = _ratio(num, den, 1.0)
    rhs_fro, _ = _ratio(num_fro, den, math.sqrt(r))

    perp_norm = np.linalg.norm(u_perp.T @ xhat @ u_perp, 2)
    den_sharp = lam_r_block - perp_norm - num
    rhs_sharp, applicable_sharp = _ratio(num, den_sharp, 1.0)

    return BoundReport(
        lhs=lhs, rhs=float(rhs), applicable=applicable,
        satisfied=_verdict(lhs, rhs, applicable),
        rhs_sharp=float(rhs_sharp), applicable_sharp=applicable_sharp,
        satisfied_sharp=_verdict(lhs, rhs_sharp, applicable_sharp),
        lhs_fro=lhs_fro, rhs_fro=float(rhs_fro),
        satisfied_fro=_verdict(lhs_fro, rhs_fro, applicable),
    )


@dataclass(frozen=True)
class BoundComparison:
    blockwise: BoundReport
    davis_kahan: float
    davis_kahan_applicable: bool
    tighter: str  # "blockwise", "davis_kahan" or "tie"


def davis_kahan_bound(x, z, r):
    """``||Z|| / min(|lambda_{r-1}(Xhat) - lambda_r(X)|, |lambda_{r+1}(Xhat) - lambda_r(X)|)``, capped at 1.

    With ``r = 1`` the ``lambda_0`` term is dropped.
    """
    x, z, xhat, wx, _, wh, _ = _eig_pair(x, z, r)
    gaps = [abs(wh[r] - wx[r - 1])]
    if r >= 2:
        gaps.append(abs(wh[r - 2] - wx[r - 1]))
    rhs, applicable = _ratio(np.linalg.norm(z, 2), min(gaps), 1.0)
    return float(rhs), applicable


def check_davis_kahan_comparison(x, z, r):
    """Blockwise and Davis-Kahan bounds side by side; records which is tighter."""
    block = check_perturbation_bound(x, z, r)
    dk, dk_ok = davis_kahan_bound(x, z, r)
    if not (block.applicable and dk_ok):
        tighter = "tie" if block.applicable == dk_ok else ("blockwise" if block.applicable else "davis_kahan")
    elif abs(block.rhs - dk) <= BOUND_SLACK:
        tighter = "tie"
    else:
        tighter = "blockwise" if block.rhs < dk else "davis_kahan"
    return BoundComparison(block, dk, dk_ok, tighter)


def random_bound_instance(p, r, seed, z_scale):
    """Symmetric ``(X, Z)`` with a random spectrum and a symmetric Gaussian ``Z``
    of spectral norm ``z_scale`` times the ``r``-th eigengap of ``X``."""
    rng = make_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eig = np.sort(rng.uniform(-1.0, 1.0, p))[::-1]
    eig[:r] += rng.uniform(0.2, 2.0)
    x = (q * eig) @ q.T
    x = 0.5 * (x + x.T)
    g = rng.standard_normal((p, p))
    z = g + g.T
    gap = eig[r - 1] - eig[r]
    z *= z_scale * gap / np.linalg.norm(z, 2)
    return x, z

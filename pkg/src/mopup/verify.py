"""Seeded oracle suites behind ``mopup verify``.

Each suite returns ``(check name, passed, detail)`` tuples.
"""

import numpy as np

from .linalg import sin_theta
from .matrix import asc_init
from .model import (MatrixModelParams, MatrixSampleSet, NoiseSpec, derive_seed, random_subspace,
                    sample_matrix_set)
from .oracles import (BOUND_SLACK, check_perturbation_bound, check_prop1_minimizer,
                      common_column_space, prop1_angular_sweep, random_bound_instance)

RECOVERY_TOL = 1e-8


def noiseless_fixture(p, seed, r1=2, r2=2, n=5):
    """Noiseless spiked data satisfying the exact-recovery conditions, with a nonzero mean."""
    mean = np.full((p, p), 0.5)
    params = MatrixModelParams.random(p, p, r1, r2, derive_seed(seed, 0), mean=mean)
    return params, sample_matrix_set(params, n, derive_seed(seed, 1))


def rank_one_fixture(p, seed, n=5, b_scale=1.0):
    """Noiseless ``X_i = u a_i^T + b_i v^T`` with Gaussian ``b_i`` not aligned with ``u``.

    ``span(u)`` is then not the top left singular space of the concatenated
    samples, so HOSVD is biased while ASC is exact.
    """
    params = MatrixModelParams.random(p, p, 1, 1, derive_seed(seed, 0), score_dist="gaussian_std")
    rng = np.random.Generator(np.random.Philox(derive_seed(seed, 1)))
    u, v = params.u.basis, params.v.basis
    a = rng.standard_normal((n, 1, p))
    b = b_scale * rng.standard_normal((n, p, 1))
    return params, MatrixSampleSet(np.matmul(u, a) + np.matmul(b, v.T))


def recovery_suite(instances=50, seed=0, dims=(8, 20)):
    """Worst ASC error and worst ASC-vs-intersection distance over the fixtures."""
    worst_asc = worst_cap = 0.0
    rank_ok = True
    for k in range(instances):
        p = dims[k % len(dims)]
        params, s = noiseless_fixture(p, derive_seed(seed, k))
        u, v = asc_init(s, 2, 2)
        worst_asc = max(worst_asc, sin_theta(u, params.u), sin_theta(v, params.v))
        cap = common_column_space(s)
        if cap.rank != u.rank:
            rank_ok = False
            continue
        worst_cap = max(worst_cap, sin_theta(cap, u))
    return [
        ("asc_exact_recovery", worst_asc <= RECOVERY_TOL, f"worst sin-theta {worst_asc:.3e}"),
        ("intersection_agreement", rank_ok and worst_cap <= RECOVERY_TOL,
         f"worst sin-theta {worst_cap:.3e}" if rank_ok else "intersection rank mismatch"),
    ]


def minimizer_suite(instances=50, trials=200, seed=0):
    """Random-candidate and angular-sweep margins of the closed-form U update."""
    worst = np.inf
    worst_sweep = np.inf
    for k in range(instances):
        s_seed = derive_seed(seed, k)
        r1 = 1 + k % 3
        p1, p2, r2 = 6, 5, 1 + k % 2
        params = MatrixModelParams.random(p1, p2, r1, r2, derive_seed(s_seed, 0),
                                          noise=NoiseSpec("gaussian", 0.3))
        s = sample_matrix_set(params, 4, derive_seed(s_seed, 1))
        v_fixed = random_subspace(p2, r2, derive_seed(s_seed, 2))
        rep = check_prop1_minimizer(s, v_fixed, r1, trials, derive_seed(s_seed, 3))
        worst = min(worst, rep.worst_margin)
        if r1 == 1:
            worst_sweep = min(worst_sweep, prop1_angular_sweep(s, v_fixed, seed=derive_seed(s_seed, 4)))
    return [
        ("prop1_random_candidates", worst >= -BOUND_SLACK, f"worst margin {worst:.3e}"),
        ("prop1_angular_sweep", worst_sweep >= -BOUND_SLACK, f"worst margin {worst_sweep:.3e}"),
    ]


def bound_pairs(count=1000, seed=0, sizes=(5, 30)):
    """Seeded symmetric ``(X, Z, r)`` triples spanning sizes and perturbation levels."""
    lo, hi = sizes
    for k in range(count):
        rng = np.random.Generator(np.random.Philox(derive_seed(seed, k)))
        p = int(rng.integers(lo, hi + 1))
        r = int(rng.integers(1, p))
        z_scale = float(10 ** rng.uniform(-3, 0.5))
        x, z = random_bound_instance(p, r, derive_seed(seed, k, 1), z_scale)
        yield x, z, r


def bounds_suite(count=1000, seed=0):
    applicable = violations = 0
    applicable_sharp = violations_sharp = violations_fro = 0
    for x, z, r in bound_pairs(count, seed):
        rep = check_perturbation_bound(x, z, r)
        if rep.applicable:
            applicable += 1
            violations += not rep.satisfied
            violations_fro += not rep.satisfied_fro
        if rep.applicable_sharp:
            applicable_sharp += 1
            violations_sharp += not rep.satisfied_sharp
    return [
        ("blockwise_bound", violations == 0,
         f"{violations} violations in {applicable} applicable cases"),
        ("blockwise_bound_sharp", violations_sharp == 0,
         f"{violations_sharp} violations in {applicable_sharp} applicable cases"),
        ("blockwise_bound_frobenius", violations_fro == 0,
         f"{violations_fro} violations in {applicable} applicable cases"),
    ]


def run_suites(which="all", instances=50, seed=0):
    out = []
    if which in ("recovery", "all"):
        out += recovery_suite(instances, seed)
    if which in ("minimizer", "all"):
        out += minimizer_suite(instances, seed=seed)
    if which in ("bounds", "all"):
        out += bounds_suite(seed=seed)
    return out

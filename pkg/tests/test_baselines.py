import numpy as np
import pytest

from mopup.baselines import hooi_mpca_fit, hosvd_matrix_init
from mopup.linalg import sin_theta
from mopup.matrix import ApOptions, MatrixSampleSet, asc_init, fit_mopup, objective
from mopup.model import (MatrixModelParams, NoiseSpec, derive_seed, random_subspace,
                         sample_matrix_set)
from mopup.verify import rank_one_fixture


def core_model(seed, p1=9, p2=7, r1=2, r2=3, n=6):
    u, v = random_subspace(p1, r1, derive_seed(seed, 0)), random_subspace(p2, r2, derive_seed(seed, 1))
    rng = np.random.default_rng(seed)
    core = rng.standard_normal((n, r1, r2))
    return u, v, MatrixSampleSet(u.basis @ core @ v.basis.T)


@pytest.mark.parametrize("seed", range(3))
def test_mpca_recovers_core_model(seed):
    u, v, s = core_model(seed)
    fit = hooi_mpca_fit(s, 2, 3, opts=ApOptions(max_iter=50))
    assert sin_theta(fit.u_hat, u) <= 1e-8
    assert sin_theta(fit.v_hat, v) <= 1e-8


def test_mpca_zero_iterations():
    _, _, s = core_model(0)
    init = (random_subspace(9, 2, 5), random_subspace(7, 3, 6))
    fit = hooi_mpca_fit(s, 2, 3, init, ApOptions(max_iter=0))
    np.testing.assert_array_equal(fit.u_hat.basis, init[0].basis)
    assert fit.iterations_run == 0 and not fit.converged


def test_mpca_objective_trace_is_core_residual():
    params = MatrixModelParams.random(8, 7, 2, 2, 0, noise=NoiseSpec("gaussian", 0.2))
    s = sample_matrix_set(params, 5, 1)
    fit = hooi_mpca_fit(s, 2, 2, opts=ApOptions(max_iter=3, tol=1e-14))
    xc = s.centered()
    pu, pv = fit.u_hat.projector(), fit.v_hat.projector()
    direct = float(np.sum((xc - pu @ xc @ pv) ** 2))
    assert fit.objective_trace[-1] == pytest.approx(direct, rel=1e-10)
    tr = fit.objective_trace
    assert all(b <= a + 1e-10 for a, b in zip(tr, tr[1:]))


def test_mopup_beats_mpca_on_spiked_data():
    wins = 0
    for seed in range(20):
        params = MatrixModelParams.random(20, 15, 3, 3, derive_seed(seed, 0),
                                          noise=NoiseSpec("gaussian", 0.1))
        s = sample_matrix_set(params, 30, derive_seed(seed, 1))
        opts = ApOptions(max_iter=10)
        ours = fit_mopup(s, 3, 3, opts)
        theirs = hooi_mpca_fit(s, 3, 3, opts=opts)
        wins += objective(s, ours.u_hat, ours.v_hat) < objective(s, theirs.u_hat, theirs.v_hat)
    assert wins >= 18


class TestHosvdMatrix:
    @pytest.mark.parametrize("seed", range(5))
    def test_rank_one_structural_failure(self, seed):
        params, s = rank_one_fixture(10, seed)
        h, _ = hosvd_matrix_init(s, 1, 1)
        a, _ = asc_init(s, 1, 1)
        assert sin_theta(h, params.u) > 0.05
        assert sin_theta(a, params.u) <= 1e-8

    def test_single_mode_data_recovered(self):
        u = random_subspace(8, 2, 0)
        rng = np.random.default_rng(1)
        s = MatrixSampleSet(u.basis @ rng.standard_normal((5, 2, 6)))
        h, _ = hosvd_matrix_init(s, 2, 2)
        assert sin_theta(h, u) <= 1e-8

    def test_sample_permutation(self):
        params = MatrixModelParams.random(8, 7, 2, 2, 3, noise=NoiseSpec("gaussian", 0.1))
        s = sample_matrix_set(params, 6, 4)
        a = hosvd_matrix_init(s, 2, 2)
        b = hosvd_matrix_init(MatrixSampleSet(s.samples[[2, 5, 0, 1, 4, 3]]), 2, 2)
        assert sin_theta(a[0], b[0]) <= 1e-10 and sin_theta(a[1], b[1]) <= 1e-10

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hosvd_matrix_init(np.zeros((0, 3, 3)), 1, 1)

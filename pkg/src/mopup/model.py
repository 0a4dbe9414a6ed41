"""Synthetic data from the matrix and order-d spiked covariance models.

A matrix sample is ``X_i = M + U A_i + B_i V^T + Z_i``; an order-d sample is
``X_i = sum_k A_k x_k U_k + Z_i``.  All randomness comes from numpy's
counter-based Philox generator.  Each role (one score stream per mode, one
noise stream) gets its own ``SeedSequence`` child keyed by the role, so
switching the noise family never changes the score draws for a given seed.
Reproducibility is promised within one numpy version only.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg import Subspace, as_matrix, as_tensor, kronecker, mode_product

NOISE_FAMILIES = ("none", "uniform", "gaussian", "student_t3")
SCORE_DISTS = ("uniform_pm1", "gaussian_std")

_SCORE_ROLE = 0
_NOISE_ROLE = 1


def make_rng(seed, *key):
    """Philox generator for ``seed`` on the sub-stream identified by ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key):
    """Deterministic 63-bit child seed of ``seed`` for the sub-stream ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return ((int(hi) << 32) | int(lo)) & ((1 << 63) - 1)


@dataclass(frozen=True)
class NoiseSpec:
    """Entrywise noise: ``uniform`` on (-R, R), ``gaussian`` with variance
    ``R**2``, or ``R`` times a Student-t variate with 3 degrees of freedom."""

    family: str = "none"
    scale: float = 0.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise ValueError(f"noise scale must be finite and >= 0, got {self.scale}")

    def draw(self, rng, shape):
        r = 0.0 if self.family == "none" else float(self.scale)
        if self.family == "none" or r == 0.0:
            return np.zeros(shape)
        if self.family == "uniform":
            return rng.uniform(-r, r, size=shape)
        if self.family == "gaussian":
            return r * rng.standard_normal(shape)
        g = rng.standard_normal(shape)
        chi2 = rng.chisquare(3, size=shape)
        return r * g / np.sqrt(chi2 / 3.0)


def _draw_scores(rng, dist, scale, shape):
    if dist == "uniform_pm1":
        s = rng.uniform(-1.0, 1.0, size=shape)
    elif dist == "gaussian_std":
        s = rng.standard_normal(shape)
    else:
        raise ValueError(f"unknown score distribution {dist!r}; expected one of {SCORE_DISTS}")
    return s * scale if scale != 1.0 else s


def random_subspace(p, r, seed):
    """Haar-distributed ``r``-dimensional subspace of ``R^p``.

    Orthonormalizes a ``p x r`` standard Gaussian draw; the sign fix on
    ``diag(R)`` makes the basis itself Haar on the Stiefel manifold.
    """
    if not 1 <= r < p:
        raise ValueError(f"need 1 <= r < p, got p={p}, r={r}")
    g = make_rng(seed).standard_normal((p, r))
    q, rr = np.linalg.qr(g)
    q = q * np.where(np.diag(rr) < 0, -1.0, 1.0)
    return Subspace(q, check=False)


def _check_loading(u, name):
    if not isinstance(u, Subspace):
        u = Subspace(u)
    if not 1 <= u.rank < u.ambient_dim:
        raise ValueError(f"{name} must satisfy 1 <= rank < ambient_dim, got {u!r}")
    return u


@dataclass(frozen=True)
class MatrixModelParams:
    u: Subspace
    v: Subspace
    mean: Optional[np.ndarray] = None
    score_dist: str = "uniform_pm1"
    score_scale: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        object.__setattr__(self, "u", _check_loading(self.u, "u"))
        object.__setattr__(self, "v", _check_loading(self.v, "v"))
        if self.score_dist not in SCORE_DISTS:
            raise ValueError(f"unknown score distribution {self.score_dist!r}")
        shape = (self.p1, self.p2)
        mean = np.zeros(shape) if self.mean is None else as_matrix(self.mean, "mean")
        if mean.shape != shape:
            raise ValueError(f"mean has shape {mean.shape}, expected {shape}")
        object.__setattr__(self, "mean", mean)

    @property
    def p1(self):
        return self.u.ambient_dim

    @property
    def p2(self):
        return self.v.ambient_dim

    @property
    def r1(self):
        return self.u.rank

    @property
    def r2(self):
        return self.v.rank

    @classmethod
    def random(cls, p1, p2, r1, r2, seed, **kwargs):
        """Parameters with Haar loadings drawn from two sub-streams of ``seed``."""
        u = random_subspace(p1, r1, derive_seed(seed, 0))
        v = random_subspace(p2, r2, derive_seed(seed, 1))
        return cls(u, v, **kwargs)


@dataclass(frozen=True)
class MatrixTruth:
    params: MatrixModelParams
    a: np.ndarray  # (n, r1, p2)
    b: np.ndarray  # (n, p1, r2)
    z: np.ndarray  # (n, p1, p2)

    def signal(self):
        """``U A_i + B_i V^T`` for every sample, shape ``(n, p1, p2)``."""
        u, v = self.params.u.basis, self.params.v.basis
        return np.matmul(u, self.a) + np.matmul(self.b, v.T)


class MatrixSampleSet:
    """``n`` observations of shape ``p1 x p2`` stacked as an ``(n, p1, p2)`` array."""

    def __init__(self, samples, truth=None):
        x = np.asarray(samples, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3:
            raise ValueError(f"samples must have shape (n, p1, p2), got {x.shape}")
        if x.shape[0] < 1:
            raise ValueError("sample set is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain non-finite entries")
        x.setflags(write=False)
        self.samples = x
        self.mean_bar = x.mean(axis=0)
        self.truth = truth

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def shape(self):
        return self.samples.shape[1:]

    def centered(self):
        return self.samples - self.mean_bar

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"MatrixSampleSet(n={self.n}, p1={self.shape[0]}, p2={self.shape[1]})"


def sample_matrix_set(params, n, seed):
    """Draw ``n`` samples ``M + U A_i + B_i V^T + Z_i`` and keep the draws as truth."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p1, p2, r1, r2 = params.p1, params.p2, params.r1, params.r2
    a = _draw_scores(make_rng(seed, _SCORE_ROLE, 0), params.score_dist,
                     params.score_scale, (n, r1, p2))
    b = _draw_scores(make_rng(seed, _SCORE_ROLE, 1), params.score_dist,
                     params.score_scale, (n, p1, r2))
    z = params.noise.draw(make_rng(seed, _NOISE_ROLE), (n, p1, p2))
    truth = MatrixTruth(params, a, b, z)
    x = params.mean + truth.signal() + z
    return MatrixSampleSet(x, truth=truth)


@dataclass(frozen=True)
class TensorModelParams:
    loadings: tuple
    mean: Optional[np.ndarray] = None
    score_dist: str = "uniform_pm1"
    score_scale: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        loads = tuple(_check_loading(u, f"loading {k}") for k, u in enumerate(self.loadings))
        if len(loads) < 2:
            raise ValueError("need at least two modes")
        object.__setattr__(self, "loadings", loads)
        if self.score_dist not in SCORE_DISTS:
            raise ValueError(f"unknown score distribution {self.score_dist!r}")
        mean = np.zeros(self.dims) if self.mean is None else as_tensor(self.mean, "mean")
        if mean.shape != self.dims:
            raise ValueError(f"mean has shape {mean.shape}, expected {self.dims}")
        object.__setattr__(self, "mean", mean)

    @property
    def dims(self):
        return tuple(u.ambient_dim for u in self.loadings)

    @property
    def ranks(self):
        return tuple(u.rank for u in self.loadings)

    @classmethod
    def random(cls, dims: Sequence[int], ranks: Sequence[int], seed, **kwargs):
        if len(dims) != len(ranks):
            raise ValueError("dims and ranks differ in length")
        loads = tuple(random_subspace(p, r, derive_seed(seed, k))
                      for k, (p, r) in enumerate(zip(dims, ranks)))
        return cls(loads, **kwargs)


@dataclass(frozen=True)
class TensorTruth:
    params: TensorModelParams
    scores: tuple  # scores[k] has shape (n, p_1, ..., r_k, ..., p_d)
    z: np.ndarray

    def signal(self):
        out = 0.0
        for k, (s, u) in enumerate(zip(self.scores, self.params.loadings)):
            out = out + batch_mode_product(s, u.basis, k)
        return out


class TensorSampleSet:
    """``n`` order-d observations stacked as an ``(n, p_1, ..., p_d)`` array."""

    def __init__(self, samples, truth=None):
        x = np.asarray(samples, dtype=np.float64)
        if x.ndim < 3:
            raise ValueError(f"samples must have shape (n, p_1, ..., p_d) with d >= 2, got {x.shape}")
        if x.shape[0] < 1:
            raise ValueError("sample set is empty")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain non-finite entries")
        x.setflags(write=False)
        self.samples = x
        self.mean_bar = x.mean(axis=0)
        self.truth = truth

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def dims(self):
        return self.samples.shape[1:]

    @property
    def order(self):
        return self.samples.ndim - 1

    def centered(self):
        return self.samples - self.mean_bar

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"TensorSampleSet(n={self.n}, dims={self.dims})"


def batch_mode_product(x, b, mode):
    """Mode product applied to every tensor of a stacked ``(n, ...)`` batch."""
    return mode_product(x, b, mode + 1)


def sample_tensor_set(params, n, seed):
    """Draw ``n`` samples ``M + sum_k A_k x_k U_k + Z``.

    Score tensors are drawn on the same sub-streams as the matrix generator
    (mode k on score stream k), so with d = 2 the two generators coincide.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    dims, ranks = params.dims, params.ranks
    scores = []
    for k in range(len(dims)):
        shape = (n,) + dims[:k] + (ranks[k],) + dims[k + 1:]
        scores.append(_draw_scores(make_rng(seed, _SCORE_ROLE, k), params.score_dist,
                                   params.score_scale, shape))
    z = params.noise.draw(make_rng(seed, _NOISE_ROLE), (n,) + dims)
    truth = TensorTruth(params, tuple(scores), z)
    return TensorSampleSet(params.mean + truth.signal() + z, truth=truth)


def covariance_residual(samples, u, v):
    """Relative size of the complement block of the empirical covariance.

    Computes ``||C - s2 I||_F / ||Sigma||_F`` where ``Sigma`` is the empirical
    covariance of ``vec(X_i)``, ``C = (V_perp kron U_perp)^T Sigma
    (V_perp kron U_perp)`` and ``s2`` is the mean diagonal of ``C`` (the
    noise-variance estimate).  Near zero when the data follow the spiked
    model with loadings ``(u, v)``.
    """
    s = samples if isinstance(samples, MatrixSampleSet) else MatrixSampleSet(samples)
    if s.n < 2:
        raise ValueError("covariance_residual needs at least 2 samples")
    p1, p2 = s.shape
    if u.ambient_dim != p1 or v.ambient_dim != p2:
        raise ValueError("loading dimensions do not match the samples")
    xc = s.centered()
    vecs = xc.transpose(0, 2, 1).reshape(s.n, p1 * p2)  # column-stacking vec
    sigma = vecs.T @ vecs / (s.n - 1)
    w = kronecker(v.complement().basis, u.complement().basis)
    c = w.T @ sigma @ w
    s2 = float(np.mean(np.diag(c)))
    denom = np.linalg.norm(sigma)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(c - s2 * np.eye(c.shape[0])) / denom)


def complement_projector_eigenvalue(p1, r1, r2, draws, seed):
    """Monte-Carlo estimate of ``lambda_1(E P_{U_perp U_perp^T B})`` for Gaussian ``B``.

    Averages the projector onto ``span(P_{U_perp} B)`` over ``draws``
    independent ``p1 x r2`` standard Gaussian ``B`` with a fixed Haar ``U``;
    the population value is ``min(1, r2 / (p1 - r1))``.
    """
    u = random_subspace(p1, r1, derive_seed(seed, 0))
    rng = make_rng(seed, 1)
    acc = np.zeros((p1, p1))
    for _ in range(draws):
        b = rng.standard_normal((p1, r2))
        pb = b - u.basis @ (u.basis.T @ b)
        q, sv, _ = np.linalg.svd(pb, full_matrices=False)
        q = q[:, sv > 1e-10 * sv[0]]
        acc += q @ q.T
    acc /= draws
    return float(np.linalg.eigvalsh(acc)[-1])

"""Dense linear-algebra kernels: unfolding, mode products, eigen/singular
subspaces and the sin-theta distance.

Matrices and tensors are plain ``numpy.ndarray`` objects.  Modes are
0-based (numpy axes).  The mode-k unfolding enumerates the remaining modes
with the lowest remaining mode varying fastest, i.e. the Kolda-Bader
(Fortran-order) convention.
"""

import numpy as np

ORTHO_ATOL = 1e-10
SYMMETRY_ATOL = 1e-10


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D float64 array, raising ``ValueError`` otherwise."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_tensor(x, name="tensor"):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim < 2:
        raise ValueError(f"{name} must have order >= 2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


class Subspace:
    """Column span of a ``p x r`` matrix with orthonormal columns.

    Two subspaces are only meaningfully compared through :func:`sin_theta`;
    the basis itself is defined up to an ``r x r`` rotation.  A rank-0
    subspace (basis of shape ``p x 0``) is allowed as an empty marker.
    """

    __slots__ = ("_basis",)

    def __init__(self, basis, check=True):
        b = as_matrix(basis, "basis")
        p, r = b.shape
        if r > p:
            raise ValueError(f"rank {r} exceeds ambient dimension {p}")
        if check and r:
            dev = np.linalg.norm(b.T @ b - np.eye(r))
            if dev > ORTHO_ATOL:
                raise ValueError(f"basis columns are not orthonormal (deviation {dev:.3g})")
        b = b.copy()
        b.setflags(write=False)
        self._basis = b

    @classmethod
    def from_columns(cls, x):
        """Orthonormalize the columns of ``x`` (assumed full column rank)."""
        q, _ = np.linalg.qr(as_matrix(x))
        return cls(q)

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p), check=False)

    @property
    def basis(self):
        return self._basis

    @property
    def ambient_dim(self):
        return self._basis.shape[0]

    @property
    def rank(self):
        return self._basis.shape[1]

    def projector(self):
        return self._basis @ self._basis.T

    def complement(self):
        return orthonormal_complement(self)

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, rank={self.rank})"


def unfold(t, mode):
    """Mode-``mode`` unfolding of a tensor.

    Returns a ``p_mode x prod(other dims)`` matrix whose column index runs
    over the remaining modes with the first remaining mode varying fastest.

    >>> a = np.arange(1, 9, dtype=float).reshape(2, 2, 2, order="F")
    >>> unfold(a, 0)
    array([[1., 3., 5., 7.],
           [2., 4., 6., 8.]])
    """
    t = np.asarray(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m, mode, dims):
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for order-{len(dims)} tensor")
    moved = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    m = np.asarray(m)
    if m.size != np.prod(dims, dtype=np.int64) or m.shape[0] != dims[mode]:
        raise ValueError(f"matrix of shape {m.shape} cannot be folded into {dims}")
    return np.moveaxis(np.reshape(m, moved, order="F"), 0, mode)


def mode_product(t, b, mode):
    """Multiply matrix ``b`` into tensor ``t`` along ``mode``.

    The result satisfies ``unfold(result, mode) == b @ unfold(t, mode)``.
    """
    t = np.asarray(t, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if b.ndim != 2 or b.shape[1] != t.shape[mode]:
        raise ValueError(
            f"cannot multiply {b.shape} matrix into mode {mode} of size {t.shape[mode]}")
    return np.moveaxis(np.tensordot(b, t, axes=(1, mode)), 0, mode)


def kronecker(a, b):
    """Kronecker product, ``(A kron B)[p3*r + v, p4*s + w] = A[r, s] * B[v, w]``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def symmetrize(s):
    return 0.5 * (s + s.T)


def _check_symmetric(s, name="matrix"):
    s = as_matrix(s, name)
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"{name} must be square, got shape {s.shape}")
    scale = max(1.0, float(np.max(np.abs(s))) if s.size else 1.0)
    if np.max(np.abs(s - s.T), initial=0.0) > SYMMETRY_ATOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return s


def eigh_desc(s):
    """Eigenvalues (descending) and matching eigenvectors of a symmetric matrix."""
    w, q = np.linalg.eigh(symmetrize(_check_symmetric(s)))
    return w[::-1], q[:, ::-1]


def top_eigenvectors(s, r):
    """Subspace of the ``r`` algebraically largest eigenvalues of symmetric ``s``.

    ``s`` is symmetrized as ``(s + s.T) / 2`` before decomposition.  With a
    tied eigenvalue at position ``r`` any valid eigenbasis may be returned.
    """
    s = _check_symmetric(s)
    p = s.shape[0]
    if not 1 <= r <= p:
        raise ValueError(f"rank {r} out of range 1..{p}")
    _, q = np.linalg.eigh(symmetrize(s))
    return Subspace(q[:, ::-1][:, :r], check=False)


def top_left_singular_vectors(m, r):
    """Subspace spanned by the top ``r`` left singular vectors of ``m``.

    When ``r`` exceeds the numerical rank of ``m`` the trailing columns are
    an arbitrary orthonormal completion within the returned SVD basis.
    """
    m = as_matrix(m)
    if not 1 <= r <= min(m.shape):
        raise ValueError(f"rank {r} out of range 1..{min(m.shape)}")
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    return Subspace(u[:, :r], check=False)


def orthonormal_complement(u):
    """Orthonormal basis of the orthogonal complement of ``span(u)``."""
    p, r = u.ambient_dim, u.rank
    if r >= p:
        raise ValueError("the complement of the full space is empty")
    if r == 0:
        return Subspace.identity(p)
    q, _ = np.linalg.qr(u.basis, mode="complete")
    comp = q[:, r:]
    # one re-orthogonalization pass against u
    comp = comp - u.basis @ (u.basis.T @ comp)
    comp, _ = np.linalg.qr(comp)
    return Subspace(comp, check=False)


def _check_pair(u, v):
    if u.ambient_dim != v.ambient_dim or u.rank != v.rank:
        raise ValueError(
            f"subspaces differ in shape: ({u.ambient_dim}, {u.rank}) vs "
            f"({v.ambient_dim}, {v.rank})")


def sin_theta(u, v):
    """Spectral sin-theta distance ``||U_perp^T V||`` between equal-rank subspaces.

    Evaluated as ``||V - U U^T V||`` which keeps full relative accuracy for
    nearly identical subspaces.
    """
    _check_pair(u, v)
    if u.rank == 0 or u.rank == u.ambient_dim:
        return 0.0
    resid = v.basis - u.basis @ (u.basis.T @ v.basis)
    return float(min(1.0, np.linalg.norm(resid, 2)))


def sin_theta_fro(u, v):
    """Frobenius-norm variant ``||U_perp^T V||_F``."""
    _check_pair(u, v)
    if u.rank == 0:
        return 0.0
    resid = v.basis - u.basis @ (u.basis.T @ v.basis)
    return float(np.linalg.norm(resid))


def project_out(x, u, side="left", complement=True):
    """Apply ``P_U`` or ``P_{U_perp}`` to ``x`` without forming a ``p x p`` projector.

    ``side="left"`` computes ``P x``, ``side="right"`` computes ``x P``.
    """
    x = as_matrix(x, "x")
    b = u.basis
    if side == "left":
        if x.shape[0] != u.ambient_dim:
            raise ValueError(f"x has {x.shape[0]} rows, subspace lives in R^{u.ambient_dim}")
        proj = b @ (b.T @ x)
    elif side == "right":
        if x.shape[1] != u.ambient_dim:
            raise ValueError(f"x has {x.shape[1]} columns, subspace lives in R^{u.ambient_dim}")
        proj = (x @ b) @ b.T
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return x - proj if complement else proj

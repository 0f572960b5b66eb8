"""Projections, the Moran operator, and reduced random-effect bases.

The central object is the Moran operator for a design matrix X with respect
to a graph G: project the adjacency matrix onto the orthogonal complement of
span(X). Its leading eigenvectors are the mutually distinct patterns of
spatial clustering residual to X, and its standardized eigenvalues are the
attainable values of the generalized Moran's I. A Geary-style variant uses
the graph Laplacian in place of the adjacency matrix.

Two reduced bases are provided:

* ``rhz_basis``: an orthonormal basis L of span(X)-perp (all n - p columns),
  with reduced precision Q_R = L' Q L.
* ``moran_basis``: the q leading Moran eigenvectors M, with reduced
  precision Q_S = M' Q M.

Eigenvectors follow the sign convention "first nonzero component positive"
so outputs are deterministic across solvers. All operations here are pure
and return immutable results; for a fixed input the decompositions are
deterministic regardless of BLAS thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .graph import Graph, PrecisionMatrix, laplacian

__all__ = [
    "DesignMatrix",
    "MoranBasis",
    "RhzBasis",
    "projection_complement",
    "moran_operator",
    "moran_spectrum",
    "moran_eigensystem",
    "moran_basis",
    "rhz_basis",
    "reduced_precision",
    "moran_I",
]

# Full symmetric eigendecomposition below this size; iterative leading-pair
# solver above it.
_DENSE_EIG_LIMIT = 2500

_RANK_RTOL = 1e-10

# Moran operators of lattices carry structural zero eigenvalues; solver noise
# around them (observed < 1e-14) is snapped to exactly zero so sign counts
# are deterministic. Genuine eigenvalues sit many orders of magnitude higher.
_ZERO_SNAP = 1e-10


def _snap_zeros(vals: np.ndarray) -> np.ndarray:
    out = vals.copy()
    out[np.abs(out) <= _ZERO_SNAP] = 0.0
    return out


def _as_array(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.X
    return np.asarray(X, dtype=float)


def _dependent_column(X: np.ndarray) -> int:
    """Index of the first column numerically dependent on its predecessors."""
    n, p = X.shape
    basis = np.empty((n, 0))
    for j in range(p):
        col = X[:, j]
        resid = col - basis @ (basis.T @ col)
        if np.linalg.norm(resid) <= _RANK_RTOL * max(np.linalg.norm(col), 1.0):
            return j
        basis = np.column_stack([basis, resid / np.linalg.norm(resid)])
    return -1


@dataclass(frozen=True)
class DesignMatrix:
    """n x p covariate matrix with full column rank and p < n."""

    X: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if X.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        object.__setattr__(self, "X", X)
        n, p = X.shape
        if p >= n:
            raise ValueError(f"design matrix needs p < n, got {n} x {p}")
        svals = np.linalg.svd(X, compute_uv=False)
        if svals[-1] <= 1e-10 * svals[0]:
            raise ValueError(
                f"design matrix is rank deficient: column {_dependent_column(X)} "
                "is linearly dependent on earlier columns"
            )
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{j}" for j in range(p)))
        elif len(self.names) != p:
            raise ValueError(f"got {len(self.names)} names for {p} columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class MoranBasis:
    """Leading Moran eigenvectors with eigenvalues and reduced precision.

    M is n x q orthonormal with columns in span(X)-perp; eigenvalues are in
    descending order; standardized eigenvalues carry the Moran's I prefactor
    n / (1'A1); Q_S = M' Q M.
    """

    M: np.ndarray
    eigenvalues: np.ndarray
    standardized_eigenvalues: np.ndarray
    Q_S: np.ndarray

    @property
    def q(self) -> int:
        return self.M.shape[1]


@dataclass(frozen=True)
class RhzBasis:
    """Orthonormal basis L of span(X)-perp with Q_R = L' Q L."""

    L: np.ndarray
    Q_R: np.ndarray

    @property
    def k(self) -> int:
        return self.L.shape[1]


def _orthonormal_range(X: np.ndarray) -> np.ndarray:
    """Orthonormal basis U of span(X), validating full column rank."""
    svals = np.linalg.svd(X, compute_uv=False)
    if svals[-1] <= 1e-10 * svals[0]:
        raise ValueError(
            f"design matrix is rank deficient: column {_dependent_column(X)} "
            "is linearly dependent on earlier columns"
        )
    U, _ = np.linalg.qr(X)
    return U


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the first nonzero component is positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.nonzero(np.abs(col) > 1e-9 * np.abs(col).max())[0]
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def projection_complement(X) -> np.ndarray:
    """Projection onto the orthogonal complement of span(X).

    Returns the dense symmetric idempotent matrix I - X (X'X)^{-1} X',
    computed from an orthonormal basis of span(X) for stability.
    """
    Xa = _as_array(X)
    U = _orthonormal_range(Xa)
    P_perp = np.eye(Xa.shape[0]) - U @ U.T
    return (P_perp + P_perp.T) / 2.0


def moran_operator(X, g: Graph, source: str = "adjacency") -> np.ndarray:
    """Moran operator P-perp A P-perp, or the Laplacian variant P-perp Q P-perp.

    Parameters
    ----------
    X : DesignMatrix or array
        Covariates whose span is projected out.
    g : Graph
        Areal graph supplying A (or Q for ``source="laplacian"``).
    source : {"adjacency", "laplacian"}
        The adjacency form is Moran-like (large eigenvalues mean attraction);
        the Laplacian form is Geary-like.

    Returns a dense n x n symmetric matrix; intended for moderate n.
    """
    if source == "adjacency":
        S = g.dense_adjacency()
    elif source == "laplacian":
        S = laplacian(g).dense()
    else:
        raise ValueError(f"source must be 'adjacency' or 'laplacian', got {source!r}")
    Xa = _as_array(X)
    U = _orthonormal_range(Xa)
    # P S P = S - U(U'S) - (SU)U' + U(U'SU)U' without forming P explicitly
    SU = S @ U
    UtSU = U.T @ SU
    op = S - U @ SU.T - SU @ U.T + U @ UtSU @ U.T
    return (op + op.T) / 2.0


def _standardizer(g: Graph) -> float:
    """Moran prefactor n / (1'A1); rejects edgeless graphs."""
    total = 2 * g.n_edges
    if total == 0:
        raise ValueError("graph has no edges; Moran quantities are undefined")
    return g.n / total


def moran_spectrum(X, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues of the Moran operator, descending, raw and standardized."""
    scale = _standardizer(g)
    op = moran_operator(X, g, source="adjacency")
    vals = _snap_zeros(np.linalg.eigvalsh(op)[::-1])
    return vals, vals * scale


def moran_eigensystem(X, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of the Moran operator, descending.

    Returns (eigenvalues, eigenvectors); feed to ``moran_basis`` through its
    ``eigensystem`` argument to avoid repeating the decomposition.
    """
    op = moran_operator(X, g)
    vals, vecs = np.linalg.eigh(op)
    order = np.argsort(vals)[::-1]
    return _snap_zeros(vals[order]), vecs[:, order]


def _leading_eigpairs(X, g: Graph, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k largest eigenpairs of the Moran operator, descending."""
    Xa = _as_array(X)
    n = Xa.shape[0]
    if n <= _DENSE_EIG_LIMIT or k >= n - 1:
        op = moran_operator(Xa, g)
        vals, vecs = np.linalg.eigh(op)
        order = np.argsort(vals)[::-1]
        return _snap_zeros(vals[order][:k]), vecs[:, order][:, :k]
    # Iterative path for large graphs: apply P-perp A P-perp as an operator.
    U = _orthonormal_range(Xa)
    A = g.adjacency().astype(float)

    def matvec(v):
        w = v - U @ (U.T @ v)
        w = A @ w
        return w - U @ (U.T @ w)

    op = sp.linalg.LinearOperator((n, n), matvec=matvec, dtype=float)
    vals, vecs = sp.linalg.eigsh(op, k=k, which="LA", tol=1e-9)
    order = np.argsort(vals)[::-1]
    return _snap_zeros(vals[order]), vecs[:, order]


def moran_basis(
    X,
    g: Graph,
    q: int | None = None,
    threshold: float | None = None,
    eigensystem: tuple[np.ndarray, np.ndarray] | None = None,
) -> MoranBasis:
    """Basis of the q leading Moran eigenvectors with reduced precision Q_S.

    Rank selection is by exactly one rule: a fixed dimension ``q`` (which
    must not exceed the count of strictly positive eigenvalues), or a
    standardized-eigenvalue threshold ``threshold`` (keep eigenvectors whose
    standardized eigenvalue exceeds it). A precomputed ``eigensystem``
    (descending eigenvalues and eigenvectors of the Moran operator) skips
    the decomposition.

    Within a tie the solver's ordering is preserved; the contract for tied
    eigenvalues is the spanned subspace, not the individual vectors.
    """
    if (q is None) == (threshold is None):
        raise ValueError("specify exactly one of q or threshold")
    scale = _standardizer(g)
    Xa = _as_array(X)
    n = Xa.shape[0]

    if threshold is not None:
        if threshold <= 0:
            raise ValueError(f"threshold must be positive, got {threshold}")
        if eigensystem is not None:
            vals, vecs = eigensystem
        elif n <= _DENSE_EIG_LIMIT:
            vals, vecs = _leading_eigpairs(Xa, g, n)
        else:
            # Grow k until the spectrum crosses the threshold.
            k = min(n - 2, 256)
            while True:
                vals, vecs = _leading_eigpairs(Xa, g, k)
                if vals[-1] * scale <= threshold or k >= n - 2:
                    break
                k = min(n - 2, 2 * k)
        keep = int(np.sum(vals * scale > threshold))
        if keep == 0:
            raise ValueError(
                f"no standardized eigenvalue exceeds threshold {threshold}"
            )
        vals, vecs = vals[:keep], vecs[:, :keep]
    else:
        if q < 1:
            raise ValueError(f"q must be >= 1, got {q}")
        if eigensystem is not None:
            vals_k, vecs_k = eigensystem
            k = vals_k.shape[0]
        else:
            # Positivity bound needs sight of the spectrum just past q.
            k = min(n, q + 1)
            vals_k, vecs_k = _leading_eigpairs(Xa, g, k)
        if q > k:
            raise ValueError(f"q={q} exceeds the {k} available eigenpairs")
        n_positive = int(np.sum(vals_k[:q] > 0))
        if n_positive < q:
            if eigensystem is None and n_positive == k - 1 and k < n:
                # all computed were positive except the probe; count fully
                all_vals, _ = _leading_eigpairs(Xa, g, n)
                n_positive = int(np.sum(all_vals > 0))
            raise ValueError(
                f"q={q} exceeds the number of positive Moran eigenvalues "
                f"({n_positive})"
            )
        vals, vecs = vals_k[:q], vecs_k[:, :q]

    M = _fix_signs(vecs)
    Q = laplacian(g)
    Q_S = reduced_precision(M, Q)
    return MoranBasis(
        M=M,
        eigenvalues=vals,
        standardized_eigenvalues=vals * scale,
        Q_S=Q_S,
    )


def rhz_basis(X, g: Graph) -> RhzBasis:
    """Orthonormal basis of span(X)-perp with reduced precision Q_R = L'QL.

    L has n - p columns; any orthonormal completion of span(X) spans the
    same space, so the contract is the subspace, not individual vectors.
    """
    Xa = _as_array(X)
    n, p = Xa.shape
    if p >= n:
        raise ValueError(f"need p < n for a nonempty complement, got {n} x {p}")
    _orthonormal_range(Xa)  # rank validation
    L = scipy.linalg.null_space(Xa.T)
    if L.shape[1] != n - p:
        raise ValueError(
            f"complement has {L.shape[1]} dimensions, expected {n - p}; "
            "design matrix is numerically rank deficient"
        )
    L = _fix_signs(L)
    Q_R = reduced_precision(L, laplacian(g))
    return RhzBasis(L=L, Q_R=Q_R)


def reduced_precision(B: np.ndarray, Q) -> np.ndarray:
    """Congruence B' Q B, symmetrized to machine symmetry.

    B must have orthonormal columns; Q may be a PrecisionMatrix, a sparse
    matrix, or a dense array.
    """
    B = np.asarray(B, dtype=float)
    if isinstance(Q, PrecisionMatrix):
        Qm = Q.Q
    else:
        Qm = Q
    if B.ndim != 2 or Qm.shape[0] != Qm.shape[1] or B.shape[0] != Qm.shape[0]:
        raise ValueError(
            f"dimension mismatch: B is {B.shape}, Q is {Qm.shape}"
        )
    gram = B.T @ B
    if not np.allclose(gram, np.eye(B.shape[1]), atol=1e-8):
        raise ValueError("B does not have orthonormal columns")
    QB = Qm @ B
    out = B.T @ QB
    return (out + out.T) / 2.0


def moran_I(g: Graph, Z: np.ndarray, X=None) -> float:
    """Moran's I, classical or generalized to an arbitrary design matrix.

    With no X this is the classical statistic (intercept-only projection
    I - 11'/n); with X it is the generalized form whose attainable values
    are the standardized eigenvalues of the Moran operator.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (g.n,):
        raise ValueError(f"Z must have length {g.n}, got shape {Z.shape}")
    scale = _standardizer(g)
    if X is None:
        resid = Z - Z.mean()
    else:
        Xa = _as_array(X)
        U = _orthonormal_range(Xa)
        resid = Z - U @ (U.T @ Z)
    denom = float(resid @ resid)
    if denom <= 1e-12 * max(float(Z @ Z), 1.0):
        raise ValueError(
            "residual of Z is degenerate (Z lies in the span of the design); "
            "Moran's I is undefined"
        )
    A = g.adjacency().astype(float)
    num = float(resid @ (A @ resid))
    return scale * num / denom

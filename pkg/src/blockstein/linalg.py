"""Dense linear-algebra and sampling primitives.

All routines validate for finite entries and raise InvalidArgumentError on
dimension mismatches.  Least squares goes through SVD (Moore-Penrose
convention) so rank-deficient systems return the minimum-norm solution.
"""

import numpy as np

from .exceptions import InvalidArgumentError, NotSpdError

# Singular values below RANK_TOL * s_max are treated as zero.
RANK_TOL = 1e-10


def _as_matrix(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return A


def _as_vector(b, name="b"):
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a 1-d array, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return b


def least_squares(A, b):
    """Minimum-norm solution of min ||A x - b||^2."""
    A = _as_matrix(A)
    b = _as_vector(b)
    n, k = A.shape
    if b.shape[0] != n:
        raise InvalidArgumentError(f"shape mismatch: A is {n}x{k}, b has length {b.shape[0]}")
    if not (n >= k >= 1):
        raise InvalidArgumentError(f"need n >= k >= 1, got n={n}, k={k}")
    x, _, _, _ = np.linalg.lstsq(A, b, rcond=RANK_TOL)
    return x


def projection_complement(A):
    """I - A (A'A)^- A', the projector onto the orthocomplement of col(A)."""
    A = _as_matrix(A)
    n, k = A.shape
    if n < k:
        raise InvalidArgumentError(f"need n >= k, got n={n}, k={k}")
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * (s[0] if s.size else 0.0)))
    Ur = U[:, :r]
    return np.eye(n) - Ur @ Ur.T


def cholesky_spd(S):
    """Lower-triangular L with L L' = S; raises NotSpdError otherwise.

    A pivot at or below 1e-12 times the largest diagonal entry counts as
    a failed factorization.
    """
    S = _as_matrix(S, "S")
    p, q = S.shape
    if p != q:
        raise InvalidArgumentError(f"S must be square, got {p}x{q}")
    scale = max(np.max(np.abs(S)), 1.0)
    if np.max(np.abs(S - S.T)) > 1e-12 * scale:
        raise InvalidArgumentError("S is not symmetric to 1e-12 relative")
    pivot_tol = 1e-12 * max(np.max(np.diag(S)), 0.0)
    L = np.zeros((p, p))
    for j in range(p):
        d = S[j, j] - L[j, :j] @ L[j, :j]
        if d <= pivot_tol:
            raise NotSpdError(f"non-positive-definite pivot at column {j}: {d:.3e}")
        L[j, j] = np.sqrt(d)
        if j + 1 < p:
            L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def sample_normal_vector(rng, mean, chol):
    """One draw of mean + L z with z iid standard normal."""
    mean = _as_vector(mean, "mean")
    chol = _as_matrix(chol, "chol")
    if chol.shape[0] != mean.shape[0]:
        raise InvalidArgumentError("mean and chol dimensions disagree")
    z = rng.generator.standard_normal(chol.shape[1])
    return mean + chol @ z


def sample_chisq(rng, k, noncentrality=0.0):
    """One draw of a (noncentral) chi-square with k degrees of freedom.

    Implemented as ||z + mu||^2 with ||mu||^2 equal to the noncentrality,
    which is the definition rather than an approximation.
    """
    if int(k) != k or k < 1:
        raise InvalidArgumentError(f"k must be a positive integer, got {k}")
    if not np.isfinite(noncentrality) or noncentrality < 0:
        raise InvalidArgumentError(f"noncentrality must be >= 0, got {noncentrality}")
    k = int(k)
    z = rng.generator.standard_normal(k)
    z[0] += np.sqrt(noncentrality)
    return float(z @ z)

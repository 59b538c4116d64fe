"""Dense float64 numeric kernel.

Vectors and matrices are plain numpy arrays; every public operation
validates shapes, keeps NaN/Inf from escaping, and is deterministic
given its inputs (and seed, for the random source).
"""

import hashlib

import numpy as np


class NotPositiveDefiniteError(ValueError):
    """Cholesky hit a non-positive pivot; carries the pivot index."""

    def __init__(self, pivot, value):
        self.pivot = pivot
        self.value = value
        super().__init__(
            "matrix is not positive-definite: pivot %d = %.6g" % (pivot, value)
        )


def as_vector(v, name="vector"):
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def as_matrix(m, name="matrix"):
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def softmax(v):
    """Max-subtracted exp-normalize; entries positive, sum 1."""
    arr = as_vector(v)
    if arr.size == 0:
        raise ValueError("softmax of empty vector")
    e = np.exp(arr - arr.max())
    return e / e.sum()


def log_softmax(v):
    """log(softmax(v)) without the intermediate ratio."""
    arr = as_vector(v)
    if arr.size == 0:
        raise ValueError("log_softmax of empty vector")
    shifted = arr - arr.max()
    return shifted - np.log(np.exp(shifted).sum())


def sigmoid_elem(v):
    """Elementwise logistic sigmoid, stable on both tails."""
    arr = as_vector(v)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def tanh_elem(v):
    return np.tanh(as_vector(v))


def hadamard(a, b):
    x = as_vector(a, "a")
    y = as_vector(b, "b")
    if x.shape != y.shape:
        raise ValueError(f"hadamard shape mismatch: {x.shape} vs {y.shape}")
    return x * y


def matvec(m, v):
    mat = as_matrix(m)
    vec = as_vector(v)
    if mat.shape[1] != vec.shape[0]:
        raise ValueError(f"matvec shape mismatch: {mat.shape} @ {vec.shape}")
    return mat @ vec


def affine(m, v, b):
    bias = as_vector(b, "bias")
    out = matvec(m, v)
    if out.shape != bias.shape:
        raise ValueError(f"affine bias shape mismatch: {out.shape} vs {bias.shape}")
    return out + bias


def cholesky_lower(a):
    """Lower-triangular Cholesky factor; raises on non-positive pivots."""
    mat = as_matrix(a)
    n = mat.shape[0]
    if mat.shape[1] != n:
        raise ValueError(f"cholesky needs a square matrix, got {mat.shape}")
    lower = np.zeros((n, n))
    for j in range(n):
        d = mat[j, j] - lower[j, :j] @ lower[j, :j]
        if not np.isfinite(d) or d <= 0.0:
            raise NotPositiveDefiniteError(j, d)
        lower[j, j] = np.sqrt(d)
        if j + 1 < n:
            lower[j + 1 :, j] = (mat[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_spd(a, b):
    """Solve A x = b for symmetric positive-definite A via Cholesky.

    Never forms an inverse: factor, then forward/back substitution.
    """
    mat = as_matrix(a, "A")
    rhs = as_vector(b, "b")
    n = mat.shape[0]
    if mat.shape[1] != n or rhs.shape[0] != n:
        raise ValueError(f"solve_spd shape mismatch: A {mat.shape}, b {rhs.shape}")
    tol = 1e-10 * max(1.0, float(np.abs(mat).max()) if n else 1.0)
    if n and float(np.abs(mat - mat.T).max()) > tol:
        raise ValueError("solve_spd: matrix is not symmetric within 1e-10")
    lower = cholesky_lower(mat)
    y = np.empty(n)
    for i in range(n):
        y[i] = (rhs[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def derive_seed(seed, *keys):
    """Stable 64-bit sub-seed from a root seed and string-able keys."""
    text = "|".join([str(int(seed))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class SeededRng:
    """Deterministic random source: identical seed, identical draw sequence."""

    def __init__(self, seed):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self):
        """One uniform float in [0, 1)."""
        return float(self._gen.random())

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def spawn(self, *keys):
        """Independent child stream addressed by keys (not by draw order)."""
        return SeededRng(derive_seed(self.seed, *keys))


def multinomial_draw(weights, count, rng):
    """Draw `count` distinct indices sequentially, renormalizing after each.

    Weights must be non-negative with positive sum; `count` may not exceed
    the number of positive-weight entries.
    """
    w = as_vector(weights, "weights").copy()
    if np.any(w < 0):
        raise ValueError("multinomial_draw: negative weight")
    if w.sum() <= 0:
        raise ValueError("multinomial_draw: weights sum to zero")
    count = int(count)
    positive = int(np.count_nonzero(w > 0))
    if count < 0 or count > positive:
        raise ValueError(
            f"multinomial_draw: count {count} exceeds {positive} positive-weight entries"
        )
    out = []
    for _ in range(count):
        cum = np.cumsum(w)
        r = rng.random() * cum[-1]
        i = int(np.searchsorted(cum, r, side="right"))
        i = min(i, w.shape[0] - 1)
        while i > 0 and w[i] == 0.0:  # float roundoff at the right edge
            i -= 1
        out.append(i)
        w[i] = 0.0
    return out

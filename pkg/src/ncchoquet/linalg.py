"""Dense complex matrix layer: typed carriers, spectral helpers, Hermitian
coordinates and the JSON matrix encoding used by every other module.

All matrices are dense complex double-precision ndarrays.  The typed wrappers
``ComplexMatrix`` / ``HermitianMatrix`` validate invariants at API boundaries;
internal code passes bare arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tolerance import DEFAULT_TOL, Tolerance

__all__ = [
    "ComplexMatrix",
    "HermitianMatrix",
    "dagger",
    "hermitize",
    "is_hermitian",
    "hermitian_eig",
    "operator_norm",
    "psd_check",
    "kron",
    "herm_basis",
    "herm_basis_labels",
    "herm_indices_in_block",
    "pack_hermitian",
    "unpack_hermitian",
    "matrix_to_json",
    "matrix_from_json",
    "random_complex",
    "random_hermitian",
    "haar_isometry",
]


def _validated(entries, rows=None, cols=None) -> np.ndarray:
    a = np.asarray(entries, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"matrix must be 2-dimensional, got shape {a.shape}")
    if rows is not None and a.shape != (rows, cols):
        raise ValueError(f"expected shape {(rows, cols)}, got {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError("matrix dimensions must be positive")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return a


@dataclass(frozen=True)
class ComplexMatrix:
    """Dense complex matrix; the universal value carrier."""

    a: np.ndarray

    def __init__(self, entries, rows=None, cols=None):
        object.__setattr__(self, "a", _validated(entries, rows, cols))

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    def to_json(self):
        return matrix_to_json(self.a)

    @classmethod
    def from_json(cls, obj) -> "ComplexMatrix":
        return cls(matrix_from_json(obj))


@dataclass(frozen=True)
class HermitianMatrix:
    """Square matrix symmetrized to (M + M*)/2 at construction."""

    a: np.ndarray

    def __init__(self, entries, dim=None):
        m = _validated(entries, dim, dim)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"Hermitian matrix must be square, got {m.shape}")
        object.__setattr__(self, "a", hermitize(m))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def to_json(self):
        return matrix_to_json(self.a)

    @classmethod
    def from_json(cls, obj) -> "HermitianMatrix":
        return cls(matrix_from_json(obj))


def _as_array(m) -> np.ndarray:
    if isinstance(m, (ComplexMatrix, HermitianMatrix)):
        return m.a
    return np.asarray(m, dtype=np.complex128)


def dagger(m) -> np.ndarray:
    return _as_array(m).conj().T


def hermitize(m) -> np.ndarray:
    a = _as_array(m)
    return 0.5 * (a + a.conj().T)


def is_hermitian(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    a = _as_array(m)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.abs(a).max()))
    return bool(np.abs(a - a.conj().T).max() <= tol.eq_tol * a.shape[0] * scale)


def hermitian_eig(m):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Returns ``(w, U)`` with ``M = U @ diag(w) @ U*``.
    """
    a = _as_array(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"hermitian_eig needs a square matrix, got shape {a.shape}")
    w, u = np.linalg.eigh(hermitize(a))
    return w, u


def operator_norm(m) -> float:
    """Largest singular value; equals sup ||M xi|| over unit xi."""
    a = _as_array(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def psd_check(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the minimum eigenvalue is >= -psd_tol."""
    a = _as_array(m)
    w = np.linalg.eigvalsh(hermitize(a))
    return bool(w[0] >= -tol.psd_tol)


def kron(a, b) -> np.ndarray:
    return np.kron(_as_array(a), _as_array(b))


# ---------------------------------------------------------------------------
# Hermitian coordinates
#
# herm_basis(n) is the orthonormal basis of n x n Hermitian matrices used for
# all real parameterizations: first the diagonal units E_ii, then for every
# pair i<j the symmetric (E_ij+E_ji)/sqrt2 followed by the antisymmetric
# i(E_ij-E_ji)/sqrt2, pairs ordered lexicographically.
# ---------------------------------------------------------------------------

_HB_CACHE: dict = {}


def herm_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis, shape (n*n, n, n)."""
    if n in _HB_CACHE:
        return _HB_CACHE[n]
    basis = np.zeros((n * n, n, n), dtype=np.complex128)
    k = 0
    for i in range(n):
        basis[k, i, i] = 1.0
        k += 1
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            basis[k, i, j] = r
            basis[k, j, i] = r
            k += 1
            basis[k, i, j] = 1j * r
            basis[k, j, i] = -1j * r
            k += 1
    basis.setflags(write=False)
    _HB_CACHE[n] = basis
    return basis


def herm_basis_labels(n: int):
    """(i, j, kind) per basis element; kind in {'d', 're', 'im'}."""
    labels = [(i, i, "d") for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            labels.append((i, j, "re"))
            labels.append((i, j, "im"))
    return labels


def herm_indices_in_block(n: int, keep) -> np.ndarray:
    """Indices of herm_basis(n) elements supported on rows/cols in ``keep``."""
    keep = set(int(i) for i in keep)
    idx = [k for k, (i, j, _) in enumerate(herm_basis_labels(n)) if i in keep and j in keep]
    return np.asarray(idx, dtype=np.intp)


def pack_hermitian(m) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in herm_basis order.

    Isometric for the trace inner product: <A, B> = pack(A) . pack(B).
    """
    a = _as_array(m)
    n = a.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    out = np.empty(n * n)
    out[:n] = a.diagonal().real
    off = a[iu, ju]
    out[n::2] = np.sqrt(2.0) * off.real
    out[n + 1 :: 2] = np.sqrt(2.0) * off.imag
    return out


def unpack_hermitian(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n * n,):
        raise ValueError(f"expected {n * n} coordinates, got shape {v.shape}")
    a = np.zeros((n, n), dtype=np.complex128)
    a[np.diag_indices(n)] = v[:n]
    iu, ju = np.triu_indices(n, k=1)
    off = (v[n::2] + 1j * v[n + 1 :: 2]) / np.sqrt(2.0)
    a[iu, ju] = off
    a[ju, iu] = off.conj()
    return a


# ---------------------------------------------------------------------------
# JSON encoding: {"rows": r, "cols": c, "data": [[[re, im], ...] per row]}
# ---------------------------------------------------------------------------


def matrix_to_json(m) -> dict:
    a = _as_array(m)
    data = [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": data}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows or any(len(row) != cols for row in data):
        raise ValueError("matrix data does not match declared shape")
    a = np.array([[complex(e[0], e[1]) for e in row] for row in data], dtype=np.complex128)
    return _validated(a)


# ---------------------------------------------------------------------------
# Seeded random elements
# ---------------------------------------------------------------------------


def random_complex(rng: np.random.Generator, rows: int, cols=None) -> np.ndarray:
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    return hermitize(random_complex(rng, n))


def haar_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed isometry C^cols -> C^rows (cols <= rows)."""
    if cols > rows:
        raise ValueError("isometry needs cols <= rows")
    q, r = np.linalg.qr(random_complex(rng, rows, cols))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))

"""Dense complex multiway arrays and the rank-one multilinear operations built on them.

Conventions used throughout:

* Flat storage is column-major: mode-1 index varies fastest.  All reshapes,
  vectorizations and tensorizations therefore use Fortran order.
* ``unfold(X, n)`` puts mode ``n`` on the rows and arranges the remaining
  modes along the columns in ascending mode order (the usual matricization
  convention in the multilinear-algebra literature).
* Modes are numbered from 1.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .flopcount import FlopCounter, counted_matmul

__all__ = [
    "ComplexTensor",
    "RankOneFactors",
    "kron",
    "khatri_rao",
    "hadamard",
    "unfold",
    "fold",
    "n_mode_product",
    "vec",
    "unvec",
    "tensorize",
    "reshape",
    "identity_tensor",
    "dominant_left_singular_vector",
    "hosvd_rank1",
]

_ZERO_NORM = 1e-300


class ComplexTensor:
    """Immutable dense complex-valued multiway array.

    Parameters
    ----------
    data : array_like
        Values with one axis per mode.  Copied and cast to complex128; the
        stored array is marked read-only.
    """

    __slots__ = ("data",)

    def __init__(self, data) -> None:
        arr = np.array(data, dtype=np.complex128, copy=True)
        if arr.ndim < 1:
            raise ValueError("tensor must have order >= 1")
        if any(d < 1 for d in arr.shape):
            raise ValueError("all mode extents must be >= 1, got %s" % (arr.shape,))
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("ComplexTensor is immutable")

    @classmethod
    def from_vec(cls, flat, dims: Sequence[int]) -> "ComplexTensor":
        flat = np.asarray(flat, dtype=np.complex128).reshape(-1)
        dims = tuple(int(d) for d in dims)
        if flat.size != int(np.prod(dims)):
            raise ValueError(
                "flat length %d does not match dims %s" % (flat.size, (dims,))
            )
        return cls(flat.reshape(dims, order="F"))

    @property
    def dims(self) -> tuple:
        return self.data.shape

    @property
    def order(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def vec(self) -> np.ndarray:
        """Column-major vectorization (mode-1 index fastest)."""
        return self.data.reshape(-1, order="F").copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ComplexTensor)
            and self.dims == other.dims
            and bool(np.array_equal(self.data, other.data))
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ComplexTensor(dims={self.dims})"


def _as_array(x) -> np.ndarray:
    if isinstance(x, ComplexTensor):
        return x.data
    return np.asarray(x)


# ---------------------------------------------------------------- products #


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two vectors or matrices (left operand varies slowest)."""
    return np.kron(np.asarray(a), np.asarray(b))


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("khatri_rao expects matrices, got %s and %s" % (a.shape, b.shape))
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            "column counts must match: %d vs %d" % (a.shape[1], b.shape[1])
        )
    m, n = a.shape[0], b.shape[0]
    return (a[:, None, :] * b[None, :, :]).reshape(m * n, a.shape[1])


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise product of two arrays of identical shape."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("shapes must match: %s vs %s" % (a.shape, b.shape))
    return a * b


# ----------------------------------------------------- unfold / fold / vec #


def _check_mode(mode: int, order: int) -> None:
    if not 1 <= mode <= order:
        raise ValueError("mode %d out of range for order-%d tensor" % (mode, order))


def unfold(x: ComplexTensor, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization: extent of ``mode`` on rows, remaining modes
    along columns in ascending order."""
    _check_mode(mode, x.order)
    return np.moveaxis(x.data, mode - 1, 0).reshape(x.dims[mode - 1], -1, order="F")


def fold(m: np.ndarray, mode: int, dims: Sequence[int]) -> ComplexTensor:
    """Inverse of :func:`unfold` for the given target dims."""
    dims = tuple(int(d) for d in dims)
    _check_mode(mode, len(dims))
    m = np.asarray(m)
    rest = tuple(d for i, d in enumerate(dims) if i != mode - 1)
    if m.shape != (dims[mode - 1], int(np.prod(rest))):
        raise ValueError(
            "matrix shape %s does not match mode-%d unfolding of dims %s"
            % (m.shape, mode, (dims,))
        )
    arr = m.reshape((dims[mode - 1],) + rest, order="F")
    return ComplexTensor(np.moveaxis(arr, 0, mode - 1))


def n_mode_product(
    x: ComplexTensor,
    a: np.ndarray,
    mode: int,
    counter: FlopCounter | None = None,
) -> ComplexTensor:
    """Contract mode ``mode`` of ``x`` with the columns of matrix ``a``."""
    _check_mode(mode, x.order)
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError("n_mode_product factor must be a matrix, got %s" % (a.shape,))
    if a.shape[1] != x.dims[mode - 1]:
        raise ValueError(
            "factor columns (%d) must equal mode-%d extent (%d)"
            % (a.shape[1], mode, x.dims[mode - 1])
        )
    new_dims = list(x.dims)
    new_dims[mode - 1] = a.shape[0]
    return fold(counted_matmul(a, unfold(x, mode), counter), mode, new_dims)


def vec(a) -> np.ndarray:
    """Column-major vectorization of a matrix or tensor."""
    arr = _as_array(a)
    return arr.reshape(-1, order="F").copy()


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Reassemble a rows x cols matrix from its column-major vectorization."""
    v = np.asarray(v).reshape(-1)
    if v.size != rows * cols:
        raise ValueError("vector length %d != %d x %d" % (v.size, rows, cols))
    return v.reshape(rows, cols, order="F")


def tensorize(v: np.ndarray, dims: Sequence[int]) -> ComplexTensor:
    """Reassemble a tensor of the given dims from a column-major flat vector."""
    return ComplexTensor.from_vec(v, dims)


def reshape(x: ComplexTensor, dims: Sequence[int]) -> ComplexTensor:
    """Relabel the flat column-major data of ``x`` with new mode extents."""
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != x.size:
        raise ValueError("cannot reshape %s to %s" % (x.dims, (dims,)))
    return ComplexTensor(x.data.reshape(dims, order="F"))


def identity_tensor(order: int, n: int) -> ComplexTensor:
    """Order-``order`` diagonal tensor with ones where all indices coincide."""
    if order < 1 or n < 1:
        raise ValueError("order and extent must be >= 1")
    arr = np.zeros((n,) * order, dtype=np.complex128)
    arr[(np.arange(n),) * order] = 1.0
    return ComplexTensor(arr)


# ------------------------------------------------------- rank-one routines #


def dominant_left_singular_vector(
    m: np.ndarray,
    counter: FlopCounter | None = None,
) -> tuple[np.ndarray, float]:
    """Dominant left singular vector and singular value of a complex matrix.

    Works on the smaller of the two Gram matrices instead of a full SVD.
    The returned vector has unit norm and its largest-modulus entry is made
    real and positive, which fixes the phase gauge deterministically.  With a
    degenerate leading singular value the eigenbasis column chosen is the one
    with the lowest index after sorting eigenvalues descending (stable sort),
    so repeated calls agree bit for bit.

    Parameters
    ----------
    m : ndarray, shape (r, c)
    counter : FlopCounter, optional
        Charged for the Gram product (and the tall-case back-projection).

    Returns
    -------
    u : ndarray, shape (r,)
    sigma : float
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError("expected a matrix, got shape %s" % (m.shape,))
    if not np.linalg.norm(m) > _ZERO_NORM:
        raise ValueError("dominant singular vector of a zero matrix is undefined")
    rows, cols = m.shape
    if rows <= cols:
        gram = counted_matmul(m, m.conj().T, counter)
        w, basis = np.linalg.eigh(gram)
        lead = np.argsort(-w, kind="stable")[0]
        u = basis[:, lead]
        sigma = float(np.sqrt(max(float(w[lead]), 0.0)))
    else:
        gram = counted_matmul(m.conj().T, m, counter)
        w, basis = np.linalg.eigh(gram)
        lead = np.argsort(-w, kind="stable")[0]
        v = basis[:, lead]
        mv = counted_matmul(m, v[:, None], counter)[:, 0]
        sigma = float(np.linalg.norm(mv))
        if not sigma > _ZERO_NORM:
            raise ValueError("dominant singular vector of a zero matrix is undefined")
        u = mv / sigma
    k = int(np.argmax(np.abs(u)))
    u = u * (u[k].conjugate() / abs(u[k]))
    return u, sigma


@dataclass(frozen=True)
class RankOneFactors:
    """Rank-one multilinear decomposition: one unit vector per mode plus a
    complex amplitude.  ``reconstruct`` rebuilds core * v1 o v2 o ... o vN."""

    vectors: tuple
    core: complex

    def __post_init__(self):
        if len(self.vectors) < 1:
            raise ValueError("need at least one factor vector")
        for i, v in enumerate(self.vectors):
            nrm = np.linalg.norm(v)
            if abs(nrm - 1.0) > 1e-6:
                raise ValueError("factor vector %d is not unit norm (|v|=%g)" % (i + 1, nrm))

    @property
    def dims(self) -> tuple:
        return tuple(len(v) for v in self.vectors)

    def reconstruct(self) -> ComplexTensor:
        out = functools.reduce(np.multiply.outer, self.vectors)
        return ComplexTensor(out * self.core)


def _mode_vector(x: ComplexTensor, mode: int, counter: FlopCounter | None):
    return dominant_left_singular_vector(unfold(x, mode), counter)[0]


def hosvd_rank1(
    x: ComplexTensor,
    counter: FlopCounter | None = None,
    map_fn: Callable[..., Iterable] = map,
) -> RankOneFactors:
    """Rank-one truncated higher-order SVD of ``x``.

    Each mode's factor is the dominant left singular vector of that mode's
    unfolding; the amplitude is the tensor contracted with all factor vectors
    conjugated.  The per-mode subproblems touch disjoint outputs and share
    only read-only inputs, so callers may evaluate them concurrently by
    passing e.g. ``map_fn=pool.map`` (the passed ``counter``, if any, is not
    synchronized and should be None in that case).

    Raises
    ------
    ValueError
        If ``x`` has (numerically) zero norm.
    """
    if not x.norm() > _ZERO_NORM:
        raise ValueError("rank-one HOSVD of a zero tensor is undefined")
    modes = range(1, x.order + 1)
    vectors = tuple(map_fn(lambda mode: _mode_vector(x, mode, counter), modes))
    cur = x.data
    for v in vectors:
        if counter is not None:
            counter.add(cur.size)
        cur = np.tensordot(v.conj(), cur, axes=(0, 0))
    return RankOneFactors(vectors, complex(cur))

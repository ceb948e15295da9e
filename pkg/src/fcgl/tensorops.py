"""Order-d complex tensor kernels: mu-mode products and the Tucker operator.

State tensors are plain numpy arrays of shape (n_1, ..., n_d) whose
linearization convention is first-index-fastest (column stacking): the
element (j_1, ..., j_d), with 1-based indices, sits at linear position

    j = j_1 + sum_{mu=2}^{d} n_1 ... n_{mu-1} (j_mu - 1),

which is exactly ``np.ravel(..., order='F')``.  All kernels keep state in
Fortran order and realize mode products as loops over GEMMs on contiguous
slabs; the full tensor is never permuted in memory.
"""

from __future__ import annotations

import csv
import struct
from math import prod

import numpy as np


def vec_index(multi_index, dims) -> int:
    """Linear (1-based) position of a 1-based multi-index."""
    j = 0
    stride = 1
    for jm, nm in zip(multi_index, dims, strict=True):
        if not 1 <= jm <= nm:
            raise IndexError(f"index {jm} out of range 1..{nm}")
        j += stride * (jm - 1)
        stride *= nm
    return j + 1


def multi_index(j: int, dims) -> tuple[int, ...]:
    """Inverse of :func:`vec_index`."""
    n_total = prod(dims)
    if not 1 <= j <= n_total:
        raise IndexError(f"linear index {j} out of range 1..{n_total}")
    rem = j - 1
    out = []
    for nm in dims:
        out.append(rem % nm + 1)
        rem //= nm
    return tuple(out)


def vec(t: np.ndarray) -> np.ndarray:
    """Column-stacked view/copy of a tensor (first index fastest)."""
    return t.reshape(-1, order="F")


def unvec(v: np.ndarray, dims) -> np.ndarray:
    return np.reshape(v, tuple(dims), order="F")


def mu_mode_product(t: np.ndarray, m: np.ndarray, mu: int) -> np.ndarray:
    """Multiply the matrix ``m`` onto every mu-fiber of ``t`` (mu is 1-based).

    For d = 2 this is ``m @ t`` for mu = 1 and ``(m @ t.T).T`` for mu = 2.
    Realized as GEMMs over contiguous slabs of the Fortran-ordered data.
    """
    d = t.ndim
    if not 1 <= mu <= d:
        raise ValueError(f"mode {mu} out of range 1..{d}")
    m = np.asarray(m)
    ax = mu - 1
    nm = t.shape[ax]
    if m.shape != (nm, nm):
        raise ValueError(f"matrix {m.shape} does not match fiber length {nm} of mode {mu}")
    t = np.asfortranarray(t)
    dtype = np.result_type(t.dtype, m.dtype)
    out = np.empty(t.shape, dtype=dtype, order="F")
    left = prod(t.shape[:ax])
    right = prod(t.shape[ax + 1 :])
    if ax == 0:
        src = t.reshape((nm, right), order="F")
        np.matmul(m, src, out=out.reshape((nm, right), order="F"))
    elif right == 1:
        src = t.reshape((left, nm), order="F")
        np.matmul(src, m.T, out=out.reshape((left, nm), order="F"))
    else:
        src = t.reshape((left, nm, right), order="F")
        dst = out.reshape((left, nm, right), order="F")
        mt = np.ascontiguousarray(m.T)
        for r in range(right):
            np.matmul(src[:, :, r], mt, out=dst[:, :, r])
    return out


def tucker(t: np.ndarray, matrices) -> np.ndarray:
    """Apply one matrix per mode: t x_1 M_1 x_2 ... x_d M_d.

    Equivalent to ``unvec((M_d kron ... kron M_1) @ vec(t))``.  A ``None``
    entry skips its mode (identity factor).
    """
    matrices = list(matrices)
    if len(matrices) != t.ndim:
        raise ValueError(f"expected {t.ndim} matrices, got {len(matrices)}")
    out = t
    for mu, m in enumerate(matrices, start=1):
        if m is not None:
            out = mu_mode_product(out, m, mu)
    return out


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.asfortranarray(a * b)


def pointwise_map(t: np.ndarray, fn) -> np.ndarray:
    return np.asfortranarray(fn(t))


def linear_combine(terms) -> np.ndarray:
    """Fused sum of (coefficient, tensor) pairs."""
    terms = list(terms)
    if not terms:
        raise ValueError("need at least one term")
    shape = terms[0][1].shape
    for _, t in terms:
        if t.shape != shape:
            raise ValueError(f"shape mismatch {t.shape} vs {shape}")
    coef0, t0 = terms[0]
    out = np.asfortranarray(coef0 * t0)
    for coef, t in terms[1:]:
        out += coef * t
    return out


_MAGIC = b"CTNS"


def write_tensor(path, t: np.ndarray) -> None:
    """Flat binary record: int64 order d, int64 dims, then interleaved
    re/im float64 payload in first-index-fastest order."""
    data = np.asarray(t, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q", data.ndim))
        fh.write(struct.pack(f"<{data.ndim}q", *data.shape))
        fh.write(vec(data).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a tensor snapshot")
        (d,) = struct.unpack("<q", fh.read(8))
        dims = struct.unpack(f"<{d}q", fh.read(8 * d))
        flat = np.frombuffer(fh.read(), dtype=np.complex128)
    if flat.size != prod(dims):
        raise ValueError(f"{path}: payload size {flat.size} does not match dims {dims}")
    return unvec(flat.copy(), dims)


def write_abs_csv(path, t: np.ndarray, axes=None) -> None:
    """CSV of |u| over the grid, one row per entry.

    With ``axes`` (per-direction coordinate vectors) the rows carry physical
    coordinates, otherwise 1-based grid indices.
    """
    d = t.ndim
    if axes is not None and len(axes) != d:
        raise ValueError(f"expected {d} coordinate vectors, got {len(axes)}")
    mags = np.abs(vec(t))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if axes is None:
            writer.writerow([f"j{mu}" for mu in range(1, d + 1)] + ["abs_u"])
        else:
            writer.writerow([f"x{mu}" for mu in range(1, d + 1)] + ["abs_u"])
        for j, value in enumerate(mags, start=1):
            idx = multi_index(j, t.shape)
            if axes is None:
                row = list(idx)
            else:
                row = [f"{axes[mu][idx[mu] - 1]:.17g}" for mu in range(d)]
            writer.writerow(row + [f"{value:.17g}"])

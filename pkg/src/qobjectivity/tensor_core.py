"""Dense complex linear algebra over labeled tensor factors.

Composite indexing is row major with the leftmost factor most significant:
for dims (d0, d1, d2) the flat index of (i0, i1, i2) is i0*d1*d2 + i1*d2 + i2.
This matches numpy's C-order ``reshape`` and ``np.kron``, so no reordering is
ever needed between the two. All builders return fresh ``complex128`` arrays.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np

from .errors import DimensionCapExceeded, NotHermitian, ShapeError

# Largest entry count a single produced matrix may hold. 2**26 complex entries
# is 1 GiB; anything bigger is almost certainly a mistake at this scale.
DEFAULT_ENTRY_CAP = 2**26

# Relative Hermiticity tolerance, scaled by the Frobenius norm of the input.
HERMITICITY_RTOL = 1e-10


def as_complex_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite two-dimensional complex128 array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array of ndim {a.ndim}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ShapeError("matrix entries must be finite")
    return a


def as_complex_vector(v) -> np.ndarray:
    """Coerce ``v`` to a finite one-dimensional complex128 array."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ShapeError("vector entries must be finite")
    return a


def check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    """Validate a subsystem dimension list: nonempty, all integers >= 1."""
    out = []
    for d in dims:
        di = int(d)
        if di != d or di < 1:
            raise ShapeError(f"subsystem dimension {d!r} is not a positive integer")
        out.append(di)
    if not out:
        raise ShapeError("dims must name at least one subsystem")
    return tuple(out)


def kron(a, b, entry_cap: int = DEFAULT_ENTRY_CAP) -> np.ndarray:
    """Tensor product of two matrices, capped at ``entry_cap`` result entries."""
    am = as_complex_matrix(a)
    bm = as_complex_matrix(b)
    entries = am.shape[0] * bm.shape[0] * am.shape[1] * bm.shape[1]
    if entries > entry_cap:
        raise DimensionCapExceeded(
            f"kron result would hold {entries} entries, cap is {entry_cap}",
            violation=float(entries),
        )
    return np.kron(am, bm)


def kron_all(mats: Sequence, entry_cap: int = DEFAULT_ENTRY_CAP) -> np.ndarray:
    """Left-to-right tensor product of a nonempty sequence of matrices."""
    if len(mats) == 0:
        raise ShapeError("kron_all needs at least one factor")
    out = as_complex_matrix(mats[0])
    for m in mats[1:]:
        out = kron(out, m, entry_cap=entry_cap)
    return out


def kron_vectors(vecs: Sequence) -> np.ndarray:
    """Tensor product of state vectors, leftmost most significant."""
    if len(vecs) == 0:
        raise ShapeError("kron_vectors needs at least one factor")
    out = as_complex_vector(vecs[0])
    for v in vecs[1:]:
        out = np.kron(out, as_complex_vector(v))
    return out


def partial_trace(m, dims: Iterable[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``m`` must be square over the composite space of ``dims``. ``keep`` is a
    set of subsystem indices; the output keeps them in their original order,
    regardless of the order they are given in.
    """
    a = as_complex_matrix(m)
    dt = check_dims(dims)
    n = len(dt)
    total = math.prod(dt)
    if a.shape != (total, total):
        raise ShapeError(f"matrix shape {a.shape} does not match dims {dt}")
    keep_list = sorted({int(k) for k in keep})
    if not keep_list:
        raise ShapeError("keep must name at least one subsystem")
    if keep_list[0] < 0 or keep_list[-1] >= n:
        raise ShapeError(f"keep indices {keep_list} out of range for {n} subsystems")

    drop = [i for i in range(n) if i not in keep_list]
    t = a.reshape(dt + dt)
    remaining = n
    # Trace highest dropped axis first so lower axis positions stay valid.
    for ax in reversed(drop):
        t = np.trace(t, axis1=ax, axis2=ax + remaining)
        remaining -= 1
    d_keep = math.prod(dt[i] for i in keep_list)
    return np.ascontiguousarray(t.reshape(d_keep, d_keep))


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvectors as columns). The input is
    rejected if its anti-Hermitian part exceeds HERMITICITY_RTOL times its
    Frobenius norm; the symmetrized matrix (h + h^dagger)/2 is what gets
    decomposed, so the tiny allowed asymmetry never leaks into the output.
    """
    a = as_complex_matrix(h)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"matrix of shape {a.shape} is not square")
    scale = np.linalg.norm(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > HERMITICITY_RTOL * scale:
        raise NotHermitian(
            f"anti-Hermitian part has norm {dev:.3e}, tolerance {HERMITICITY_RTOL * scale:.3e}",
            violation=float(dev),
        )
    sym = (a + a.conj().T) / 2
    vals, vecs = np.linalg.eigh(sym)
    return vals, vecs


def unitary_from_hamiltonian(h, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, built from the eigendecomposition.

    This is the only matrix-exponential route in the package core; there is
    deliberately no general expm here.
    """
    vals, vecs = eig_hermitian(h)
    phases = np.exp(-1j * vals * float(t))
    return (vecs * phases) @ vecs.conj().T


def frobenius(m) -> float:
    """Frobenius norm, the distance used for every residual in this package."""
    return float(np.linalg.norm(np.asarray(m)))

"""State containers and information measures.

A :class:`Ket` is a normalized state vector tagged with an ordered tuple of
subsystem dimensions; a :class:`DensityMatrix` is the mixed-state analogue.
Construction performs the cheap checks (shape, finiteness, normalization,
Hermiticity, unit trace). Positivity needs a full eigendecomposition, so it
is enforced by :func:`validate_density` at input boundaries rather than on
every construction; routines that would silently misbehave on non-positive
input (the entropies) still guard against it.

All entropies use the natural logarithm.

JSON layout, shared with the command line tools:

* ket:     ``{"dims": [...], "amplitudes": [[re, im], ...]}``
* density: ``{"dims": [...], "matrix": [[[re, im], ...], ...]}`` (row major)
* basis:   ``{"label": int, "kets": [<ket>, ...]}``

Floats are emitted by ``json`` from Python floats, i.e. via ``repr``, which
round-trips IEEE doubles bit exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor_core as tc
from .errors import (
    BasisNotOrthonormal,
    DegenerateBranches,
    NormalizationError,
    NotHermitian,
    NotPSD,
    NotUnitTrace,
    PartitionError,
    ShapeError,
)

NORM_ATOL = 1e-10          # |norm - 1| allowed for kets
TRACE_ATOL = 1e-10         # |trace - 1| allowed for densities
PSD_ATOL = 1e-10           # eigenvalues above -PSD_ATOL count as nonnegative
ORTHO_DEFAULT_TOL = 1e-8   # orthonormality checks unless the caller overrides
INDEPENDENCE_TOL = 1e-10   # smallest singular value for linear independence


@dataclass
class Ket:
    """Normalized state vector over an ordered tuple of subsystem dimensions."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.dims = tc.check_dims(self.dims)
        amps = tc.as_complex_vector(self.amplitudes)
        if amps.size != math.prod(self.dims):
            raise ShapeError(f"{amps.size} amplitudes do not fill dims {self.dims}")
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > NORM_ATOL:
            raise NormalizationError(
                f"ket norm is {nrm!r}, expected 1", violation=abs(nrm - 1.0)
            )
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: Ket) -> complex:
        """<self|other>."""
        if self.dims != other.dims:
            raise ShapeError(f"dims {self.dims} vs {other.dims} do not match")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass
class DensityMatrix:
    """Hermitian unit-trace operator tagged with subsystem dimensions.

    Positivity is not checked here (see module docstring); use
    :func:`validate_density` when reading untrusted input.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.dims = tc.check_dims(self.dims)
        m = tc.as_complex_matrix(self.matrix)
        d = math.prod(self.dims)
        if m.shape != (d, d):
            raise ShapeError(f"matrix shape {m.shape} does not match dims {self.dims}")
        scale = float(np.linalg.norm(m))
        dev = float(np.linalg.norm(m - m.conj().T))
        if dev > 1e-10 * scale:
            raise NotHermitian(
                f"density deviates from Hermiticity by {dev:.3e}", violation=dev
            )
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise NotUnitTrace(f"trace is {tr!r}, expected 1", violation=abs(tr - 1.0))
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class BranchBasis:
    """Ordered family of normalized kets on one subsystem.

    The kets must be linearly independent (smallest singular value of the
    stacked matrix above INDEPENDENCE_TOL) but need not be orthogonal; branch
    records of imperfect observers overlap.
    """

    label: int
    kets: list[Ket] = field(default_factory=list)

    def __post_init__(self):
        if not self.kets:
            raise ShapeError("a branch basis needs at least one ket")
        d = self.kets[0].dim
        for k in self.kets:
            if k.dim != d:
                raise ShapeError("branch kets live on differently sized spaces")
        sv = np.linalg.svd(self.matrix(), compute_uv=False)
        if sv[-1] <= INDEPENDENCE_TOL:
            raise DegenerateBranches(
                f"branch kets are linearly dependent (smallest singular value {sv[-1]:.3e})",
                violation=float(sv[-1]),
            )

    @property
    def size(self) -> int:
        return len(self.kets)

    @property
    def dim(self) -> int:
        return self.kets[0].dim

    def matrix(self) -> np.ndarray:
        """Kets stacked as columns, shape (dim, size)."""
        return np.column_stack([k.amplitudes for k in self.kets])


def density_from_ket(ket: Ket) -> DensityMatrix:
    """Rank-one projector |psi><psi| with the ket's dims."""
    a = ket.amplitudes
    return DensityMatrix(np.outer(a, a.conj()), ket.dims)


def reduced_density(state: Ket | DensityMatrix, keep) -> DensityMatrix:
    """Reduced density over the kept subsystems, original ordering preserved.

    For a Ket this contracts the vector with itself over the dropped axes and
    never materializes the full projector, so it stays cheap for large pure
    states.
    """
    keep_list = sorted({int(k) for k in keep})
    dims = state.dims
    n = len(dims)
    if not keep_list:
        raise ShapeError("keep must name at least one subsystem")
    if keep_list[0] < 0 or keep_list[-1] >= n:
        raise ShapeError(f"keep indices {keep_list} out of range for {n} subsystems")
    kept_dims = tuple(dims[i] for i in keep_list)

    if isinstance(state, Ket):
        drop = [i for i in range(n) if i not in keep_list]
        t = state.amplitudes.reshape(dims).transpose(keep_list + drop)
        m = t.reshape(math.prod(kept_dims), -1)
        return DensityMatrix(m @ m.conj().T, kept_dims)
    return DensityMatrix(tc.partial_trace(state.matrix, dims, keep_list), kept_dims)


def _entropy_from_probabilities(p: np.ndarray, what: str) -> float:
    p = np.asarray(p, dtype=float)
    low = float(p.min()) if p.size else 0.0
    if low < -PSD_ATOL:
        raise NotPSD(f"{what} has weight {low!r} below zero", violation=-low)
    p = np.clip(p, 0.0, None)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr(rho ln rho); zero for pure states, ln(d) for maximally mixed."""
    vals, _ = tc.eig_hermitian(rho.matrix)
    return _entropy_from_probabilities(vals, "spectrum")


def shannon_entropy(p) -> float:
    """-sum p ln p for a probability vector (weights clipped at -1e-10)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    total = float(p.sum())
    if abs(total - 1.0) > 1e-8:
        raise NormalizationError(
            f"probabilities sum to {total!r}, expected 1", violation=abs(total - 1.0)
        )
    return _entropy_from_probabilities(p, "probability vector")


def gram(basis: BranchBasis) -> np.ndarray:
    """Gram matrix G[s, r] = <ket_s|ket_r>, shape (size, size)."""
    v = basis.matrix()
    return v.conj().T @ v


def basis_entropy(rho: DensityMatrix, basis: BranchBasis,
                  tol: float = ORTHO_DEFAULT_TOL) -> float:
    """Shannon entropy of the populations of rho in a complete orthonormal basis.

    The basis must contain exactly dim kets and satisfy
    max |G - I| <= tol entrywise; otherwise BasisNotOrthonormal is raised.
    """
    if basis.dim != rho.dim:
        raise ShapeError(f"basis dim {basis.dim} does not match state dim {rho.dim}")
    if basis.size != rho.dim:
        raise ShapeError(
            f"basis holds {basis.size} kets but the space needs {rho.dim} to be complete"
        )
    g = gram(basis)
    dev = float(np.max(np.abs(g - np.eye(basis.size))))
    if dev > tol:
        raise BasisNotOrthonormal(
            f"basis deviates from orthonormality by {dev:.3e}", violation=dev
        )
    v = basis.matrix()
    populations = np.real(np.einsum("is,ij,js->s", v.conj(), rho.matrix, v))
    return _entropy_from_probabilities(populations, "populations")


def mutual_information(rho: DensityMatrix, cut) -> float:
    """I(A:B) = H(A) + H(B) - H(AB) across the subsystem cut.

    ``cut`` lists the subsystem indices of side A; side B is the complement.
    Either side being empty is a PartitionError, as are duplicates and
    out-of-range indices.
    """
    n = len(rho.dims)
    cut_list = [int(c) for c in cut]
    if len(set(cut_list)) != len(cut_list):
        raise PartitionError(f"cut {cut_list} repeats a subsystem")
    if any(c < 0 or c >= n for c in cut_list):
        raise PartitionError(f"cut {cut_list} out of range for {n} subsystems")
    side_a = sorted(cut_list)
    side_b = [i for i in range(n) if i not in side_a]
    if not side_a or not side_b:
        raise PartitionError("cut must leave a nonempty subsystem on both sides")
    h_a = von_neumann_entropy(reduced_density(rho, side_a))
    h_b = von_neumann_entropy(reduced_density(rho, side_b))
    h_ab = von_neumann_entropy(rho)
    return h_a + h_b - h_ab


def validate_density(m, dims) -> DensityMatrix:
    """Full density-matrix validation: Hermitian, unit trace, and PSD.

    Raises NotHermitian / NotUnitTrace / NotPSD with the measured violation;
    returns the constructed DensityMatrix on success.
    """
    rho = DensityMatrix(m, tuple(dims))  # shape, Hermiticity, trace
    vals = np.linalg.eigvalsh((rho.matrix + rho.matrix.conj().T) / 2)
    low = float(vals[0])
    if low < -PSD_ATOL:
        raise NotPSD(f"least eigenvalue is {low!r}", violation=-low)
    return rho


# ---------------------------------------------------------------------------
# JSON layer


def _pairs_to_complex(pairs, what: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ShapeError(f"{what} must be nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def ket_to_json(ket: Ket) -> dict:
    return {
        "dims": [int(d) for d in ket.dims],
        "amplitudes": [[float(z.real), float(z.imag)] for z in ket.amplitudes],
    }


def ket_from_json(obj: dict) -> Ket:
    if not isinstance(obj, dict) or "dims" not in obj or "amplitudes" not in obj:
        raise ShapeError("ket JSON needs 'dims' and 'amplitudes'")
    amps = _pairs_to_complex(obj["amplitudes"], "amplitudes")
    if amps.ndim != 1:
        raise ShapeError("ket amplitudes must be a flat list of pairs")
    return Ket(amps, tuple(obj["dims"]))


def density_to_json(rho: DensityMatrix) -> dict:
    return {
        "dims": [int(d) for d in rho.dims],
        "matrix": [
            [[float(z.real), float(z.imag)] for z in row] for row in rho.matrix
        ],
    }


def density_from_json(obj: dict) -> DensityMatrix:
    if not isinstance(obj, dict) or "dims" not in obj or "matrix" not in obj:
        raise ShapeError("density JSON needs 'dims' and 'matrix'")
    m = _pairs_to_complex(obj["matrix"], "matrix")
    if m.ndim != 2:
        raise ShapeError("density matrix must be a nested list of rows of pairs")
    return validate_density(m, tuple(obj["dims"]))


def basis_to_json(basis: BranchBasis) -> dict:
    return {"label": int(basis.label), "kets": [ket_to_json(k) for k in basis.kets]}


def basis_from_json(obj: dict) -> BranchBasis:
    if not isinstance(obj, dict) or "label" not in obj or "kets" not in obj:
        raise ShapeError("basis JSON needs 'label' and 'kets'")
    return BranchBasis(int(obj["label"]), [ket_from_json(k) for k in obj["kets"]])

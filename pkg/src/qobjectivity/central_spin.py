"""Central-spin measurement model and Loschmidt echoes.

One central two-level system (ground g, excited e, energy gap E on e) couples
to N = N1 + N2 bath spins split into two observer blocks. Each bath spin i
feels a z field omega_i and a transverse coupling g_i; when the central spin
is excited, the z field shifts by eta_i. Conventions: sigma_z = diag(1, -1),
sigma_x off-diagonal ones, hbar = 1, bath spins start in |up> = (1, 0), the
central index orders (g, e).

Because the coupling is diagonal in the central-spin basis, every bath spin
evolves under one of two effective 2x2 rotations, so echoes factorize into
per-spin overlaps. Two echo variants are kept deliberately separate:

* ``loschmidt_echo_direct``: magnitude of the exact product of per-spin
  branch overlaps. This is ground truth.
* ``loschmidt_echo_paper_formula``: the closed-form product of per-branch
  survival probabilities (1 - sin^2(mu t) sin^2(phi)) for both branches.
  It is not the same quantity; it is computed for comparison output only.

``statevector_oracle`` cross-checks the factorized route by brute force on
the full 2^(N+1) state vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import DimensionCapExceeded, NormalizationError, ShapeError
from .quantum_state import BranchBasis, Ket

ORACLE_CAP = 14  # largest N for the brute-force state vector

_SZ = np.diag([1.0, -1.0]).astype(complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass
class CentralSpinParams:
    """Model parameters; arrays run over the N1 + N2 bath spins in order."""

    n1: int
    n2: int
    omega: np.ndarray
    g: np.ndarray
    eta: np.ndarray
    e_gap: float = 0.0

    def __post_init__(self):
        self.n1 = int(self.n1)
        self.n2 = int(self.n2)
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise ShapeError(f"invalid block sizes ({self.n1}, {self.n2})")
        n = self.n1 + self.n2
        for name in ("omega", "g", "eta"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.size != n:
                raise ShapeError(f"{name} has {arr.size} entries, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"{name} must be finite")
            setattr(self, name, arr)
        self.e_gap = float(self.e_gap)
        if not math.isfinite(self.e_gap):
            raise ShapeError("e_gap must be finite")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def block_range(self, block: int) -> range:
        if block == 1:
            return range(0, self.n1)
        if block == 2:
            return range(self.n1, self.n)
        raise ShapeError(f"block must be 1 or 2, got {block!r}")

    @classmethod
    def uniform(
        cls,
        n1: int,
        n2: int,
        mu_g: float = 1.0,
        mu_e: float = 1.2,
        g: float = 0.2,
        e_gap: float = 0.0,
    ) -> CentralSpinParams:
        """Identical spins with the precession rates fixed instead of the fields.

        omega and eta are back-solved from the target branch rates:
        omega = sqrt(mu_g^2 - g^2), omega + eta = sqrt(mu_e^2 - g^2).
        """
        if abs(g) > mu_g or abs(g) > mu_e:
            raise ValueError(
                f"transverse coupling {g} exceeds a target rate ({mu_g}, {mu_e})"
            )
        n = int(n1) + int(n2)
        omega = math.sqrt(mu_g**2 - g**2)
        eta = math.sqrt(mu_e**2 - g**2) - omega
        return cls(
            n1=int(n1),
            n2=int(n2),
            omega=np.full(n, omega),
            g=np.full(n, g),
            eta=np.full(n, eta),
            e_gap=e_gap,
        )


def spin_rotation(omega: float, g: float, shift: float, t: float) -> np.ndarray:
    """Effective single-spin unitary exp(-i t ((omega+shift) sz + g sx)).

    Closed form cos(mu t) I - i sin(mu t)(cos(phi) sz + sin(phi) sx) with
    mu = sqrt((omega+shift)^2 + g^2) and sin(phi) = g/mu; the mu = 0 edge is
    the identity.
    """
    w = float(omega) + float(shift)
    mu = math.hypot(w, float(g))
    if mu == 0.0:
        return np.eye(2, dtype=complex)
    c, s = math.cos(mu * t), math.sin(mu * t)
    cos_phi, sin_phi = w / mu, float(g) / mu
    return c * np.eye(2, dtype=complex) - 1j * s * (cos_phi * _SZ + sin_phi * _SX)


def branch_overlap_single(omega: float, g: float, eta: float, t: float) -> complex:
    """<up| R_g(t)^dagger R_e(t) |up> for one bath spin, in closed form."""
    w_g = float(omega)
    w_e = float(omega) + float(eta)
    mu_g = math.hypot(w_g, float(g))
    mu_e = math.hypot(w_e, float(g))
    cph_g = w_g / mu_g if mu_g else 1.0
    sph_g = float(g) / mu_g if mu_g else 0.0
    cph_e = w_e / mu_e if mu_e else 1.0
    sph_e = float(g) / mu_e if mu_e else 0.0
    c_g, s_g = math.cos(mu_g * t), math.sin(mu_g * t)
    c_e, s_e = math.cos(mu_e * t), math.sin(mu_e * t)
    real = c_g * c_e + s_g * s_e * (cph_g * cph_e + sph_g * sph_e)
    imag = s_g * cph_g * c_e - c_g * s_e * cph_e
    return complex(real, imag)


def loschmidt_echo_direct(params: CentralSpinParams, block: int, t: float) -> float:
    """Magnitude of the exact branch overlap of one observer block.

    The product of per-spin overlap magnitudes; an empty block gives 1.
    """
    out = 1.0
    for i in params.block_range(block):
        out *= abs(branch_overlap_single(params.omega[i], params.g[i], params.eta[i], t))
    return out


def loschmidt_echo_paper_formula(params: CentralSpinParams, block: int, t: float) -> float:
    """Closed-form comparison variant: product of branch survival probabilities.

    Per spin, (1 - sin^2(mu_e t) sin^2(phi_e)) (1 - sin^2(mu_g t) sin^2(phi_g)),
    i.e. |<up|R_e|up>|^2 |<up|R_g|up>|^2. Kept alongside the direct echo so the
    discrepancy between the two can be reported, never merged with it.
    """
    out = 1.0
    for i in params.block_range(block):
        w_g = params.omega[i]
        w_e = params.omega[i] + params.eta[i]
        g = params.g[i]
        mu_g = math.hypot(w_g, g)
        mu_e = math.hypot(w_e, g)
        sph2_g = (g / mu_g) ** 2 if mu_g else 0.0
        sph2_e = (g / mu_e) ** 2 if mu_e else 0.0
        out *= (1.0 - math.sin(mu_e * t) ** 2 * sph2_e) * (
            1.0 - math.sin(mu_g * t) ** 2 * sph2_g
        )
    return out


@dataclass
class EchoSeries:
    """Both echo variants per block on a shared time grid."""

    times: np.ndarray
    direct_block1: np.ndarray
    direct_block2: np.ndarray
    paper_block1: np.ndarray
    paper_block2: np.ndarray
    n1: int = 0
    n2: int = 0

    def columns(self) -> list[tuple[str, np.ndarray]]:
        """CSV column layout, in contract order."""
        return [
            ("t", self.times),
            ("echo_direct_block1", self.direct_block1),
            ("echo_direct_block2", self.direct_block2),
            ("echo_paper_block1", self.paper_block1),
            ("echo_paper_block2", self.paper_block2),
        ]


def echo_series(params: CentralSpinParams, t_grid) -> EchoSeries:
    """Evaluate both echo variants per block on a strictly increasing grid."""
    times = np.asarray(t_grid, dtype=float).reshape(-1)
    if times.size < 1 or not np.all(np.isfinite(times)):
        raise ShapeError("time grid must be nonempty and finite")
    if times[0] < 0 or (times.size > 1 and np.any(np.diff(times) <= 0)):
        raise ShapeError("time grid must be nonnegative and strictly increasing")
    return EchoSeries(
        times=times,
        direct_block1=np.array([loschmidt_echo_direct(params, 1, t) for t in times]),
        direct_block2=np.array([loschmidt_echo_direct(params, 2, t) for t in times]),
        paper_block1=np.array(
            [loschmidt_echo_paper_formula(params, 1, t) for t in times]
        ),
        paper_block2=np.array(
            [loschmidt_echo_paper_formula(params, 2, t) for t in times]
        ),
        n1=params.n1,
        n2=params.n2,
    )


# ---------------------------------------------------------------------------
# Factorized branch construction and the brute-force oracle


def branch_block_state(params: CentralSpinParams, block: int, branch: str, t: float) -> Ket:
    """Tensor product of the block's spins rotated under one branch Hamiltonian."""
    if branch not in ("g", "e"):
        raise ShapeError(f"branch must be 'g' or 'e', got {branch!r}")
    idx = list(params.block_range(block))
    if not idx:
        return Ket(np.ones(1), (1,))
    up = np.array([1.0, 0.0], dtype=complex)
    amps = np.ones(1, dtype=complex)
    for i in idx:
        shift = params.eta[i] if branch == "e" else 0.0
        amps = np.kron(amps, spin_rotation(params.omega[i], params.g[i], shift, t) @ up)
    return Ket(amps, (2,) * len(idx))


def factorized_state(
    params: CentralSpinParams, t: float, c_g: complex, c_e: complex
) -> Ket:
    """Branch form c_g |g> x Psi_g(t) + c_e e^{-iEt} |e> x Psi_e(t).

    Psi_b(t) is the product of per-spin rotations of the all-up bath state.
    Grouped as (central, block 1, block 2) for direct comparison with the
    oracle output.
    """
    _check_central_amplitudes(c_g, c_e)
    d1, d2 = 2**params.n1, 2**params.n2
    amps = np.zeros(2 * d1 * d2, dtype=complex)
    for offset, c, branch in ((0, c_g, "g"), (1, c_e, "e"),):
        bath = np.kron(
            branch_block_state(params, 1, branch, t).amplitudes,
            branch_block_state(params, 2, branch, t).amplitudes,
        )
        phase = np.exp(-1j * params.e_gap * t) if branch == "e" else 1.0
        amps[offset * d1 * d2 : (offset + 1) * d1 * d2] = c * phase * bath
    return Ket(amps, (2, d1, d2))


def _check_central_amplitudes(c_g: complex, c_e: complex) -> None:
    total = abs(c_g) ** 2 + abs(c_e) ** 2
    if abs(total - 1.0) > 1e-10:
        raise NormalizationError(
            f"|c_g|^2 + |c_e|^2 = {total!r}, expected 1", violation=abs(total - 1.0)
        )


def _embed(op: np.ndarray, i: int, n: int) -> sp.csr_matrix:
    left = sp.identity(2**i, format="csr", dtype=complex)
    right = sp.identity(2 ** (n - i - 1), format="csr", dtype=complex)
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def assemble_sparse_hamiltonian(params: CentralSpinParams) -> sp.csc_matrix:
    """Full (N+1)-spin Hamiltonian as a sparse matrix, central factor leftmost."""
    n = params.n
    h_base = sp.csr_matrix((2**n, 2**n), dtype=complex)
    h_shift = sp.csr_matrix((2**n, 2**n), dtype=complex)
    for i in range(n):
        h_base = h_base + params.omega[i] * _embed(_SZ, i, n) + params.g[i] * _embed(_SX, i, n)
        h_shift = h_shift + params.eta[i] * _embed(_SZ, i, n)
    i2 = sp.identity(2, format="csr", dtype=complex)
    p_e = sp.csr_matrix(np.diag([0.0, 1.0]).astype(complex))
    h = (
        sp.kron(i2, h_base)
        + sp.kron(p_e, h_shift)
        + params.e_gap * sp.kron(p_e, sp.identity(2**n, format="csr", dtype=complex))
    )
    return h.tocsc()


def statevector_oracle(
    params: CentralSpinParams,
    t: float,
    c_g: complex = 1.0 / math.sqrt(2.0),
    c_e: complex = 1.0 / math.sqrt(2.0),
    cap: int = ORACLE_CAP,
) -> Ket:
    """Brute-force evolution of the full state vector, no factorization assumed.

    Starts from (c_g, c_e) on the central spin and all bath spins up, applies
    exp(-iHt) of the assembled sparse Hamiltonian via a Krylov-style action
    (never materializing the exponential), and returns the state grouped as
    (central, block 1, block 2). This is the independent check against the
    per-spin closed forms above; it shares none of their algebra.
    """
    if params.n > cap:
        raise DimensionCapExceeded(
            f"N = {params.n} exceeds the oracle cap {cap}", violation=float(params.n)
        )
    _check_central_amplitudes(c_g, c_e)
    bath_up = np.zeros(2**params.n, dtype=complex)
    bath_up[0] = 1.0
    psi0 = np.kron(np.array([c_g, c_e], dtype=complex), bath_up)
    if t == 0.0:
        return Ket(psi0, (2, 2**params.n1, 2**params.n2))
    h = assemble_sparse_hamiltonian(params)
    psi_t = expm_multiply(-1j * float(t) * h, psi0)
    return Ket(psi_t, (2, 2**params.n1, 2**params.n2))


def oracle_block_echo(psi: Ket, block: int) -> float:
    """Per-block echo read off a (central, block 1, block 2) state.

    Conditions on the central index, reduces each branch to the block, and
    returns sqrt(Tr(rho_g rho_e)); for branch states that factorize across
    blocks this equals the overlap magnitude of the block's branch states.
    """
    if len(psi.dims) != 3 or psi.dims[0] != 2:
        raise ShapeError(f"(central, block 1, block 2) state expected, got dims {psi.dims}")
    if block not in (1, 2):
        raise ShapeError(f"block must be 1 or 2, got {block!r}")
    amps = psi.amplitudes.reshape(2, psi.dims[1], psi.dims[2])
    w_g, w_e = amps[0], amps[1]
    n_g, n_e = np.linalg.norm(w_g), np.linalg.norm(w_e)
    if n_g < 1e-12 or n_e < 1e-12:
        raise ShapeError("a central branch carries no weight; block echo undefined")
    w_g = w_g / n_g
    w_e = w_e / n_e
    if block == 1:
        rho_g = w_g @ w_g.conj().T
        rho_e = w_e @ w_e.conj().T
    else:
        rho_g = w_g.T @ w_g.conj()
        rho_e = w_e.T @ w_e.conj()
    val = complex(np.trace(rho_g @ rho_e))
    return float(math.sqrt(max(0.0, val.real)))


# ---------------------------------------------------------------------------
# Many-observer record overlaps


def record_bases(params: CentralSpinParams, t: float) -> list[BranchBasis]:
    """Per-spin record pairs [R_g |up>, R_e |up>], one basis per bath spin."""
    up = np.array([1.0, 0.0], dtype=complex)
    out = []
    for i in range(params.n):
        k_g = spin_rotation(params.omega[i], params.g[i], 0.0, t) @ up
        k_e = spin_rotation(params.omega[i], params.g[i], params.eta[i], t) @ up
        out.append(BranchBasis(i, [Ket(k_g, (2,)), Ket(k_e, (2,))]))
    return out


def block_overlap(
    per_observer_bases: list[BranchBasis], n: int, s: int, k: int, block: int = 1
) -> complex:
    """<d_s|d_k> for one observer block, as an exact product of per-observer overlaps.

    ``per_observer_bases`` lists each observer's record kets; observers up to
    the partition point ``n`` form block 1, the rest block 2. No composite
    matrices are assembled, so the block size is unbounded.
    """
    if block not in (1, 2):
        raise ShapeError(f"block must be 1 or 2, got {block!r}")
    if n < 0 or n > len(per_observer_bases):
        raise ShapeError(
            f"partition point {n} out of range for {len(per_observer_bases)} observers"
        )
    members = per_observer_bases[:n] if block == 1 else per_observer_bases[n:]
    out = complex(1.0)
    for basis in members:
        if s < 0 or k < 0 or s >= basis.size or k >= basis.size:
            raise ShapeError(f"branch pair ({s}, {k}) out of range for basis {basis.label}")
        out *= basis.kets[s].overlap(basis.kets[k])
    return out

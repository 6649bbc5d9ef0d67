"""State preparation: non-demolition premeasurement, GHZ assembly, named scenarios.

A premeasurement couples a system S to two observers D and D' without
disturbing the preferred system basis. Couplings are specified branch-wise:
for each preferred ket |s> the observers evolve under their own Hermitian
generators h_s(D) and h_s(D'), so the non-demolition structure holds by
construction instead of by runtime accident:

    H = sum_s |s><s| (x) [ E_s + h_s(D) (x) 1 + 1 (x) h_s(D') ]

The named scenarios build the package's standard demonstration states: a
three-observer Bell test with commuting record unitaries and a witness that
copies one observer's record, and an observer whose records cannot tell two
branches apart.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import tensor_core as tc
from .errors import (
    BasisNotOrthonormal,
    DegenerateBranches,
    NormalizationError,
    NotHermitian,
    ShapeError,
)
from .objectivity import ObjectivityReport, check_objectivity, classical_projection
from .quantum_state import (
    BranchBasis,
    DensityMatrix,
    Ket,
    density_from_ket,
    gram,
    ket_to_json,
    reduced_density,
)

PREFERRED_BASIS_TOL = 1e-10


@dataclass
class NonDemolitionCoupling:
    """Branch-wise measurement coupling.

    ``system_basis`` must be a complete orthonormal basis of the system space
    (the preferred basis). ``system_energies`` lists E_s. The generator lists
    hold one Hermitian matrix per branch for each observer.
    """

    system_basis: BranchBasis
    system_energies: list[float]
    observer_generators_d: list[np.ndarray]
    observer_generators_dp: list[np.ndarray]

    def __post_init__(self):
        basis = self.system_basis
        if basis.size != basis.dim:
            raise ShapeError(
                f"preferred basis holds {basis.size} kets on a dim-{basis.dim} system; "
                "a complete basis is required"
            )
        dev = float(np.max(np.abs(gram(basis) - np.eye(basis.size))))
        if dev > PREFERRED_BASIS_TOL:
            raise BasisNotOrthonormal(
                f"preferred basis deviates from orthonormality by {dev:.3e}",
                violation=dev,
            )
        self.system_energies = [float(e) for e in self.system_energies]
        if len(self.system_energies) != basis.size:
            raise ShapeError(
                f"{len(self.system_energies)} energies for {basis.size} branches"
            )
        self.observer_generators_d = self._check_generators(
            self.observer_generators_d, "observer_generators_d"
        )
        self.observer_generators_dp = self._check_generators(
            self.observer_generators_dp, "observer_generators_dp"
        )

    def _check_generators(self, gens, name: str) -> list[np.ndarray]:
        if len(gens) != self.system_basis.size:
            raise ShapeError(
                f"{name} holds {len(gens)} generators for {self.system_basis.size} branches"
            )
        out = []
        dim = None
        for s, h in enumerate(gens):
            m = tc.as_complex_matrix(h)
            if m.shape[0] != m.shape[1]:
                raise ShapeError(f"{name}[{s}] is not square: {m.shape}")
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise ShapeError(f"{name}[{s}] dim {m.shape[0]} != {dim}")
            dev = float(np.linalg.norm(m - m.conj().T))
            if dev > 1e-10 * max(float(np.linalg.norm(m)), 1e-300):
                raise NotHermitian(f"{name}[{s}] is not Hermitian", violation=dev)
            out.append(m)
        return out

    @property
    def size(self) -> int:
        return self.system_basis.size

    @property
    def dims(self) -> tuple[int, int, int]:
        return (
            self.system_basis.dim,
            self.observer_generators_d[0].shape[0],
            self.observer_generators_dp[0].shape[0],
        )


def hamiltonian_parts(coupling: NonDemolitionCoupling) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H_S, H_SD, H_SD') as full matrices on S (x) D (x) D'."""
    d_s, d_d, d_dp = coupling.dims
    i_d, i_dp = np.eye(d_d), np.eye(d_dp)
    h_s = np.zeros((d_s * d_d * d_dp,) * 2, dtype=complex)
    h_sd = np.zeros_like(h_s)
    h_sdp = np.zeros_like(h_s)
    for s in range(coupling.size):
        ket = coupling.system_basis.kets[s].amplitudes
        p = np.outer(ket, ket.conj())
        h_s += coupling.system_energies[s] * tc.kron_all([p, i_d, i_dp])
        h_sd += tc.kron_all([p, coupling.observer_generators_d[s], i_dp])
        h_sdp += tc.kron_all([p, i_d, coupling.observer_generators_dp[s]])
    return h_s, h_sd, h_sdp


def assemble_hamiltonian(coupling: NonDemolitionCoupling) -> np.ndarray:
    """Full premeasurement Hamiltonian on S (x) D (x) D'."""
    h_s, h_sd, h_sdp = hamiltonian_parts(coupling)
    return h_s + h_sd + h_sdp


def branch_unitaries(
    coupling: NonDemolitionCoupling, t: float
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """(exp(-i h_s(D) t), exp(-i h_s(D') t)) per branch."""
    u_d = [tc.unitary_from_hamiltonian(h, t) for h in coupling.observer_generators_d]
    u_dp = [tc.unitary_from_hamiltonian(h, t) for h in coupling.observer_generators_dp]
    return u_d, u_dp


def _as_density(state: Ket | DensityMatrix) -> DensityMatrix:
    return density_from_ket(state) if isinstance(state, Ket) else state


def premeasure(
    system_state: Ket | DensityMatrix,
    observer_states: tuple[Ket | DensityMatrix, Ket | DensityMatrix],
    coupling: NonDemolitionCoupling,
    t: float,
) -> DensityMatrix:
    """Evolve rho_S (x) rho_D (x) rho_D' under the coupling for time t.

    The evolution is applied branch by branch (the preferred basis is
    conserved), never through a general matrix exponential. For pure inputs
    the output is the branch superposition
    sum_s c_s e^{-i E_s t} |s> (x) U_s(D)|d> (x) U_s(D')|d'> as a density.
    """
    d_s, d_d, d_dp = coupling.dims
    obs_d, obs_dp = observer_states
    if system_state.dims != (d_s,):
        raise ShapeError(f"system dims {system_state.dims} do not match coupling ({d_s},)")
    if obs_d.dims != (d_d,) or obs_dp.dims != (d_dp,):
        raise ShapeError(
            f"observer dims {obs_d.dims}, {obs_dp.dims} do not match coupling "
            f"({d_d},), ({d_dp},)"
        )
    u_d, u_dp = branch_unitaries(coupling, t)
    phases = [np.exp(-1j * e * t) for e in coupling.system_energies]
    basis = coupling.system_basis

    pure = all(isinstance(x, Ket) for x in (system_state, obs_d, obs_dp))
    if pure:
        c = basis.matrix().conj().T @ system_state.amplitudes
        amps = np.zeros(d_s * d_d * d_dp, dtype=complex)
        for s in range(coupling.size):
            amps += (
                c[s]
                * phases[s]
                * tc.kron_vectors(
                    [
                        basis.kets[s].amplitudes,
                        u_d[s] @ obs_d.amplitudes,
                        u_dp[s] @ obs_dp.amplitudes,
                    ]
                )
            )
        return density_from_ket(Ket(amps, (d_s, d_d, d_dp)))

    u_full = np.zeros((d_s * d_d * d_dp,) * 2, dtype=complex)
    for s in range(coupling.size):
        ket = basis.kets[s].amplitudes
        p = np.outer(ket, ket.conj())
        u_full += phases[s] * tc.kron_all([p, u_d[s], u_dp[s]])
    rho0 = tc.kron_all(
        [_as_density(system_state).matrix, _as_density(obs_d).matrix, _as_density(obs_dp).matrix]
    )
    return DensityMatrix(u_full @ rho0 @ u_full.conj().T, (d_s, d_d, d_dp))


def ghz_state(coefficients, bases: list[BranchBasis]) -> Ket:
    """Branch superposition sum_s c_s |s> (x) |d_s> (x) |d'_s>.

    Coefficients must satisfy sum |c_s|^2 = 1. With orthonormal branch kets
    the assembled vector is already normalized; otherwise it is renormalized
    and a warning reports the assembled norm.
    """
    c = tc.as_complex_vector(coefficients)
    if len(bases) != 3:
        raise ShapeError(f"three branch bases expected, got {len(bases)}")
    sizes = {b.size for b in bases}
    if len(sizes) != 1 or bases[0].size != c.size:
        raise ShapeError(
            f"coefficients ({c.size}) and bases ({sorted(sizes)}) disagree on branch count"
        )
    total = float(np.sum(np.abs(c) ** 2))
    if abs(total - 1.0) > 1e-10:
        raise NormalizationError(
            f"sum |c_s|^2 = {total!r}, expected 1", violation=abs(total - 1.0)
        )
    dims = tuple(b.dim for b in bases)
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    for s in range(c.size):
        amps += c[s] * tc.kron_vectors([b.kets[s].amplitudes for b in bases])
    nrm = float(np.linalg.norm(amps))
    if nrm < 1e-12:
        raise DegenerateBranches(
            "branch products interfere destructively; assembled state vanishes",
            violation=nrm,
        )
    if abs(nrm - 1.0) > 1e-10:
        warnings.warn(
            f"branch kets are not orthonormal; assembled norm {nrm!r}, renormalizing",
            stacklevel=2,
        )
        amps = amps / nrm
    return Ket(amps, dims)


def degenerate_observer_state(coefficients, merge: tuple[int, int] = (0, 1)) -> Ket:
    """Branch state whose second observer cannot tell two branches apart.

    Builds sum_s c_s |s, d_s, d'_m(s)> in computational bases on three l-dim
    subsystems, where m maps the branch merge[1] onto merge[0]'s record and
    leaves every other branch alone. The (system, first observer) reduction
    then keeps the cross coherence between the merged branches.
    """
    c = tc.as_complex_vector(coefficients)
    if c.size < 2:
        raise ShapeError(f"need at least two branches, got {c.size}")
    total = float(np.sum(np.abs(c) ** 2))
    if abs(total - 1.0) > 1e-10:
        raise NormalizationError(
            f"sum |c_s|^2 = {total!r}, expected 1", violation=abs(total - 1.0)
        )
    a, b = int(merge[0]), int(merge[1])
    if a == b:
        raise IndexError(f"merge indices must be distinct, got ({a}, {b})")
    for idx in (a, b):
        if idx < 0 or idx >= c.size:
            raise IndexError(f"merge index {idx} out of range for {c.size} branches")
    amps = np.zeros((c.size,) * 3, dtype=complex)
    for s in range(c.size):
        amps[s, s, a if s == b else s] = c[s]
    return Ket(amps.reshape(-1), (c.size,) * 3)


# ---------------------------------------------------------------------------
# Named scenarios


@dataclass
class TiplerReport:
    """Three-observer Bell test: two spacelike record unitaries and a witness.

    Two spin-1/2 halves of a singlet are each recorded by a local qutrit
    register (blank / up / down); a third register copies the x-side record.
    The report quantifies that the two record unitaries commute, that the
    y-side marginal ignores whether the x-side acted, and that tracing the
    witness leaves an equal-weight classical two-branch mixture.
    """

    order: str
    commutator_norm: float
    branch_probabilities: np.ndarray
    classical_residual: float
    marginal_independence_residual: float
    final_state: Ket

    def to_json(self) -> dict:
        return {
            "scenario": "tipler",
            "order": self.order,
            "commutator_norm": float(self.commutator_norm),
            "branch_probabilities": [float(q) for q in self.branch_probabilities],
            "classical_residual": float(self.classical_residual),
            "marginal_independence_residual": float(self.marginal_independence_residual),
            "final_state": ket_to_json(self.final_state),
        }


def _qutrit_shift(k: int) -> np.ndarray:
    s = np.zeros((3, 3), dtype=complex)
    for r in range(3):
        s[(r + k) % 3, r] = 1.0
    return s


def tipler_scenario(order: str = "xy") -> TiplerReport:
    """Build and analyze the three-observer Bell-pair measurement.

    Parties in order: (spin x, register x, spin y, register y, witness), with
    dims (2, 3, 2, 3, 3). Registers record via controlled qutrit shifts
    (up writes record 1, down writes record 2 onto a blank register); the
    witness copies register x's record with a record-controlled shift.
    """
    if order not in ("xy", "yx"):
        raise ShapeError(f"order must be 'xy' or 'yx', got {order!r}")
    dims = (2, 3, 2, 3, 3)
    i2, i3 = np.eye(2, dtype=complex), np.eye(3, dtype=complex)
    p_up = np.diag([1.0, 0.0]).astype(complex)
    p_dn = np.diag([0.0, 1.0]).astype(complex)

    record = tc.kron(p_up, _qutrit_shift(1)) + tc.kron(p_dn, _qutrit_shift(2))
    u_x = tc.kron_all([record, i2, i3, i3])
    u_y = tc.kron_all([i2, i3, record, i3])
    u_w = np.zeros((108, 108), dtype=complex)
    for r in range(3):
        p_r = np.outer(i3[:, r], i3[:, r])
        u_w += tc.kron_all([i2, p_r, i2, i3, np.linalg.matrix_power(_qutrit_shift(1), r)])

    # singlet (|up down> - |down up>)/sqrt(2) across the two spins, registers blank
    amps0 = np.zeros(dims, dtype=complex)
    amps0[0, 0, 1, 0, 0] = 1.0 / np.sqrt(2.0)
    amps0[1, 0, 0, 0, 0] = -1.0 / np.sqrt(2.0)
    psi0 = amps0.reshape(-1)

    u_meas = u_x @ u_y if order == "xy" else u_y @ u_x
    final = Ket(u_w @ (u_meas @ psi0), dims)
    commutator = tc.frobenius(u_x @ u_y - u_y @ u_x)

    # Trace the witness; regroup each (spin, register) side as one dim-6 party.
    traced = reduced_density(final, (0, 1, 2, 3))
    pair = DensityMatrix(traced.matrix, (6, 6))

    def _e6(i: int) -> Ket:
        v = np.zeros(6, dtype=complex)
        v[i] = 1.0
        return Ket(v, (6,))

    # up with record 1 -> composite 0*3+1 = 1; down with record 2 -> 1*3+2 = 5
    basis_x = BranchBasis(0, [_e6(1), _e6(5)])
    basis_y = BranchBasis(1, [_e6(5), _e6(1)])
    q, residual = classical_projection(pair, basis_x, basis_y)

    final_without_x = Ket(u_w @ (u_y @ psi0), dims)
    marg_with = reduced_density(final, (2, 3))
    marg_without = reduced_density(final_without_x, (2, 3))
    marginal_residual = tc.frobenius(marg_with.matrix - marg_without.matrix)

    return TiplerReport(
        order=order,
        commutator_norm=commutator,
        branch_probabilities=q,
        classical_residual=residual,
        marginal_independence_residual=marginal_residual,
        final_state=final,
    )


def degenerate_observer_scenario(coefficients=None) -> dict:
    """Report how far a record-degenerate observer breaks objectivity.

    The (system, first observer) reduction retains the coherence between the
    merged branches, so its classical fit carries a nonzero residual; the
    merged records also make the second observer's branch kets linearly
    dependent, which the fit machinery flags rather than averages away.
    """
    c = np.array([1.0, 1.0]) / np.sqrt(2.0) if coefficients is None else np.asarray(coefficients)
    state = degenerate_observer_state(c)
    l = state.dims[0]
    comp = BranchBasis(0, [Ket(np.eye(l)[:, s], (l,)) for s in range(l)])
    rho_sd = reduced_density(state, (0, 1))
    q, residual = classical_projection(rho_sd, comp, comp)
    return {
        "scenario": "degenerate-observer",
        "coefficients": [[float(z.real), float(z.imag)] for z in tc.as_complex_vector(c)],
        "merge": [0, 1],
        "q_sd": [float(x) for x in q],
        "residual_sd": float(residual),
        "second_observer_records_degenerate": True,
        "verdict": "fail" if residual > 1e-8 else "pass",
    }


def mixed_observer_scenario(tol: float = 1e-8) -> tuple[dict, ObjectivityReport]:
    """Premeasurement with a maximally mixed first observer.

    The observer's state commutes with every record rotation, so it ends the
    coupling holding no record at all; the objectivity check against the
    intended record kets must fail. Returns the JSON-ready report and the
    underlying ObjectivityReport.
    """
    i2 = np.eye(2)
    comp = BranchBasis(0, [Ket(i2[:, 0], (2,)), Ket(i2[:, 1], (2,))])
    sy = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    coupling = NonDemolitionCoupling(
        system_basis=comp,
        system_energies=[0.0, 0.7],
        observer_generators_d=[np.zeros((2, 2)), (np.pi / 4) * sy],
        observer_generators_dp=[np.zeros((2, 2)), (np.pi / 2) * sy],
    )
    system = Ket(np.array([0.6, 0.8]), (2,))
    ready = Ket(i2[:, 0], (2,))
    mixed = DensityMatrix(i2 / 2, (2,))
    rho_t = premeasure(system, (mixed, ready), coupling, t=1.0)

    u_d, u_dp = branch_unitaries(coupling, 1.0)
    basis_d = BranchBasis(1, [Ket(u @ ready.amplitudes, (2,)) for u in u_d])
    basis_dp = BranchBasis(2, [Ket(u @ ready.amplitudes, (2,)) for u in u_dp])
    report = check_objectivity(rho_t, [comp, basis_d, basis_dp], tol=tol)
    payload = {
        "scenario": "mixed-observer",
        "system_coefficients": [0.6, 0.8],
        "first_observer_initial": "maximally mixed",
        "report": report.to_json(),
    }
    return payload, report

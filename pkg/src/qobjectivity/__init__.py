"""Objectivity analysis for quantum measurement.

Construct measurement dynamics (non-demolition couplings, branch
superpositions, the central-spin model) and test states for objectivity:
identical classical correlations across every bipartite reduction, three-way
Schmidt structure, and Loschmidt-echo decay of observer distinguishability.
"""

from .errors import (
    BasisNotOrthonormal,
    DegenerateBranches,
    DimensionCapExceeded,
    NormalizationError,
    NotHermitian,
    NotPSD,
    NotSchmidtForm,
    NotUnitTrace,
    PartitionError,
    QObjectivityError,
    ShapeError,
)
from .quantum_state import (
    BranchBasis,
    DensityMatrix,
    Ket,
    basis_entropy,
    density_from_ket,
    gram,
    mutual_information,
    reduced_density,
    validate_density,
    von_neumann_entropy,
)
from .objectivity import (
    ObjectivityReport,
    Prop1Fit,
    SchmidtTriple,
    check_objectivity,
    classical_projection,
    fit_proposition1,
    orthogonality_report,
    tripartite_schmidt,
)
from .measurement_dynamics import (
    NonDemolitionCoupling,
    degenerate_observer_state,
    ghz_state,
    premeasure,
    tipler_scenario,
)
from .central_spin import (
    CentralSpinParams,
    EchoSeries,
    block_overlap,
    branch_overlap_single,
    echo_series,
    loschmidt_echo_direct,
    loschmidt_echo_paper_formula,
    spin_rotation,
    statevector_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "BasisNotOrthonormal",
    "BranchBasis",
    "CentralSpinParams",
    "DegenerateBranches",
    "DensityMatrix",
    "DimensionCapExceeded",
    "EchoSeries",
    "Ket",
    "NonDemolitionCoupling",
    "NormalizationError",
    "NotHermitian",
    "NotPSD",
    "NotSchmidtForm",
    "NotUnitTrace",
    "ObjectivityReport",
    "PartitionError",
    "Prop1Fit",
    "QObjectivityError",
    "SchmidtTriple",
    "ShapeError",
    "basis_entropy",
    "block_overlap",
    "branch_overlap_single",
    "check_objectivity",
    "classical_projection",
    "degenerate_observer_state",
    "density_from_ket",
    "echo_series",
    "fit_proposition1",
    "ghz_state",
    "gram",
    "loschmidt_echo_direct",
    "loschmidt_echo_paper_formula",
    "mutual_information",
    "orthogonality_report",
    "premeasure",
    "reduced_density",
    "spin_rotation",
    "statevector_oracle",
    "tipler_scenario",
    "tripartite_schmidt",
    "validate_density",
    "von_neumann_entropy",
]

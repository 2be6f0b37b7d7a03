"""dfskit: decoherence-free subsystems of quantum channels and repeated MPS tensors."""
from .channel import KrausChannel, adjoint, apply, cross_map, is_cptp, matrix_rep, restrict
from .dfs import capacity_report, is_dfs, maximal_dfs, verify_definition
from .errors import DfsKitError
from .fixedpoint import fixed_point_space, is_irreducible, maximal_stationary_state
from .kernels import BACKEND
from .mps import MpsTensor, WeightedTensor, basis_dedup, expand, is_irreducible_tensor, is_repeated, mps_sum, transfer_map
from .numerics import DEFAULT_TOL, SubspaceBasis
from .structure import (
    coherence,
    equivalence_classes,
    minimal_subspaces,
    noiseless_decomposition,
    phase_align,
    structure_decomposition,
    verify_block_form,
)

__version__ = "0.1.0"

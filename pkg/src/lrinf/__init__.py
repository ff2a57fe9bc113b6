"""Exact computer algebra for strong homotopy Lie-Rinehart structures.

Everything is computed over the rationals with sparse dictionaries.  The
main entry points are re-exported here; see the submodules for the rest.
"""
from .conn import (LEFT, RIGHT, Connection, D_delta, D_nabla, LeftConnection,
                   RightConnection, bianchi_residual, curvature, eta_L, eta_L_inverse,
                   eta_R, eta_R_inverse, is_flat)
from .fixtures import Fixture, fixture, perturbed, random_connection
from .galgebra import FormSpace, FreeModule, GradedAlgebra, Report, TensorSpace
from .glinear import GradedSpace, SymMultiMap, gbracket
from .mder import (FormalMultiderivation, ModMultiderivation, eta, eta_inverse,
                   mder_bracket, nu)
from .sbv import (BVError, OperatorFamily, bv_from_right_module, derived_brackets,
                  diff_order, lie_derivative, nested_comm_left, nested_comm_right,
                  right_action)
from .shlr import (LInfinityOneAlgebra, PInfinityOneAlgebra, SHLRAlgebra,
                   ce_differential, induced_pinfinity, jacobiator)
from .signs import koszul_alpha, unshuffles

__version__ = "0.1.0"

__all__ = [
    "LEFT", "RIGHT", "BVError", "Connection", "D_delta", "D_nabla", "Fixture",
    "FormSpace", "FormalMultiderivation", "FreeModule", "GradedAlgebra", "GradedSpace",
    "LInfinityOneAlgebra", "LeftConnection", "ModMultiderivation", "OperatorFamily",
    "PInfinityOneAlgebra", "Report", "RightConnection", "SHLRAlgebra", "SymMultiMap",
    "TensorSpace", "bianchi_residual", "bv_from_right_module", "ce_differential",
    "curvature", "derived_brackets", "diff_order", "eta", "eta_L", "eta_L_inverse",
    "eta_R", "eta_R_inverse", "eta_inverse", "fixture", "gbracket", "induced_pinfinity",
    "is_flat", "jacobiator", "koszul_alpha", "lie_derivative", "mder_bracket",
    "nested_comm_left", "nested_comm_right", "nu", "perturbed", "random_connection",
    "right_action", "unshuffles",
]

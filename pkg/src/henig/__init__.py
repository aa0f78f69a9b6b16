"""Strict separation of cones, Henig dilating cones and proper efficiency
for finite point clouds in normed spaces."""
from .cones import (
    BishopPhelps,
    Negated,
    Polyhedral,
    Sublevel,
    augmented_witness_search,
    bounded_base,
    classify_aug_pair,
    membership,
    sublevel_base,
)
from .density import DensityTable, ShrinkReport, abb_experiment, local_approximation, section_shrink
from .dilation import EpsNeighborhood, HenigDilation, inclusion_check, normalize_base
from .efficiency import (
    GheCertificate,
    PointCloud,
    check_certificate,
    classify,
    ghe_certify,
    ghe_exists,
    min_set,
    min_set_bruteforce,
    scalarize_section,
)
from .separation import SspReport, Witness, bp_hull_bounds_check, find_witness, ssp_gap, verify_witness
from .space import Space, dual_norm, hull_distance, norm

__all__ = [
    "BishopPhelps", "DensityTable", "EpsNeighborhood", "GheCertificate", "HenigDilation", "Negated",
    "PointCloud", "Polyhedral", "ShrinkReport", "Space", "SspReport", "Sublevel", "Witness",
    "abb_experiment", "augmented_witness_search", "bounded_base", "bp_hull_bounds_check",
    "check_certificate", "classify", "classify_aug_pair", "dual_norm", "find_witness", "ghe_certify",
    "ghe_exists", "hull_distance", "inclusion_check", "local_approximation", "membership", "min_set",
    "min_set_bruteforce", "norm", "normalize_base", "scalarize_section", "section_shrink", "ssp_gap",
    "sublevel_base", "verify_witness",
]

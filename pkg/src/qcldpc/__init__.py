"""Quasi-cyclic LDPC codes from cyclic subgroups of finite fields."""

from .analysis import (GirthReport, RankReport, array_girth, cpm_four_cycle_check, girth,
                       lambda_l, null_space_basis, rank_closed_form, rank_formula, rank_gf2,
                       rank_gfq, rank_via_hadamard, rc_check, theorem4_rank)
from .base_matrix import (BaseMatrix, SubgroupPair, build_block, build_full, build_wstar,
                          verify_rd_constraint, verify_structural_properties)
from .codec import (LinearCode, SimReport, awgn_simulate, awgn_simulate_caps, encode,
                    make_code, osmlgd_decode, spa_decode)
from .dispersion import (ZM, BinaryMatrix, CpmArray, MaskMatrix, build_mask_random, disperse,
                         expand, mask, select_zm_free, subarray)
from .field import ZERO_LOG, FieldElement, FieldSpec, build_field

__all__ = [
    "ZERO_LOG", "FieldSpec", "FieldElement", "build_field",
    "SubgroupPair", "BaseMatrix", "build_block", "build_full", "build_wstar",
    "verify_rd_constraint", "verify_structural_properties",
    "ZM", "CpmArray", "BinaryMatrix", "MaskMatrix", "disperse", "subarray", "select_zm_free",
    "mask", "build_mask_random", "expand",
    "RankReport", "GirthReport", "rank_gf2", "null_space_basis", "rc_check", "girth",
    "array_girth", "cpm_four_cycle_check", "rank_gfq", "rank_via_hadamard", "lambda_l",
    "theorem4_rank", "rank_formula", "rank_closed_form",
    "LinearCode", "SimReport", "make_code", "encode", "spa_decode", "osmlgd_decode",
    "awgn_simulate", "awgn_simulate_caps",
]

"""Grip-aware analog beam codebook design for multi-module mmWave handsets."""

__version__ = "0.1.0"

from .core import (
    CoverageReport,
    DirectionGrid,
    ResponseField,
    coverage_profile,
    gain,
    gain_matrix,
    make_direction_grid,
)
from .codebook import (
    CandidateSet,
    Codebook,
    Codeword,
    build_candidates,
    design_agnostic,
    design_grip_aware,
    design_semi_aware,
    greedy_design,
)
from .grip import ActivityProfile, GripProfile, builtin_activities, builtin_grips, compose_grip
from .synth import BlockageMask, HandsetLayout, default_layout, synth_elementary_blocked, synth_free_field
from .compare import SchemeResult, evaluate_activity, run_full_comparison
from .config import RunConfig

__all__ = [
    "CoverageReport",
    "DirectionGrid",
    "ResponseField",
    "coverage_profile",
    "gain",
    "gain_matrix",
    "make_direction_grid",
    "CandidateSet",
    "Codebook",
    "Codeword",
    "build_candidates",
    "design_agnostic",
    "design_grip_aware",
    "design_semi_aware",
    "greedy_design",
    "ActivityProfile",
    "GripProfile",
    "builtin_activities",
    "builtin_grips",
    "compose_grip",
    "BlockageMask",
    "HandsetLayout",
    "default_layout",
    "synth_elementary_blocked",
    "synth_free_field",
    "SchemeResult",
    "evaluate_activity",
    "run_full_comparison",
    "RunConfig",
]

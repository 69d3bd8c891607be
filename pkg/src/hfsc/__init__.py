"""Exact N-soliton solutions of the (2+1)-dimensional Heisenberg ferromagnetic
spin chain equation and their numerical verification."""

__version__ = "0.1.0"

from .model import (
    PhysicalModel,
    SolitonSpectrum,
    SpaceTimePoint,
    SpectrumEntry,
    build_model,
    derive_alphas,
    model_from_micro,
    validate_spectrum,
)
from .soliton import (
    Axis,
    FieldGrid,
    GridSpec,
    build_m_matrix,
    eval_grid,
    eval_nsoliton,
    eval_one_soliton,
    eval_two_soliton,
    field,
    phase,
)

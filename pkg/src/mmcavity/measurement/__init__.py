"""Analysis of S21 sweeps and ringdown records."""
from .resonance import (
    ResonanceParams,
    ThruCalibration,
    extract_probe_coupling,
    gaussian_intensity_ratio,
    probe_coupling_from_field,
    qcircle_diameter,
    qcircle_diameter_from_rates,
    refine_resonance,
    synthesize_sweep,
)
from .ringdown import (
    RingdownFit,
    RingdownShot,
    coherent_average_kappa,
    instantaneous_detuning,
    length_excursion,
    ringdown_fit_ensemble,
    synthesize_ensemble,
)
from .vectfit import RationalModel, SweepTrace, initial_poles, vector_fit

__all__ = [
    "RationalModel",
    "ResonanceParams",
    "RingdownFit",
    "RingdownShot",
    "SweepTrace",
    "ThruCalibration",
    "coherent_average_kappa",
    "extract_probe_coupling",
    "gaussian_intensity_ratio",
    "initial_poles",
    "instantaneous_detuning",
    "length_excursion",
    "probe_coupling_from_field",
    "qcircle_diameter",
    "qcircle_diameter_from_rates",
    "refine_resonance",
    "ringdown_fit_ensemble",
    "synthesize_ensemble",
    "synthesize_sweep",
    "vector_fit",
]

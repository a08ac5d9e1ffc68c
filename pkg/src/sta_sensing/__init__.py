"""Shaped-pulse XY8 sensing with nitrogen-vacancy centers: pulse design, propagation, spectra."""

from .pulse_shaper import (
    ControlWaveform,
    ErrorModel,
    NoBracketFound,
    OptimizerStalled,
    ShapeParams,
    TopHatPulse,
    derive_controls,
    design_pulse,
    optimize_etas,
    perturbative_infidelity,
    solve_alpha,
    tophat_shape,
)
from .config import ConfigError, RunConfig, load_config, load_preset, parse_config
from .dynamics import IntegratorConfig, StepTooLarge, exact_flip_infidelity, propagate
from .sequence import (
    PulseOverlap,
    SequenceSchedule,
    build_schedule,
    build_xy8,
    fourier_fk,
    modulation_function,
    resonance_predictor,
)
from .spectroscopy import (
    STA,
    Instantaneous,
    Scenario,
    SpectrumResult,
    TopHat,
    compare_modes,
    default_grid,
    dip_center,
    dip_depth,
    ensemble_average,
    robustness_sweep,
    scan_spectrum,
)
from .targets import ClassicalSignal, NuclearSpin

__version__ = "0.1.0"

"""Quantum-limited coherent transceivers: Gaussian states, balanced receivers,
squeezed-light link budgets and noise-trace estimation."""

__version__ = "0.1.0"

from .capacity import (
    CapacityReport,
    c_holevo,
    c_shannon_1q,
    c_shannon_2q,
    c_squeezed,
    energy_per_bit_coherent,
    energy_per_bit_squeezed,
    photons_per_mode,
)
from .gaussian import GaussianState, PhotonFluxContext, TwoModeState, coherent, squeeze, vacuum
from .link import (
    InfeasibleError,
    LinkConfig,
    SweepResult,
    evaluate_link,
    observable_squeezing_cap,
    optimize_lo_power,
    pump_from_squeezing,
    squeezing_from_pump,
    sweep_pump_power,
    sweep_signal_power,
)
from .receiver import CouplerParams, FieldTone, ReceiverSpec, SaturationError, detection_efficiency, p_knee, snc
from .trace import NoiseLevels, NoiseTrace, TraceConfig, estimate_noise_levels, invert_squeezing, simulate_trace

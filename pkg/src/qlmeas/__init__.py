"""Qubit selective measurement as continuous quasilinear evolution."""

__version__ = "0.1.0"

from .config import RunConfig, parse_config, parse_config_text
from .dynamics import (IntegrationControls, Propagator, Trajectory,
                       crossing_times, evolve_density, integrate_bloch,
                       integrate_propagator)
from .entangled import EntangledRecord, run_entangled_measurement
from .errors import (BranchExtinctionError, ConfigError,
                     DegenerateObservableError, DomainError,
                     IntegrationError, InvalidOperatorError,
                     InvalidStateError, QlmeasError,
                     ZeroProbabilityBranchError)
from .generators import (DrivingGenerator, InvertedMorse, Observable,
                         Tabulated, Window, theta_angle)
from .linalg import (TwoQubitState, bloch_to_density, density_to_bloch,
                     partial_trace)
from .measurement import (MeasurementRecord, Scenario, born_probabilities,
                          run_measurement, sample_branch,
                          von_neumann_update)
from .presets import PRESET_NAMES, load_preset
from .verify import (check_ensemble_equivalence, check_quasilinearity,
                     cross_validate)

__all__ = [
    "BranchExtinctionError", "ConfigError", "DegenerateObservableError",
    "DomainError", "DrivingGenerator", "EntangledRecord",
    "IntegrationControls", "IntegrationError", "InvalidOperatorError",
    "InvalidStateError", "InvertedMorse", "MeasurementRecord",
    "Observable", "PRESET_NAMES", "Propagator", "QlmeasError",
    "RunConfig", "Scenario", "Tabulated", "Trajectory", "TwoQubitState",
    "Window", "ZeroProbabilityBranchError", "bloch_to_density",
    "born_probabilities", "check_ensemble_equivalence",
    "check_quasilinearity", "cross_validate", "crossing_times",
    "density_to_bloch", "evolve_density", "integrate_bloch",
    "integrate_propagator", "load_preset", "parse_config",
    "parse_config_text", "partial_trace", "run_entangled_measurement",
    "run_measurement", "sample_branch", "theta_angle",
    "von_neumann_update",
]

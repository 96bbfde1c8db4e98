"""swobs: simulation, contraction certification, and observer design for
bimodal switched systems with sliding motion."""

__version__ = "0.1.0"

from .measures import MeasureKind, measure, measure_limit_oracle, vec_norm
from .systems import BimodalSystem, Mode, ObserverSpec, SmoothField, SwitchingSurface
from .simulate import (
    IntegratorConfig,
    IntegrationError,
    DegenerateSlidingError,
    Trajectory,
    integrate,
    integrate_smooth,
    sliding_exit_check,
    sliding_field,
)
from .regularize import TransitionFunction, order_study, phi, regularized_field
from .certify import Certificate, certify_observer, certify_plant, certify_pwa_exact
from .observer import ErrorTrace, check_envelope, disturbance_study, fit_envelope_gain, run_pair
from .synth import SynthesisProblem, SynthesisResult, synthesize
from .config import Bundle, ConfigError, load_bundle, load_bundle_text
from .examples import load_example

__all__ = [
    "MeasureKind", "measure", "measure_limit_oracle", "vec_norm",
    "BimodalSystem", "Mode", "ObserverSpec", "SmoothField", "SwitchingSurface",
    "IntegratorConfig", "IntegrationError", "DegenerateSlidingError", "Trajectory",
    "integrate", "integrate_smooth", "sliding_field", "sliding_exit_check",
    "TransitionFunction", "phi", "regularized_field", "order_study",
    "Certificate", "certify_plant", "certify_observer", "certify_pwa_exact",
    "ErrorTrace", "run_pair", "check_envelope", "fit_envelope_gain", "disturbance_study",
    "SynthesisProblem", "SynthesisResult", "synthesize",
    "Bundle", "ConfigError", "load_bundle", "load_bundle_text", "load_example",
    "__version__",
]

"""One-way distributed correlation testing with shared randomness."""

from .codebook import Codebook
from .errors import InsufficientSamples, ResourceRefusal, SpecError
from .harness import (
    ExperimentSpec,
    SweepSpec,
    TrialReport,
    estimate_error_rates,
    print_bounds,
    print_params,
    sweep_phase_transition,
)
from .model import CorrelationVector, SampleBlock, SamplePair
from .params import (
    BoostPlan,
    DerivedParams,
    TestSpec,
    binary_params,
    lb_ddim,
    lb_estimation,
    lb_interactive,
    lb_oneway_delta,
    lb_oneway_eps,
    median_plan,
    one_sided_params,
    ribbon_check,
)
from .protocol import Message, Verdict, run_ddim, run_one_sided, run_two_sided

__version__ = "0.1.0"

__all__ = [
    "BoostPlan",
    "Codebook",
    "CorrelationVector",
    "DerivedParams",
    "ExperimentSpec",
    "InsufficientSamples",
    "Message",
    "ResourceRefusal",
    "SampleBlock",
    "SamplePair",
    "SpecError",
    "SweepSpec",
    "TestSpec",
    "TrialReport",
    "Verdict",
    "binary_params",
    "estimate_error_rates",
    "lb_ddim",
    "lb_estimation",
    "lb_interactive",
    "lb_oneway_delta",
    "lb_oneway_eps",
    "median_plan",
    "one_sided_params",
    "print_bounds",
    "print_params",
    "ribbon_check",
    "run_ddim",
    "run_one_sided",
    "run_two_sided",
    "sweep_phase_transition",
]

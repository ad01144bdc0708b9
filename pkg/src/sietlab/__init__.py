"""Numerical laboratory for simultaneous information and energy
transmission when the harvesting function is known only through samples
on a regular design.

The package builds the pipeline end to end: smoothness classes and
sampling (funcspace), noiseless and noisy reconstruction with certified
envelopes (reconstruct), discrete channels including a lattice-blind
adversarial family (channel), capacity-energy tradeoffs (capacity),
multicast max-min versions (multicast), source coding and
energy-distortion tradeoffs (jscc), and the loss sweeps with log-log
slope fits that verify the convergence-rate theory (experiments).
"""

from .funcspace import (
    DENSE_GRID_SIZE,
    GridFunction,
    SampledFunction,
    SmoothnessClass,
    bump_function,
    lq_norm,
    membership_check,
    sample_regular,
)
from .reconstruct import (
    EnvelopePair,
    KernelSpec,
    LocalPolynomialRegressor,
    SplineReconstructor,
    local_poly_fit,
    lower_envelope,
    spline_interpolate,
)
from .channel import (
    DiscreteChannel,
    InputDistribution,
    expected_energy,
    make_adversarial_mod,
    make_awgn_peak,
    mutual_information,
)
from .capacity import (
    CapacityPoint,
    EnergyPoint,
    TradeoffCurve,
    capacity_energy,
    capacity_energy_set,
    energy_capacity,
    energy_capacity_set,
    sweep_curve,
    unconstrained_capacity,
)
from .experiments import (
    LossReport,
    SlopeFit,
    energy_loss_lower_bound,
    energy_loss_sweep,
    fit_slope,
    info_loss_sweep,
    write_report,
)
from .multicast import (
    MulticastEnergyPoint,
    MulticastPoint,
    MulticastProblem,
    multicast_capacity,
    multicast_energy,
    multicast_loss_sweep,
)
from .jscc import (
    CounterexampleReport,
    EnergyDistortionCurve,
    RDPoint,
    SourceModel,
    counterexample_scenario,
    distortion_rate,
    energy_distortion_curve,
    jscc_loss,
    l1_project,
    rate_distortion,
    sampled_distortion,
)
from .validation import (
    InfeasibleError,
    InsufficientDataError,
    InsufficientSamplesError,
    InvalidParameterError,
    NumericalError,
)

__version__ = "0.1.0"

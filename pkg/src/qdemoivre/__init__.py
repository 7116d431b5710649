"""Counting statistics of identical particles in binned output ports of
Haar-random multiports: exact averages, asymptotic Gaussian laws, tail
bounds and Monte Carlo cross-checks."""

__version__ = "0.1.0"

from .core import BinPartition, CountVector, ParticleKind, ProbValue, iter_counts
from .binned_stats import (
    avg_configuration_prob,
    classical_prob,
    distribution,
    exponential_smallness,
    factorize,
    quantum_factor,
    quantum_prob,
)
from .asymptotics import (
    Window,
    gaussian_density,
    gaussian_high_density,
    gaussian_law,
    in_window,
    kl2,
    klr,
    product_asymptotic,
    quantum_factor_asymptotic,
    stirling_lnfact,
    tail_bound,
    x_vars,
)
from .group_integrals import haar_moment, permanent_pair_average, weingarten_table
from .haar_mc import (
    binned_prob_fixed_U,
    mc_average,
    mixed_state_check,
    permanent,
    sample_haar_unitary,
    transition_prob,
)

__all__ = [
    "__version__",
    "BinPartition",
    "CountVector",
    "ParticleKind",
    "ProbValue",
    "iter_counts",
    "avg_configuration_prob",
    "classical_prob",
    "distribution",
    "exponential_smallness",
    "factorize",
    "quantum_factor",
    "quantum_prob",
    "Window",
    "gaussian_density",
    "gaussian_high_density",
    "gaussian_law",
    "in_window",
    "kl2",
    "klr",
    "product_asymptotic",
    "quantum_factor_asymptotic",
    "stirling_lnfact",
    "tail_bound",
    "x_vars",
    "haar_moment",
    "permanent_pair_average",
    "weingarten_table",
    "binned_prob_fixed_U",
    "mc_average",
    "mixed_state_check",
    "permanent",
    "sample_haar_unitary",
    "transition_prob",
]

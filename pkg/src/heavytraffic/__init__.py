"""Heavy-traffic asymptotics for linear processes with long memory and heavy tails.

The package simulates ``S_n = sum_{i<n} g_i X_{n-i}`` with coefficients from
``g(x) = (1-x)**(-gamma) Theta(x) / Phi(x)`` and regularly varying
innovations, scans the drifted supremum ``sup_n (S_n - a G_n)`` and compares
it with the supremum of the fractional stable limit.
"""

from .exceptions import (
    ConfigurationError,
    DegenerateError,
    DomainError,
    HeavyTrafficError,
    RangeError,
    TruncationBiasError,
    UsageError,
)
from .farima import CoeffTable, GSpec, build_coeffs, check_hypMg, g_at, karamata_ratio
from .fraclevy import frac_levy_path, limit_sup, moment_recursion, truncation_m2, upsilon_mean
from .innovations import DiscreteLaw, InnovationModel, decompose_UL, mu_plus, sample_stream
from .pathsim import HorizonPolicy, horizon, normalizer, partial_sum_normalizer, simulate_path, sup_statistic
from .regvar import Perturbation, QuantileModel, k_fn, k_inverse, quantile

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateError",
    "DomainError",
    "HeavyTrafficError",
    "RangeError",
    "TruncationBiasError",
    "UsageError",
    "CoeffTable",
    "GSpec",
    "build_coeffs",
    "check_hypMg",
    "g_at",
    "karamata_ratio",
    "frac_levy_path",
    "limit_sup",
    "moment_recursion",
    "truncation_m2",
    "upsilon_mean",
    "DiscreteLaw",
    "InnovationModel",
    "decompose_UL",
    "mu_plus",
    "sample_stream",
    "HorizonPolicy",
    "horizon",
    "normalizer",
    "partial_sum_normalizer",
    "simulate_path",
    "sup_statistic",
    "Perturbation",
    "QuantileModel",
    "k_fn",
    "k_inverse",
    "quantile",
]

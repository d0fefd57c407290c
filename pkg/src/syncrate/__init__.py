"""Capacity bounds and achievable rates for binary deletion/replication channels."""

__version__ = "0.1.0"

from .core_math import (DomainError, ReducibleChainError, SizeError,  # noqa: E402
                        UndefinedConditionalError, ValidityError, binary_entropy, binom,
                        exp_integral_ei)
from .sequences import subsequence_weight, subsequence_weight_brute  # noqa: E402
from .channel import (ChannelParams, ChannelTrace, drift_moments, exact_output_law,  # noqa: E402
                      make_params, make_rng, sample_trace, state_transition_pmf)
from .bounds import (BoundValue, bdc_markov1_d2, bdc_markov1_frak_d1, bdc_sir_partial,  # noqa: E402
                     bdc_small_p_sir, brc_markov1_max, brc_markov1_rate, brc_r2_closed,
                     brc_small_p_sir, constant_d, constant_r, d2_iud, d2_iud_closed,
                     drc_simple_bounds, h2m_closed, h_im, p_sub_star, psi_1, psi_i1)
from .fsc import (FscModel, build_dagger_fsc, build_star_fsc, check_indecomposable,  # noqa: E402
                  dagger_transition_pmf, star_stationary, z_marginal)
from .inputs import MarkovInputMu  # noqa: E402
from .oracle import ExactMi, exact_mi_dagger, exact_mi_star, exact_mi_true  # noqa: E402
from .rates import (MarkovRateEstimator, RateEstimate, SIREstimator,  # noqa: E402
                    forward_neglog_prob, markov_rate_estimate, sir_estimate)
from .optim import GBAAOptimizer, OptimResult, gbaa_optimize  # noqa: E402

__all__ = [
    "__version__",
    "DomainError", "ReducibleChainError", "SizeError", "UndefinedConditionalError",
    "ValidityError", "binary_entropy", "binom", "exp_integral_ei",
    "subsequence_weight", "subsequence_weight_brute",
    "ChannelParams", "ChannelTrace", "drift_moments", "exact_output_law", "make_params",
    "make_rng", "sample_trace", "state_transition_pmf",
    "BoundValue", "bdc_markov1_d2", "bdc_markov1_frak_d1", "bdc_sir_partial",
    "bdc_small_p_sir", "brc_markov1_max", "brc_markov1_rate", "brc_r2_closed",
    "brc_small_p_sir", "constant_d", "constant_r", "d2_iud", "d2_iud_closed",
    "drc_simple_bounds", "h2m_closed", "h_im", "p_sub_star", "psi_1", "psi_i1",
    "FscModel", "build_dagger_fsc", "build_star_fsc", "check_indecomposable",
    "dagger_transition_pmf", "star_stationary", "z_marginal",
    "MarkovInputMu",
    "ExactMi", "exact_mi_dagger", "exact_mi_star", "exact_mi_true",
    "MarkovRateEstimator", "RateEstimate", "SIREstimator", "forward_neglog_prob",
    "markov_rate_estimate", "sir_estimate",
    "GBAAOptimizer", "OptimResult", "gbaa_optimize",
]

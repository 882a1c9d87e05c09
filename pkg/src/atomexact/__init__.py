"""Exact samplers for exponential-mechanism releases via artificial-atom
regeneration, plus the accounting needed to compare them against approximate
MCMC implementations (delta costs, runtime bounds, utility bounds)."""

from atomexact.rng import RandomStream
from atomexact.spaces import Box, L1Ball
from atomexact.losses import MeanData, RidgeData, LossSpec
from atomexact.kernels import (
    ATOM,
    UniformProposal,
    LaplaceWalk,
    AtomKernel,
    mh_step,
    atom_transition_prob,
    atom_step,
    remainder_step,
)
from atomexact.factory import Coin, inverted_coin, linear_factory
from atomexact.samplers import (
    RunStats,
    DiscreteMechanism,
    PaddingSpec,
    atom_mixture_sample,
    conf_atom_perfect,
    discrete_mechanism_sample,
    random_atom_perfect,
    runtime_private_sample,
)
from atomexact.accounting import (
    PrivacyReport,
    UtilityBound,
    beta_mcmc_unif,
    beta_mcmc_lap,
    delta_cost,
    steps_for_delta,
    p_accept_lower_mean,
    p_accept_worst_case,
    expected_nprop_bound,
    utility_bound_mixture,
)

__version__ = "0.1.0"

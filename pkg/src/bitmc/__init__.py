"""Recovery of low-rank matrices from 1-bit (sign) observations.

The estimator maximises the likelihood of binary observations under a link
function ``f`` subject to a nuclear-norm bound (and optionally an entrywise
bound), solved by a nonmonotone spectral projected-gradient method.
"""
from .linalg import DecompositionError, norm, rank_truncate, svd
from .links import Link, flatness, logistic, parse_link, probit, steepness
from .metrics import hellinger_sq, kl_divergence, rel_fro_error, sign_accuracy
from .objective import gradient, neg_log_likelihood, value_and_grad
from .obsmodel import (
    ObservationSet,
    sample_observations,
    sample_observations_latent,
    sample_omega,
    synth_low_rank,
)
from .projections import (
    AdmmOptions,
    ConstraintSet,
    project_box,
    project_intersection,
    project_nuclear_ball,
    soft_threshold,
)
from .solver import Solution, SolverOptions, debias, optimality_residual, solve, spectral_step

__version__ = "0.1.0"

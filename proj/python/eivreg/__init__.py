"""Sparse errors-in-variables regression.

Estimators for y = X theta + xi when only Z = X + W is observed: the conic
programming estimator, the compensated matrix-uncertainty selector and its
fixed-point oracle, Dantzig-selector baselines, sensitivity diagnostics of
the Gram matrix, packing-based minimax lower-bound instances, and a
reproducible Monte Carlo harness.
"""

import json as _json

from ._core import (
    EivError,
    PackingSet,
    coherence,
    fit_compensated_mu,
    fit_conic,
    fit_dantzig,
    fit_mu_selector,
    fixed_point_oracle,
    gamma_select,
    generate_dgp,
    gram,
    hypothesis_family,
    kappa_exact,
    kappa_local,
    kl_exact,
    practical_tuning,
    run_simulation,
    theoretical_tuning,
    vg_packing,
)

__all__ = [
    "EivError",
    "PackingSet",
    "coherence",
    "fit_compensated_mu",
    "fit_conic",
    "fit_dantzig",
    "fit_mu_selector",
    "fixed_point_oracle",
    "gamma_select",
    "generate_dgp",
    "gram",
    "hypothesis_family",
    "kappa_exact",
    "kappa_local",
    "kl_exact",
    "practical_tuning",
    "run_simulation",
    "simulate",
    "theoretical_tuning",
    "vg_packing",
]


def simulate(config):
    """Run the Monte Carlo study for a config dict; returns the table as a dict.

    Keys mirror the CLI config file: n, p, replications, theta_star
    ("first", "second", or a list), sigma, sigma_star, rho, epsilon,
    lambdas, estimators, seed, tau, mu. Missing keys take the defaults of
    the n=300, p=10 reference study.
    """
    return _json.loads(run_simulation(_json.dumps(config), "json"))

"""Privacy, runtime and utility accounting.

Closed-form minorization constants for the two MCMC baselines on the mean
problem, the delta cost of releasing after finitely many MCMC steps, the
acceptance-probability lower bounds driving the perfect samplers' runtime
bounds, and the utility bound for the discrete/continuous mixture.

All functions here are pure: identical inputs give bitwise identical
outputs.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from atomexact.spaces import Box


@dataclass(frozen=True)
class PrivacyReport:
    """(epsilon, delta) accounting for an approximate MCMC release."""

    epsilon: float
    delta: float
    chain_length: int
    beta: float
    bound_kind: str  # "uniform-proposal" | "laplace-proposal"
    worst_case: bool = True

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class UtilityBound:
    """Upper bound on P(loss >= threshold) for the mixture release.

    ``bound`` may exceed 1 (it is only an upper bound); clamp for display
    only.
    """

    threshold: float
    bound: float
    continuous_term: float
    discrete_term: float

    def as_dict(self):
        return asdict(self)


def beta_mcmc_unif(n, epsilon, d):
    """Worst-case-over-datasets minorization constant of the independent
    uniform-proposal chain on the mean problem:
    ((2d / (eps n)) (1 - exp(-eps n / 2d)))^d."""
    if n < 1 or epsilon <= 0 or d < 1:
        raise ValueError("need n >= 1, epsilon > 0, d >= 1")
    b = epsilon * n / (2.0 * d)
    return float((-math.expm1(-b) / b) ** d)


def beta_mcmc_lap(n, epsilon, d, alpha):
    """Minorization constant of the Laplace-walk chain on the mean problem:
    (2 alpha)^d exp(-(alpha d + eps n / 2)) ((1/alpha)(1 - e^-alpha))^d."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    log_val = (
        d * math.log(2.0 * alpha)
        - (alpha * d + epsilon * n / 2.0)
        + d * (math.log(-math.expm1(-alpha)) - math.log(alpha))
    )
    return float(math.exp(log_val))


def delta_cost(alpha_tv, epsilon):
    """delta = alpha_tv * (1 + e^epsilon): the (epsilon, delta)-DP cost of
    releasing from a distribution within total variation alpha_tv of the
    exact mechanism."""
    if not 0.0 <= alpha_tv <= 1.0:
        raise ValueError("alpha_tv must lie in [0, 1]")
    return alpha_tv * (1.0 + math.exp(epsilon))


def tv_bound(beta, m):
    """(1 - beta)^m, the total-variation bound after m steps of a chain
    with minorization constant beta."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    return (1.0 - beta) ** m


def steps_for_delta(beta, epsilon, delta_target):
    """Smallest m with (1 - beta)^m (1 + e^eps) <= delta_target."""
    if beta <= 0.0:
        raise ValueError("beta = 0 gives no convergence; infeasible")
    if beta >= 1.0:
        return 0
    if delta_target <= 0.0:
        raise ValueError("delta_target must be positive")
    ratio = delta_target / (1.0 + math.exp(epsilon))
    if ratio >= 1.0:
        return 0
    m = math.ceil(math.log(ratio) / math.log1p(-beta))
    return max(int(m), 0)


def mcmc_privacy_report(n, epsilon, d, m, proposal="uniform", alpha=None):
    """PrivacyReport for releasing after m steps of the chosen baseline."""
    if proposal == "uniform":
        beta = beta_mcmc_unif(n, epsilon, d)
        kind = "uniform-proposal"
    elif proposal == "laplace":
        if alpha is None:
            raise ValueError("laplace proposal needs alpha")
        beta = beta_mcmc_lap(n, epsilon, d, alpha)
        kind = "laplace-proposal"
    else:
        raise ValueError("proposal must be 'uniform' or 'laplace'")
    delta = delta_cost(tv_bound(beta, m), epsilon)
    return PrivacyReport(epsilon=epsilon, delta=delta, chain_length=int(m),
                         beta=beta, bound_kind=kind)


def _coordinate_factor(xbar_j, rate):
    """Integral over [0,1] of exp(-rate |t - xbar_j|) dt."""
    if rate == 0.0:
        return 1.0
    return (2.0 - math.exp(-rate * xbar_j) - math.exp(-rate * (1.0 - xbar_j))) / rate


def p_accept_lower_mean(xbar, n, epsilon, d=None, proposal="uniform", alpha=None):
    """Per-dataset lower bound on inf_y p_accept for the mean problem.

    Uniform proposal: prod_j (1/b)(2 - e^{-b xbar_j} - e^{-b(1-xbar_j)}),
    b = eps n / 2d; this is tight (the infimum is attained at the mode).
    Laplace walk: the same product at rate b + alpha, scaled by
    (alpha/2)^d exp(-alpha D(xbar)) with D the largest L1 distance from
    xbar to a corner (the proposal-density floor over the box).
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    if d is None:
        d = xbar.size
    if xbar.size != d:
        raise ValueError("xbar length must match d")
    b = epsilon * n / (2.0 * d)
    if proposal == "uniform":
        val = 1.0
        for xj in xbar:
            val *= _coordinate_factor(xj, b)
        return float(val)
    if proposal == "laplace":
        if alpha is None:
            raise ValueError("laplace proposal needs alpha")
        d_max = float(np.sum(np.maximum(xbar, 1.0 - xbar)))
        log_val = d * math.log(alpha / 2.0) - alpha * d_max
        for xj in xbar:
            log_val += math.log(_coordinate_factor(xj, b + alpha))
        return float(math.exp(log_val))
    raise ValueError("proposal must be 'uniform' or 'laplace'")


def p_accept_worst_case(n, epsilon, d, proposal="uniform", alpha=None):
    """eta = (1/2) inf over datasets of inf_y p_accept for the mean
    problem.  Each coordinate factor is minimized at xbar_j in {0, 1}
    (corner datasets), so corners suffice; no search needed."""
    corner = np.zeros(d)
    return 0.5 * p_accept_lower_mean(corner, n, epsilon, d, proposal, alpha)


def expected_nprop_bound(k, inf_p_accept, random_atom=False):
    """Expected-total-proposals bound 48 / (k^2 (1-k)^2 inf p_accept);
    the random-atom variant drops one (1-k) factor."""
    if not 0.0 < k < 1.0:
        raise ValueError("k must lie in (0, 1)")
    if not 0.0 < inf_p_accept <= 1.0:
        raise ValueError("inf_p_accept must lie in (0, 1]")
    denom = k * k * (1.0 - k) * inf_p_accept
    if not random_atom:
        denom *= 1.0 - k
    return 48.0 / denom


def utility_bound_mixture(epsilon, delta_l, k, ell, threshold, bad_set_measure,
                          good_set_measure=None):
    """Upper bound on P(loss(Y) >= threshold) for the mixture release
    (1-k) * continuous + k * discrete-on-ell-points:

        (1-k)/measure * exp(-eps thr / (4 delta_l))
        + k * exp(-(eps / 2 delta_l)(thr - (2 delta_l / eps) log ell)).

    ``bad_set_measure`` is nu({loss >= threshold/2}), the denominator as
    printed in the source bound.  The classical exponential-mechanism
    argument instead divides by the measure of the good set
    {loss <= threshold/2}; pass ``good_set_measure`` to also get that
    variant (reported via the returned object's ``continuous_term`` when
    bad_set_measure is None).  The two disagree; both are exposed rather
    than silently picking one.
    """
    if epsilon <= 0 or delta_l <= 0 or threshold < 0 or ell < 1:
        raise ValueError("parameters must be positive (ell >= 1)")
    if not 0.0 <= k <= 1.0:
        raise ValueError("k must lie in [0, 1]")
    measure = bad_set_measure if bad_set_measure is not None else good_set_measure
    if measure is None:
        raise ValueError("need a set measure for the continuous term")
    cont = math.inf if measure == 0.0 else (
        (1.0 - k) / measure * math.exp(-epsilon * threshold / (4.0 * delta_l))
    )
    disc = k * math.exp(-(epsilon / (2.0 * delta_l))
                        * (threshold - (2.0 * delta_l / epsilon) * math.log(ell)))
    return UtilityBound(threshold=threshold, bound=cont + disc,
                        continuous_term=cont, discrete_term=disc)


def bad_set_measure_mean(xbar, threshold, n_mc=0, rng=None):
    """nu({y in [0,1]^d : ||y - xbar||_1 >= threshold}) for the mean
    problem: 1 minus the box-clipped L1-ball volume, by orthant
    inclusion-exclusion (exact for moderate d; Monte Carlo above d = 8)."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    d = xbar.size
    if threshold <= 0:
        return 1.0
    if d <= 8 and n_mc == 0:
        return 1.0 - _ball_box_volume(xbar, threshold)
    if rng is None:
        raise ValueError("Monte Carlo path needs an rng")
    n_mc = n_mc or 200_000
    pts = rng.random((n_mc, d))
    frac = np.mean(np.sum(np.abs(pts - xbar), axis=1) >= threshold)
    return float(frac)


def _ball_box_volume(xbar, r):
    """Volume of {||y - xbar||_1 <= r} intersected with [0,1]^d, by
    decomposing into orthants and truncated-simplex inclusion-exclusion."""
    import itertools

    d = xbar.size
    total = 0.0
    fact = math.factorial(d)
    for signs in itertools.product((-1.0, 1.0), repeat=d):
        caps = np.array([xbar[j] if s < 0 else 1.0 - xbar[j]
                         for j, s in enumerate(signs)])
        # volume of {u >= 0, sum u <= r, u_j <= caps_j}
        vol = 0.0
        for subset in itertools.product((0, 1), repeat=d):
            slack = r - float(np.dot(subset, caps))
            if slack <= 0.0:
                continue
            vol += (-1.0) ** sum(subset) * slack ** d
        total += vol / fact
    return float(total)


def mc_exceedance_estimate(spec, threshold, n_samples, rng):
    """Monte Carlo estimate of P(loss(Y) >= threshold) under the
    continuous release density, by importance-weighting uniform draws
    from the space (weights proportional to the unnormalized density).

    An estimate, not a certificate."""
    num = 0.0
    den = 0.0
    for _ in range(n_samples):
        y = spec.space.sample_uniform(rng)
        w = spec.target(y)
        den += w
        if spec.dataset.loss(y) >= threshold:
            num += w
    return num / den if den > 0 else 0.0


def p_accept_mc_lower(spec, proposal, n_states, n_props, rng, confidence=0.99):
    """Clopper-Pearson lower confidence bound on inf_y p_accept when no
    closed form exists (e.g. the ridge family): estimate, not certificate.

    Scans uniformly drawn states, estimates each state's acceptance rate,
    and returns the lower confidence limit of the worst state's rate.
    """
    from scipy import stats as sps

    worst_succ, worst_rate = None, math.inf
    for _ in range(n_states):
        y = spec.space.sample_uniform(rng)
        ly = spec.log_target(y)
        succ = 0
        for _ in range(n_props):
            y2 = proposal.sample(y, rng)
            log_ratio = spec.log_target(y2) - ly
            if log_ratio >= 0 or math.log(rng.random()) < log_ratio:
                succ += 1
        rate = succ / n_props
        if rate < worst_rate:
            worst_rate, worst_succ = rate, succ
    if worst_succ is None:
        raise ValueError("n_states must be >= 1")
    if worst_succ == 0:
        return 0.0
    return float(sps.beta.ppf(1.0 - confidence, worst_succ, n_props - worst_succ + 1))

"""The exact sampling algorithms and their run accounting.

* ``atom_mixture_sample`` -- exact draw from the atom-augmented target
  (geometric regeneration-length trick over the augmented kernel).
* ``conf_atom_perfect`` -- repeat until a non-atom draw: an exact sample
  from the release density itself, pure epsilon-DP.
* ``random_atom_perfect`` -- one augmented draw; atom outcomes are
  replaced by a draw from the discrete mechanism over fixed test points.
* ``runtime_private_sample`` -- conf_atom_perfect with every inner
  rejection loop padded by geometric dummy proposals so that the
  per-invocation count is Geometric(p_pad) no matter what the data are.

Counter semantics (``RunStats``): ``n_prop`` counts every elementary
proposal-like event: one per augmented-kernel step (so every remainder
attempt), one per factory coin flip, one per padding dummy, one for each
regeneration-loop initialization and one per continue/return decision on
the closed-form path.  The exact identity

    n_prop == n_runs + n_direct_z + n_inner + n_bern

holds after every run (padding dummies are counted inside ``n_inner``,
mirrored in ``n_pad``).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from atomexact.kernels import (
    ATOM,
    AtomIntegralUnavailable,
    SamplerAbort,
    is_atom,
    remainder_step,
)
from atomexact.factory import bernoulli_parameter, inverted_atom_hit_coin, linear_factory


@dataclass
class RunStats:
    """Counters for a sampling run; aggregate across threads by summing."""

    n_outer: int = 0        # total regeneration-loop length (sum of M)
    n_inner: int = 0        # remainder rejection attempts incl. padding dummies
    n_bern: int = 0         # factory coin flips
    n_nonatomic: int = 0    # augmented draws needed per released sample
    n_prop: int = 0         # all proposals of any kind
    n_runs: int = 0         # augmented-target draws started
    n_direct_z: int = 0     # closed-form continue/return decisions
    n_pad: int = 0          # padding dummies (subset of n_inner)
    inner_counts: list = field(default_factory=list)  # per remainder invocation
    wall_notes: dict = field(default_factory=dict)

    def merge(self, other):
        self.n_outer += other.n_outer
        self.n_inner += other.n_inner
        self.n_bern += other.n_bern
        self.n_nonatomic += other.n_nonatomic
        self.n_prop += other.n_prop
        self.n_runs += other.n_runs
        self.n_direct_z += other.n_direct_z
        self.n_pad += other.n_pad
        self.inner_counts.extend(other.inner_counts)

    def as_dict(self):
        return {
            "n_prop": self.n_prop,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "n_bern": self.n_bern,
            "n_nonatomic": self.n_nonatomic,
            "n_pad": self.n_pad,
        }


def _continue_bit(kernel, state, beta_alg, rng, stats, use_factory):
    """Draw Z ~ Bernoulli((1 - p(state)) / (1 - beta_alg)) exactly.

    Closed-form path when p(state) is computable (every non-atom state,
    and the atom state for kernels with the closed-form integral);
    otherwise the Bernoulli-factory path on the simulable atom-hit coin.
    The factory path can also be forced for all states via use_factory.
    """
    scale = 1.0 / (1.0 - beta_alg)
    if use_factory:
        coin = inverted_atom_hit_coin(kernel, state, stats)
        slack = 1.0 - (1.0 - kernel.beta) * scale
        slack = max(slack, 1e-12)
        return linear_factory(coin, scale, slack, rng, stats)
    try:
        t = bernoulli_parameter(kernel, state, beta_alg)
    except AtomIntegralUnavailable:
        coin = inverted_atom_hit_coin(kernel, state, stats)
        slack = max(1.0 - (1.0 - kernel.beta) * scale, 1e-12)
        return linear_factory(coin, scale, slack, rng, stats)
    if stats is not None:
        stats.n_direct_z += 1
        stats.n_prop += 1
    return 1 if rng.random() < t else 0


def atom_mixture_sample(kernel, beta_alg=None, rng=None, stats=None,
                        use_factory=False, padding=None):
    """Exact draw from the augmented stationary target: density h off the
    atom plus unnormalized mass w_a at the atom.

    Start at the atom, draw the regeneration length M ~ Geometric(beta_alg)
    (support 1, 2, ...), and for m = 2..M either return to the atom or move
    through the kernel conditioned off the atom, with the continue
    probability (1 - p(Y)) / (1 - beta_alg).  Returns the final state.

    beta_alg defaults to 0.95 * kernel.beta, keeping the factory's target
    strictly inside (0, 1).
    """
    if beta_alg is None:
        beta_alg = 0.95 * kernel.beta
    if not 0.0 < beta_alg <= kernel.beta:
        raise ValueError("beta_alg must lie in (0, kernel.beta]")
    m_total = int(rng.geometric(beta_alg))
    if stats is not None:
        stats.n_runs += 1
        stats.n_outer += m_total
        stats.n_prop += 1
    state = ATOM
    for _ in range(m_total - 1):
        z = _continue_bit(kernel, state, beta_alg, rng, stats, use_factory)
        if z == 1:
            state = _remainder(kernel, state, rng, stats, padding)
        else:
            state = ATOM
    return state


def _remainder(kernel, state, rng, stats, padding):
    """Remainder-kernel draw, optionally padded (see PaddingSpec)."""
    if padding is None or not padding.enabled:
        nxt, attempts = remainder_step(kernel, state, rng, stats)
        if stats is not None:
            stats.inner_counts.append(attempts)
        return nxt
    p_pad = padding.p_pad
    p_state = kernel.inner_success_prob(state)  # needs exact p everywhere
    if p_pad > p_state + 1e-12:
        raise SamplerAbort(
            f"padding certificate failed: p_pad={p_pad} exceeds the inner "
            f"success probability {p_state} at the current state"
        )
    nxt, attempts = remainder_step(kernel, state, rng, stats)
    padded = attempts
    # Geometric memorylessness: with probability 1 - p_pad / p_state append
    # Geometric(p_pad) dummies, making the padded count Geometric(p_pad).
    if rng.random() >= p_pad / p_state:
        n_wait = int(rng.geometric(p_pad))
        for _ in range(n_wait):
            rng.random()  # a dummy consumes randomness like a real proposal
        padded += n_wait
        if stats is not None:
            stats.n_inner += n_wait
            stats.n_pad += n_wait
            stats.n_prop += n_wait
    if stats is not None:
        stats.inner_counts.append(padded)
    return nxt


def conf_atom_perfect(kernel, beta_alg=None, rng=None, stats=None,
                      use_factory=False, padding=None, max_runs=10**6):
    """Exact epsilon-DP sample from the release density: rerun the
    augmented draw until it returns a non-atom state."""
    for _ in range(max_runs):
        if stats is not None:
            stats.n_nonatomic += 1
        state = atom_mixture_sample(kernel, beta_alg, rng, stats,
                                    use_factory=use_factory, padding=padding)
        if not is_atom(state):
            return state
    raise SamplerAbort(
        f"no non-atom draw in {max_runs} augmented runs; the realized atom "
        "mass is too close to 1 for this configuration"
    )


@dataclass(frozen=True)
class DiscreteMechanism:
    """Exponential mechanism restricted to fixed test points."""

    spec: object
    test_points: np.ndarray

    def __init__(self, spec, test_points):
        pts = np.atleast_2d(np.asarray(test_points, dtype=float))
        if pts.shape[0] < 1:
            raise ValueError("need at least one test point")
        for pt in pts:
            if not spec.space.contains(pt, tol=1e-9):
                raise ValueError("all test points must lie in the space")
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "test_points", pts)

    def log_weights(self):
        return np.array([self.spec.log_target(pt) for pt in self.test_points])

    def probabilities(self):
        lw = self.log_weights()
        lw = lw - lw.max()  # max shift for numerical stability
        w = np.exp(lw)
        return w / w.sum()


def discrete_mechanism_sample(mech, rng):
    """Exact categorical draw over the test points with exponential-
    mechanism weights."""
    probs = mech.probabilities()
    idx = rng.choice(probs.size, p=probs)
    return mech.test_points[idx].copy()


def random_atom_perfect(kernel, mech, rng, stats=None, beta_alg=None,
                        use_factory=False):
    """One augmented draw; a non-atom outcome is released as-is, an atom
    outcome is replaced by a discrete-mechanism draw.  The marginal law is
    (1 - k_real) * f + k_real * g with k_real the realized atom mass."""
    if mech.spec is not kernel.spec:
        raise ValueError("mechanism and kernel must share the same spec")
    state = atom_mixture_sample(kernel, beta_alg, rng, stats, use_factory=use_factory)
    if is_atom(state):
        return discrete_mechanism_sample(mech, rng)
    return state


@dataclass(frozen=True)
class PaddingSpec:
    """Runtime-privacy padding: p_pad must lower-bound the inner loop's
    per-attempt success probability for every dataset and every state
    (certified analytically per example family; violations abort)."""

    p_pad: float
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not 0.0 < self.p_pad < 1.0:
            raise ValueError("p_pad must lie in (0, 1)")


def runtime_private_sample(kernel, padding, rng, stats=None, beta_alg=None,
                           max_runs=10**6):
    """conf_atom_perfect with padded inner loops: each remainder invocation
    reports a Geometric(p_pad) proposal count regardless of the data, so
    the inner-loop runtime carries no information about the dataset.  The
    released value's law is unchanged."""
    if padding.enabled and not kernel.has_exact_atom_prob_everywhere():
        raise SamplerAbort(
            "runtime padding requires exact atom-hit probabilities at every "
            "state; this kernel lacks the closed-form from-atom integral"
        )
    return conf_atom_perfect(kernel, beta_alg, rng, stats, padding=padding,
                             max_runs=max_runs)


def realized_atom_mass(kernel):
    """w_a / (w_a + integral of h), exact when the kernel has closed-form
    box integrals (mean family); None otherwise."""
    if not kernel._mean_family_at_mode():
        return None
    ih = kernel._box_exp_integral(kernel.spec.rate)
    wa = kernel.spec.atom_weight
    return wa / (wa + ih)

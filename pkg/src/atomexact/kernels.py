"""Symmetric proposals, the plain Metropolis-Hastings baseline, and the
atom-augmented transition kernel.

The augmented chain targets the unnormalized measure

    mu(dy) = h(y) dy + w_a * delta_atom,    h = exp(log_target),

using the mixed proposal "with probability w_prop propose the atom, else
draw from the continuous proposal".  Acceptance probabilities (with the
Hastings factor that makes the table correct for any w_prop; it cancels
at the default w_prop = 1/2):

    continuous -> continuous : min{1, h(y') / h(y)}
    continuous -> atom       : min{1, w_a (1-w_prop) q(a,y) / (w_prop h(y))}
    atom -> continuous       : min{1, w_prop h(y') / (w_a (1-w_prop) q(a,y'))}
    atom -> atom             : 1

``p(y)``, the exact one-step probability of landing in the atom, is
available in closed form from every non-atom state.  From the atom it
requires integrating the acceptance over the proposal; that integral has
a closed form for the mean family (both proposals, when the min resolves
to a single branch) and is otherwise unavailable -- callers needing
exactness there must flip the simulable coin instead (see
``factory.AtomHitCoin``).

Out-of-space proposals score ``h = 0`` and are rejected, which preserves
proposal symmetry on the restricted space; there is no reflection or
wrapping.
"""

import math
from dataclasses import dataclass

import numpy as np

from atomexact.losses import MeanData
from atomexact.spaces import Box


class _AtomMarker:
    """Sentinel for the artificial atom state."""

    __slots__ = ()

    def __repr__(self):
        return "ATOM"


ATOM = _AtomMarker()


def is_atom(state):
    return state is ATOM


class SamplerAbort(RuntimeError):
    """An engineering guard tripped (attempt cap, budget, certification).

    Aborts are loud by design: silently truncating a rejection loop would
    break exactness.
    """


class AtomIntegralUnavailable(RuntimeError):
    """Exact atom-hit probability from the atom state is not available.

    Carries ``lower_bound`` (the certified minimum, namely w_prop) so
    callers can fall back to the simulable-coin path.
    """

    def __init__(self, lower_bound):
        super().__init__(
            "no closed form for the from-atom rejection integral; "
            "use the simulable-coin path"
        )
        self.lower_bound = lower_bound


class UniformProposal:
    """Independent uniform proposal over the output space (box or L1 ball).

    Constant density 1/volume, hence trivially symmetric.
    """

    def __init__(self, space):
        self.space = space
        self._log_density = -math.log(space.volume())

    def sample(self, y, rng):
        return self.space.sample_uniform(rng)

    def log_density(self, y, y2):
        return self._log_density


# The independent uniform proposal doubles as the L1-ball variant; the
# space argument decides which body it draws from.
UniformIndependent = UniformProposal
UniformL1Ball = UniformProposal


class LaplaceWalk:
    """Random-walk proposal with i.i.d. Laplace(rate alpha) increments.

    Density q(y, y') = (alpha/2)^d exp(-alpha ||y - y'||_1) depends only
    on |y - y'|, hence symmetric.  Proposals may leave the space; they are
    then rejected through the zero target density.
    """

    def __init__(self, alpha):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)

    def sample(self, y, rng):
        y = np.asarray(y, dtype=float)
        return y + rng.laplace(0.0, 1.0 / self.alpha, size=y.shape)

    def log_density(self, y, y2):
        d = np.asarray(y).size
        dist = float(np.sum(np.abs(np.asarray(y, dtype=float) - np.asarray(y2, dtype=float))))
        return d * math.log(self.alpha / 2.0) - self.alpha * dist


def mh_step(spec, proposal, y, rng, stats=None):
    """One plain Metropolis-Hastings transition targeting the release density.

    Returns the next state (y itself on rejection).  Out-of-space
    proposals reject automatically.
    """
    if stats is not None:
        stats.n_prop += 1
    y_new = proposal.sample(y, rng)
    log_ratio = spec.log_target(y_new) - spec.log_target(y)
    if log_ratio >= 0 or math.log(rng.random()) < log_ratio:
        return y_new
    return y


@dataclass
class KernelStep:
    """Outcome of one augmented-kernel transition."""

    next: object
    proposed_atom: bool
    accepted: bool


class AtomKernel:
    """Atom-augmented Metropolis-Hastings kernel.

    Parameters
    ----------
    spec : LossSpec
    proposal : UniformProposal or LaplaceWalk
    w_prop : probability of proposing the atom (default 1/2)
    beta : optional override of the certified minorization constant;
        by default a closed-form certificate is computed (tight for the
        mean family, conservative otherwise).  Must satisfy
        0 < beta <= inf_y p(y).
    """

    def __init__(self, spec, proposal, w_prop=0.5, beta=None):
        if not 0.0 < w_prop < 1.0:
            raise ValueError("w_prop must lie strictly between 0 and 1")
        self.spec = spec
        self.proposal = proposal
        self.w_prop = float(w_prop)
        self.beta = float(beta) if beta is not None else self._certify_beta()
        if not 0.0 < self.beta <= self.w_prop:
            raise ValueError("beta must lie in (0, w_prop]")
        self._p_atom_from_atom = self._from_atom_closed_form()

    # -- closed-form ingredients ------------------------------------------

    def log_h(self, y):
        return self.spec.log_target(y)

    def _log_hastings(self):
        # log of w_a (1 - w_prop) / w_prop, the atom-vs-continuous proposal
        # imbalance entering cases (ii)/(iii).
        return math.log(self.spec.atom_weight) + math.log1p(-self.w_prop) - math.log(self.w_prop)

    def accept_continuous(self, y, y2):
        """Case (i): continuous y -> continuous y2."""
        log_ratio = self.log_h(y2) - self.log_h(y)
        return min(1.0, math.exp(min(log_ratio, 0.0)))

    def accept_to_atom(self, y):
        """Case (ii): continuous y -> atom."""
        log_arg = (
            self._log_hastings()
            + self.proposal.log_density(self.spec.atom, y)
            - self.log_h(y)
        )
        return 1.0 if log_arg >= 0 else math.exp(log_arg)

    def accept_from_atom(self, y2):
        """Case (iii): atom -> continuous y2."""
        lh = self.log_h(y2)
        if lh == -np.inf:
            return 0.0
        log_arg = lh - self._log_hastings() - self.proposal.log_density(self.spec.atom, y2)
        return 1.0 if log_arg >= 0 else math.exp(log_arg)

    def atom_prob(self, y):
        """Exact p(y) = P(next state is the atom | current state y).

        Raises AtomIntegralUnavailable for y = atom when the rejection
        integral has no closed form.
        """
        if is_atom(y):
            if self._p_atom_from_atom is None:
                raise AtomIntegralUnavailable(lower_bound=self.w_prop)
            return self._p_atom_from_atom
        return self.w_prop * self.accept_to_atom(y)

    def inner_success_prob(self, y):
        """Exact per-attempt success probability 1 - p(y) of the
        remainder rejection loop at state y."""
        return 1.0 - self.atom_prob(y)

    def has_exact_atom_prob_everywhere(self):
        return self._p_atom_from_atom is not None

    # -- certification ------------------------------------------------------

    def _certify_beta(self):
        """Closed-form lower bound on inf_y p(y) over non-atom states.

        (From the atom, p(atom) >= w_prop >= beta automatically.)
        Uses h <= w_a throughout; for the mean family with a Laplace walk
        the ratio q(a,y)/h(y) is monotone in ||y - xbar||_1, which gives a
        much tighter certificate than the generic diameter bound.
        """
        w = self.w_prop
        hast = self.spec.atom_weight * (1.0 - w) / w
        if isinstance(self.proposal, UniformProposal):
            q0 = 1.0 / self.spec.space.volume()
            return w * min(1.0, hast * q0)
        if isinstance(self.proposal, LaplaceWalk):
            alpha = self.proposal.alpha
            d = self.spec.atom.size
            qa_scale = (alpha / 2.0) ** d
            if self._mean_family_at_mode():
                b = self.spec.rate
                t_max = self._max_l1_from_atom()
                # ratio(t) = hast * qa_scale * exp((b - alpha) t); take its
                # minimum over [0, t_max].
                t_star = 0.0 if b >= alpha else t_max
                log_min = (
                    math.log(hast) + math.log(qa_scale) + (b - alpha) * t_star
                )
                return w * min(1.0, math.exp(min(log_min, 0.0)))
            diam = self.spec.space.l1_diameter()
            log_min = math.log(hast) + math.log(qa_scale) - alpha * diam
            return w * min(1.0, math.exp(min(log_min, 0.0)))
        raise TypeError("no certificate for this proposal type")

    def _mean_family_at_mode(self):
        """True when the target is the mean family on a box with the atom
        at xbar, so h(y) = exp(-rate * ||y - atom||_1) exactly."""
        return (
            isinstance(self.spec.dataset, MeanData)
            and isinstance(self.spec.space, Box)
            and np.array_equal(self.spec.atom, self.spec.dataset.xbar)
        )

    def _max_l1_from_atom(self):
        space = self.spec.space
        a = self.spec.atom
        return float(np.sum(np.maximum(a - space.lo, space.hi - a)))

    def _box_exp_integral(self, rate):
        """prod_j integral over [lo_j, hi_j] of exp(-rate |t - atom_j|) dt."""
        space = self.spec.space
        a = self.spec.atom
        if rate == 0.0:
            return space.volume()
        lo_side = a - space.lo
        hi_side = space.hi - a
        per = (2.0 - np.exp(-rate * lo_side) - np.exp(-rate * hi_side)) / rate
        return float(np.prod(per))

    def _from_atom_closed_form(self):
        """p(atom) = w_prop + (1 - w_prop) (1 - I), with
        I = integral of q(a, y') * accept_from_atom(y') over the space,
        when the acceptance min resolves to one branch globally."""
        if not self._mean_family_at_mode():
            return None
        w = self.w_prop
        hast = self.spec.atom_weight * (1.0 - w) / w
        b = self.spec.rate
        if isinstance(self.proposal, UniformProposal):
            q0 = 1.0 / self.spec.space.volume()
            # accept_from_atom = min{1, h / (hast * q0)}; h <= 1.
            if hast * q0 >= 1.0:
                integral = q0 * self._box_exp_integral(b) / (hast * q0)
            else:
                return None  # mixed-branch integral
        elif isinstance(self.proposal, LaplaceWalk):
            alpha = self.proposal.alpha
            d = self.spec.atom.size
            qa_scale = (alpha / 2.0) ** d
            t_max = self._max_l1_from_atom()
            # ratio(t) = h / (hast q) = exp((alpha - b) t) / (hast qa_scale)
            log_r0 = -math.log(hast) - math.log(qa_scale)
            log_r1 = log_r0 + (alpha - b) * t_max
            if max(log_r0, log_r1) <= 0.0:
                # acceptance = ratio everywhere: integrand q * ratio = h / hast
                integral = self._box_exp_integral(b) / hast
            elif min(log_r0, log_r1) >= 0.0:
                # acceptance = 1 everywhere: integral = Laplace mass of box
                integral = qa_scale * self._box_exp_integral(alpha)
            else:
                return None
        else:
            return None
        return w + (1.0 - w) * (1.0 - integral)

    # -- simulation ----------------------------------------------------------

    def step(self, y, rng, stats=None):
        """One transition of the augmented kernel; consumes one proposal."""
        if stats is not None:
            stats.n_prop += 1
        if rng.random() < self.w_prop:
            # atom proposed
            if is_atom(y):
                return KernelStep(ATOM, True, True)
            if rng.random() < self.accept_to_atom(y):
                return KernelStep(ATOM, True, True)
            return KernelStep(y, True, False)
        # continuous proposal
        origin = self.spec.atom if is_atom(y) else y
        y_new = self.proposal.sample(origin, rng)
        if is_atom(y):
            if rng.random() < self.accept_from_atom(y_new):
                return KernelStep(y_new, False, True)
            return KernelStep(ATOM, False, False)
        log_ratio = self.log_h(y_new) - self.log_h(y)
        if log_ratio >= 0 or math.log(rng.random()) < log_ratio:
            return KernelStep(y_new, False, True)
        return KernelStep(y, False, False)


def atom_transition_prob(kernel, y):
    """Exact probability that the next state of the augmented kernel is the
    atom.  For y = atom this needs the closed-form rejection integral and
    raises AtomIntegralUnavailable when the kernel lacks one."""
    return kernel.atom_prob(y)


def atom_step(kernel, y, rng, stats=None):
    """One transition of the augmented kernel (see AtomKernel.step)."""
    return kernel.step(y, rng, stats)


def remainder_step(kernel, y, rng, stats=None, max_attempts=10**9):
    """Exact draw from the augmented kernel conditioned on not landing in
    the atom, by rejection: repeat the step until the result is non-atom.

    Increments ``stats.n_inner`` by the number of attempts.  Exceeding the
    attempt cap aborts loudly (it signals a miscertified beta or a
    degenerate kernel, never a condition to paper over).
    """
    attempts = 0
    while attempts < max_attempts:
        attempts += 1
        step = kernel.step(y, rng, stats)
        if not is_atom(step.next):
            if stats is not None:
                stats.n_inner += attempts
            return step.next, attempts
    raise SamplerAbort(
        f"remainder rejection loop exceeded {max_attempts} attempts; "
        "the kernel's atom-hit probability is too close to 1"
    )

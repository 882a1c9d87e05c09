"""Exact Bernoulli factories.

``linear_factory(coin, scale, slack, rng, stats)`` returns an exact
Bernoulli(scale * q) bit, where q is the coin's unknown success
probability and the caller certifies ``scale * q <= 1 - slack``.

Three execution tiers, chosen per coin:

1. coins that expose an exactly-known probability: direct draw;
2. coins that expose a structured decomposition ``q = c * theta`` with a
   known constant c and a simulable theta-event (the atom-hit coin of the
   augmented kernel does, from the atom state): one theta flip thinned by
   the known constant ``scale * c <= 1``;
3. black-box coins: scale <= 1 is plain thinning; scale > 1 runs the
   logistic-walk construction (geometric escalation of the constant),
   whose exactness is pinned down by an enumeration test over the full
   algorithm state space.

Expected flips stay below 12/slack on the certified domain.
"""

import math
from dataclasses import dataclass, field

from atomexact.kernels import SamplerAbort, is_atom


@dataclass
class Coin:
    """A flippable coin with unknown success probability.

    ``flip(rng)`` must return 0 or 1, i.i.d. across calls.  ``p_lower``
    and ``p_upper`` are certified bounds on the success probability
    (defaults are vacuous).
    """

    flip: object
    p_lower: float = 0.0
    p_upper: float = 1.0
    known_prob: float = None       # set when p is exactly known
    known_scale: float = None      # structured form: p = known_scale * theta
    theta_flip: object = None      # simulable Bernoulli(theta) event

    def __call__(self, rng):
        return self.flip(rng)


def constant_coin(p):
    """Reference coin with exactly known success probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return Coin(
        flip=lambda rng: 1 if rng.random() < p else 0,
        p_lower=p,
        p_upper=p,
        known_prob=p,
    )


def blackbox_coin(p):
    """Synthetic coin that hides its probability (test doubles)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return Coin(flip=lambda rng: 1 if rng.random() < p else 0, p_lower=p, p_upper=p)


def inverted_coin(coin):
    """Coin with success probability 1 - p."""
    return Coin(
        flip=lambda rng: 1 - coin.flip(rng),
        p_lower=1.0 - coin.p_upper,
        p_upper=1.0 - coin.p_lower,
        known_prob=None if coin.known_prob is None else 1.0 - coin.known_prob,
    )


def atom_hit_coin(kernel, state, stats=None):
    """Coin whose flip simulates one augmented-kernel step from ``state``
    and reports whether it landed in the atom; success probability is the
    exact p(state) >= kernel.beta."""

    def flip(rng):
        return 1 if is_atom(kernel.step(state, rng, stats).next) else 0

    known = None
    scale = None
    theta = None
    if is_atom(state):
        if kernel.has_exact_atom_prob_everywhere():
            known = kernel.atom_prob(state)
        # Structured complement: 1 - p(atom) = (1 - w_prop) * theta where
        # theta is the from-atom acceptance event, simulable in one
        # proposal draw.  Used by the inverted-target fast path below.
        scale = 1.0 - kernel.w_prop

        def theta(rng, _k=kernel):
            y_new = _k.proposal.sample(_k.spec.atom, rng)
            if stats is not None:
                stats.n_prop += 1
            return 1 if rng.random() < _k.accept_from_atom(y_new) else 0

    else:
        known = kernel.atom_prob(state)
    return Coin(flip=flip, p_lower=kernel.beta, known_prob=known,
                known_scale=scale, theta_flip=theta)


def inverted_atom_hit_coin(kernel, state, stats=None):
    """The (1 - p(state))-coin consumed by the sampling loop's factory
    path, keeping the structured decomposition available."""
    base = atom_hit_coin(kernel, state, stats)
    inv = inverted_coin(base)
    if base.known_scale is not None and base.known_prob is None:
        # 1 - p(atom) = known_scale * theta exactly.
        inv.known_scale = base.known_scale
        inv.theta_flip = base.theta_flip
    inv.p_lower = 0.0
    inv.p_upper = 1.0 - kernel.beta
    return inv


def linear_factory(coin, scale, slack, rng, stats=None, flip_budget=10**8):
    """Exact Bernoulli(scale * q) from a q-coin, given scale * q <= 1 - slack.

    Increments ``stats.n_bern`` by the number of coin flips consumed.
    Exceeding the flip budget aborts loudly: it signals a violated slack
    certificate, not a condition to truncate silently.
    """
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    if not 0.0 < slack < 1.0:
        raise ValueError("slack must lie in (0, 1)")

    if coin.known_prob is not None:
        target = scale * coin.known_prob
        if target > 1.0 + 1e-12:
            raise SamplerAbort("slack certificate violated: scale * q > 1")
        return 1 if rng.random() < min(target, 1.0) else 0

    if coin.known_scale is not None and scale * coin.known_scale <= 1.0:
        # q = known_scale * theta, so scale * q = (scale * known_scale) * theta
        # with a subunit known constant: one theta flip, thinned.
        if stats is not None:
            stats.n_bern += 1
        bit = coin.theta_flip(rng)
        if bit == 0:
            return 0
        return 1 if rng.random() < scale * coin.known_scale else 0

    counter = _FlipCounter(coin, stats, flip_budget)
    if scale <= 1.0:
        # Thinning: flip once, keep with probability `scale`.
        if rng.random() >= scale:
            return 0
        return counter.flip(rng)
    return _linear_blackbox(counter, scale, slack, rng)


class _FlipCounter:
    """Wraps a coin with flip accounting and the budget guard."""

    def __init__(self, coin, stats, budget):
        self._coin = coin
        self._stats = stats
        self._budget = budget
        self.flips = 0

    def flip(self, rng):
        if self.flips >= self._budget:
            raise SamplerAbort(
                "Bernoulli factory flip budget exceeded; the slack "
                "certificate for the target probability is violated"
            )
        self.flips += 1
        if self._stats is not None:
            self._stats.n_bern += 1
        return self._coin.flip(rng)


def _ladder_plan(scale, eps):
    """Parameters of one ladder level: salvage depth k0, the known envelope
    xhat, and the escalated level's slack.

    Exactness holds for any k0 >= 1; k0 only controls the trade-off between
    climb cost and salvage branching, chosen so the expected number of
    spawned sub-level calls stays below 1/2 (subcritical recursion).
    """
    xhat = 1.0 - eps / 2.0
    short_circuit = min(60.0, xhat / (xhat - (1.0 - eps)))
    k0 = 1
    while xhat ** k0 * short_circuit > 0.5 and k0 < 500:
        k0 += 1
    eps2 = 1.0 - (1.0 - eps) / xhat
    return k0, xhat, eps2


# Frame phases of the ladder state machine.  The same transition function
# drives the production sampler (outcomes from rng/coin) and the exact
# state-space enumeration used in the tests, so the shipped code path is
# the one whose output probability is verified to equal scale * q.
_GATE_NEXT = "gate"
_COIN_NEXT = "coin"


def _ladder_start(scale, eps):
    k0, xhat, eps2 = _ladder_plan(scale, eps)
    if k0 >= 2:
        return (("walk", scale, eps, 1, 1, _GATE_NEXT),)
    return (("salvage", scale, eps),)


def _ladder_requirement(stack):
    """What outcome the top frame needs: ("bern", c) or ("flip",)."""
    frame = stack[-1]
    kind = frame[0]
    if kind == "walk":
        scale = frame[1]
        if frame[5] == _GATE_NEXT:
            return ("bern", scale / (1.0 + scale))
        return ("flip",)
    if kind == "salvage":
        scale, eps = frame[1], frame[2]
        k0, xhat, _ = _ladder_plan(scale, eps)
        return ("bern", xhat ** k0)
    raise AssertionError(f"frame {kind} requires no outcome")


def _ladder_transition(stack, outcome):
    """Advance the machine by one observed outcome.

    Returns ("state", new_stack) or ("done", bit).
    """
    stack = list(stack)
    frame = stack.pop()
    kind = frame[0]
    if kind == "walk":
        _, scale, eps, k, pos, phase = frame
        if phase == _GATE_NEXT:
            if outcome == 0:
                return _walk_move(stack, scale, eps, k, pos, -1)
            stack.append(("walk", scale, eps, k, pos, _COIN_NEXT))
            return ("state", tuple(stack))
        # coin outcome: heads moves up, tails re-enters the logistic loop
        if outcome == 1:
            return _walk_move(stack, scale, eps, k, pos, +1)
        stack.append(("walk", scale, eps, k, pos, _GATE_NEXT))
        return ("state", tuple(stack))
    if kind == "salvage":
        _, scale, eps = frame
        if outcome == 0:
            return _level_result(stack, 0)
        k0, xhat, eps2 = _ladder_plan(scale, eps)
        stack.append(("and", scale, eps, k0))
        return _push_sublevel(stack, scale / xhat, eps2)
    raise AssertionError(f"unexpected frame {kind}")


def _walk_move(stack, scale, eps, k, pos, delta):
    pos += delta
    if pos == k + 1:
        return _level_result(stack, 1)
    if pos == 0:
        k += 1
        k0, _, _ = _ladder_plan(scale, eps)
        if k >= k0:
            stack.append(("salvage", scale, eps))
        else:
            stack.append(("walk", scale, eps, k, 1, _GATE_NEXT))
        return ("state", tuple(stack))
    stack.append(("walk", scale, eps, k, pos, _GATE_NEXT))
    return ("state", tuple(stack))


def _push_sublevel(stack, scale, eps):
    k0, _, _ = _ladder_plan(scale, eps)
    if k0 >= 2:
        stack.append(("walk", scale, eps, 1, 1, _GATE_NEXT))
    else:
        stack.append(("salvage", scale, eps))
    return ("state", tuple(stack))


def _level_result(stack, bit):
    """Resolve a finished level into the frame below (an AND frame) or,
    with an empty stack, into the machine's final output."""
    while True:
        if not stack:
            return ("done", bit)
        frame = stack.pop()
        if frame[0] != "and":
            raise AssertionError("level result must land on an and-frame")
        _, scale, eps, remaining = frame
        if bit == 0:
            bit = 0  # short-circuit: the whole AND fails
            continue
        remaining -= 1
        if remaining == 0:
            bit = 1
            continue
        stack.append(("and", scale, eps, remaining))
        k0, xhat, eps2 = _ladder_plan(scale, eps)
        return _push_sublevel(stack, scale / xhat, eps2)


def _linear_blackbox(counter, scale, slack, rng):
    """Exact Bernoulli(scale * q) for scale > 1 via the ladder machine."""
    stack = _ladder_start(scale, slack)
    while True:
        req = _ladder_requirement(stack)
        if req[0] == "bern":
            outcome = 1 if rng.random() < req[1] else 0
        else:
            outcome = counter.flip(rng)
        status, value = _ladder_transition(stack, outcome)
        if status == "done":
            return value
        stack = value


def bernoulli_parameter(kernel, state, beta_alg):
    """The continue-probability (1 - p(state)) / (1 - beta_alg) of the
    regeneration loop, exact, for states with computable p."""
    p = kernel.atom_prob(state)
    t = (1.0 - p) / (1.0 - beta_alg)
    if t > 1.0 + 1e-12:
        raise SamplerAbort("beta_alg exceeds the kernel's atom-hit probability")
    return min(t, 1.0)

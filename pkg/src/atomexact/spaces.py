"""Compact output spaces: axis-aligned boxes and L1 balls.

Both support exact volume, membership tests, uniform sampling and the L1
diameter needed for minorization certificates.  Unbounded spaces are out
of scope: every sampler here relies on compactness.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod_j [lo_j, hi_j]`` in R^d."""

    lo: np.ndarray
    hi: np.ndarray

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise SpaceError("lo and hi must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise SpaceError("box requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, d):
        """The unit cube [0, 1]^d."""
        return cls(np.zeros(d), np.ones(d))

    @property
    def dimension(self):
        return self.lo.size

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def l1_diameter(self):
        return float(np.sum(self.hi - self.lo))

    def contains(self, y, tol=0.0):
        y = np.asarray(y, dtype=float)
        return bool(np.all(y >= self.lo - tol) and np.all(y <= self.hi + tol))

    def sample_uniform(self, rng):
        return rng.uniform(self.lo, self.hi)


@dataclass(frozen=True)
class L1Ball:
    """L1 ball ``{y in R^p : ||y||_1 <= radius}``."""

    dimension: int
    radius: float

    def __init__(self, dimension, radius):
        if dimension < 1:
            raise SpaceError("dimension must be >= 1")
        if radius <= 0:
            raise SpaceError("radius must be positive")
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "radius", float(radius))

    def volume(self):
        p, b = self.dimension, self.radius
        return (2.0 * b) ** p / math.factorial(p)

    def l1_diameter(self):
        return 2.0 * self.radius

    def contains(self, y, tol=0.0):
        y = np.asarray(y, dtype=float)
        return bool(y.size == self.dimension and np.sum(np.abs(y)) <= self.radius + tol)

    def sample_uniform(self, rng):
        # Direction from the simplex (normalized exponentials) with random
        # signs; radius scaled by U^(1/p) so the draw is uniform in volume.
        p = self.dimension
        e = rng.standard_exponential(p)
        direction = e / e.sum()
        signs = rng.integers(0, 2, size=p) * 2 - 1
        r = self.radius * rng.random() ** (1.0 / p)
        return r * signs * direction


def space_volume(space):
    """Lebesgue volume of the space (always positive and finite)."""
    return space.volume()


def sample_uniform(space, rng):
    """Exact uniform draw from the space."""
    return space.sample_uniform(rng)

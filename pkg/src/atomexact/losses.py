"""Loss functions, datasets and the unnormalized target density.

Two dataset families are supported:

* ``MeanData`` -- release a private d-dimensional mean over [0,1]^d with
  L1 loss ``||y - xbar||_1`` and sensitivity ``d/n`` (one record moving
  freely in [0,1]^d shifts each coordinate of xbar by at most 1/n).
* ``RidgeData`` -- ridge regression released through the gradient-norm
  loss ``||X^T (X y - Z) + lam * y||_1`` on the L1 ball of radius B,
  with sensitivity ``2 (1 + B) p``.

The release density is ``f(y) proportional to exp(-eps * loss(y) / (2 * sens))``
restricted to the output space.  ``LossSpec.log_target`` returns the
unnormalized log density, ``-inf`` outside the space (samplers treat
that as an automatic rejection, never an error).
"""

from dataclasses import dataclass, field

import numpy as np

from atomexact.spaces import Box, L1Ball


class DomainError(ValueError):
    """Point outside the declared output space."""


@dataclass(frozen=True)
class MeanData:
    """Summary of n records in [0,1]^d through their mean.

    Parameters
    ----------
    xbar : array-like, the record mean, each coordinate in [0, 1].
    n : number of records (>= 1).
    """

    xbar: np.ndarray
    n: int

    def __init__(self, xbar, n):
        xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
        if np.any(xbar < 0) or np.any(xbar > 1):
            raise ValueError("xbar coordinates must lie in [0, 1]")
        if n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "xbar", xbar)
        object.__setattr__(self, "n", int(n))

    @property
    def dimension(self):
        return self.xbar.size

    def loss(self, y):
        return float(np.sum(np.abs(np.asarray(y, dtype=float) - self.xbar)))

    def sensitivity(self):
        return self.dimension / self.n

    def minimizer(self):
        return self.xbar.copy()

    def default_space(self):
        return Box.unit(self.dimension)


@dataclass(frozen=True)
class RidgeData:
    """Design matrix X in [-1,1]^(n x p), response Z in [-1,1]^n, ridge
    penalty lam >= 0, and L1 output radius B > 0."""

    X: np.ndarray
    Z: np.ndarray
    lam: float
    B: float

    def __init__(self, X, Z, lam, B):
        X = np.asarray(X, dtype=float)
        Z = np.asarray(Z, dtype=float)
        if X.ndim != 2 or Z.ndim != 1 or X.shape[0] != Z.size:
            raise ValueError("X must be (n, p) and Z length n")
        if np.max(np.abs(X)) > 1 + 1e-12 or np.max(np.abs(Z)) > 1 + 1e-12:
            raise ValueError("entries of X and Z must lie in [-1, 1]")
        if lam < 0:
            raise ValueError("lam must be >= 0")
        if B <= 0:
            raise ValueError("B must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "lam", float(lam))
        object.__setattr__(self, "B", float(B))

    @property
    def dimension(self):
        return self.X.shape[1]

    def loss(self, y):
        y = np.asarray(y, dtype=float)
        grad = self.X.T @ (self.X @ y - self.Z) + self.lam * y
        return float(np.sum(np.abs(grad)))

    def sensitivity(self):
        return 2.0 * (1.0 + self.B) * self.dimension

    def minimizer(self):
        """Ridge solution, Euclidean-projected onto the L1 ball if needed."""
        p = self.dimension
        sol = np.linalg.solve(self.X.T @ self.X + self.lam * np.eye(p), self.X.T @ self.Z)
        if np.sum(np.abs(sol)) <= self.B:
            return sol
        return project_l1(sol, self.B)

    def default_space(self):
        return L1Ball(self.dimension, self.B)


def project_l1(v, radius):
    """Euclidean projection of v onto the L1 ball of the given radius."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, a.size + 1)
    rho = np.max(ks[u - (css - radius) / ks > 0])
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


@dataclass(frozen=True)
class LossSpec:
    """Everything a sampler needs: dataset, space, privacy budget, the
    atom location and its unnormalized weight.

    ``atom_weight`` must dominate the unnormalized density, i.e.
    ``w_a >= sup_y exp(-eps * loss(y) / (2 * sens))``; since the loss is
    nonnegative the default ``w_a = 1`` always qualifies.
    """

    dataset: object
    space: object
    epsilon: float
    atom: np.ndarray = None
    atom_weight: float = 1.0

    def __init__(self, dataset, space=None, epsilon=1.0, atom=None, atom_weight=1.0):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if atom_weight < 1.0:
            raise ValueError("atom_weight must be >= 1 (it must dominate exp(-loss scale))")
        if space is None:
            space = dataset.default_space()
        if atom is None:
            atom = dataset.minimizer()
        atom = np.atleast_1d(np.asarray(atom, dtype=float))
        if not space.contains(atom, tol=1e-9):
            raise ValueError("atom must lie in the output space")
        object.__setattr__(self, "dataset", dataset)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "atom", atom)
        object.__setattr__(self, "atom_weight", float(atom_weight))

    @property
    def delta_l(self):
        return self.dataset.sensitivity()

    @property
    def rate(self):
        """Exponent scale eps / (2 * sensitivity)."""
        return self.epsilon / (2.0 * self.delta_l)

    def loss(self, y):
        """Loss at an in-space point; raises DomainError outside."""
        if not self.space.contains(y, tol=1e-12):
            raise DomainError("point outside the output space")
        return self.dataset.loss(y)

    def log_target(self, y):
        """Unnormalized log density; -inf outside the space (auto-reject)."""
        if not self.space.contains(y, tol=1e-12):
            return -np.inf
        return -self.rate * self.dataset.loss(y)

    def target(self, y):
        lt = self.log_target(y)
        return 0.0 if lt == -np.inf else float(np.exp(lt))


def loss_eval(spec, y):
    """Loss of the release candidate y under the spec's dataset."""
    return spec.loss(y)


def log_target(spec, y):
    """Unnormalized log release density at y (see LossSpec.log_target)."""
    return spec.log_target(y)


def load_ridge_csv(path, lam, B):
    """Ridge dataset from a CSV with header ``x1,...,xp,z``."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        header = [h.strip() for h in header]
        if header[-1].lower() != "z" or not all(h.lower().startswith("x") for h in header[:-1]):
            raise ValueError("ridge CSV must have header x1,...,xp,z")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    return RidgeData(data[:, :-1], data[:, -1], lam=lam, B=B)


def load_mean_csv(path, n):
    """Mean dataset from a CSV holding a single row: the mean vector."""
    import csv

    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) != 1:
        raise ValueError("mean CSV must contain exactly one row (the mean vector)")
    xbar = np.asarray([float(v) for v in rows[0]], dtype=float)
    return MeanData(xbar, n)

"""Finitely supported probability measures on the real line.

Quantile calculus, the quantile (monotone) coupling, vector majorization and
the convex order live here; transport solvers build on these primitives.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ShapeError

WEIGHT_SUM_TOL = 1e-12
SUM_TOL = 1e-9
# cumulative-weight breakpoints closer than this are the same level
LEVEL_MERGE_TOL = 1e-12

__all__ = [
    "DiscreteMeasure",
    "RearrangementMap",
    "Refinement",
    "cdf",
    "common_refinement",
    "convex_order_leq",
    "is_majorized",
    "monotone_rearrangement",
    "quantile",
    "uniform",
]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_i w_i delta_{a_i}`` on the real line.

    Construction sorts the atoms, merges bit-identical locations and rescales
    the weights when they do not already sum to one within 1e-12.  Weights
    default to uniform.

    Parameters
    ----------
    atoms : array_like
        Finite real locations.
    weights : array_like, optional
        Non-negative masses; zero-mass atoms are dropped.
    """

    atoms: np.ndarray
    weights: np.ndarray = None
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        if atoms.size == 0:
            raise ParameterError("a measure needs at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise DomainError("atoms must be finite")
        if self.weights is None:
            weights = np.full(atoms.size, 1.0 / atoms.size)
        else:
            weights = np.asarray(self.weights, dtype=float).ravel()
        if weights.shape != atoms.shape:
            raise ShapeError(
                f"{atoms.size} atoms but {weights.size} weights")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("weights must be finite and non-negative")
        keep = weights > 0
        atoms, weights = atoms[keep], weights[keep]
        if atoms.size == 0:
            raise DomainError("total mass is zero")

        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        uniq, inverse = np.unique(atoms, return_inverse=True)
        if uniq.size != atoms.size:
            weights = np.bincount(inverse, weights=weights)
            atoms = uniq
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            weights = weights / total

        atoms.setflags(write=False)
        weights.setflags(write=False)
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cumulative", cum)

    def __len__(self):
        return self.atoms.size

    def __repr__(self):
        return (f"DiscreteMeasure(atoms={self.atoms.tolist()}, "
                f"weights={self.weights.tolist()})")

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    @property
    def mean(self):
        return float(np.dot(self.weights, self.atoms))

    def expect(self, func):
        """Integral of a vectorized ``func`` against the measure."""
        return float(np.dot(self.weights, func(self.atoms)))

    def cdf(self, x):
        return cdf(self, x)

    def quantile(self, t):
        return quantile(self, t)

    def call_function(self, k):
        """``k -> integral of (x - k)_+``, vectorized in ``k``."""
        k = np.asarray(k, dtype=float)
        gaps = np.maximum(self.atoms[None, :] - k.reshape(-1, 1), 0.0)
        return (gaps @ self.weights).reshape(k.shape)


def uniform(points):
    """Equal-weight empirical measure of ``points`` (duplicates allowed)."""
    return DiscreteMeasure(points)


def cdf(mu, x):
    """Right-continuous distribution function ``F(x) = mu((-inf, x])``."""
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(mu.atoms, x, side="right")
    cum = np.concatenate(([0.0], mu.cumulative))
    out = cum[idx]
    return float(out) if out.ndim == 0 else out


def quantile(mu, t):
    """Left-continuous generalized inverse ``inf{x : F(x) >= t}``.

    Parameters
    ----------
    mu : DiscreteMeasure
    t : float or array_like
        Levels in ``(0, 1]``.

    Raises
    ------
    DomainError
        If a level lies outside ``(0, 1]``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0) | (t > 1)):
        raise DomainError("quantile levels must lie in (0, 1]")
    idx = np.searchsorted(mu.cumulative, t, side="left")
    out = mu.atoms[np.minimum(idx, mu.atoms.size - 1)]
    return float(out) if out.ndim == 0 else out


def is_majorized(a, b, tol=SUM_TOL):
    """Whether vector ``a`` is majorized by ``b``.

    Every sum of the ``j`` largest entries of ``a`` must not exceed the
    corresponding sum for ``b`` and the totals must agree within ``tol``.
    Inputs are sorted internally, so any ordering is accepted.

    Raises
    ------
    ShapeError
        If the vectors differ in length.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.shape != b.shape:
        raise ShapeError(f"lengths differ: {a.size} vs {b.size}")
    top_a = np.cumsum(a[::-1])
    top_b = np.cumsum(b[::-1])
    if abs(top_a[-1] - top_b[-1]) > tol:
        return False
    return bool(np.all(top_a[:-1] <= top_b[:-1] + tol))


def convex_order_leq(nu1, nu2, tol=SUM_TOL):
    """Whether ``nu1`` precedes ``nu2`` in the convex order.

    Decided by equal means and the comparison of call functions
    ``k -> int (x - k)_+`` at every atom of either measure; for finitely
    supported measures this is equivalent to testing all convex functions.
    """
    if abs(nu1.mean - nu2.mean) > tol:
        return False
    ks = np.union1d(nu1.atoms, nu2.atoms)
    return bool(np.all(nu1.call_function(ks) <= nu2.call_function(ks) + tol))


@dataclass(frozen=True)
class Refinement:
    """Two quantile functions sampled on their common partition of (0, 1].

    Cell ``k`` covers levels ``(upper[k-1], upper[k]]`` with mass
    ``masses[k]``; on it the quantile functions are the constants
    ``source[k]`` and ``target[k]``, attained at atom indices
    ``source_index[k]`` and ``target_index[k]``.
    """

    upper: np.ndarray
    masses: np.ndarray
    source: np.ndarray
    target: np.ndarray
    source_index: np.ndarray
    target_index: np.ndarray

    @property
    def midpoints(self):
        return self.upper - 0.5 * self.masses


def common_refinement(mu, nu):
    """Partition (0, 1] by the cumulative weights of both measures."""
    levels = np.sort(np.concatenate((mu.cumulative, nu.cumulative)))
    kept = []
    last = 0.0
    for lev in levels:
        if lev - last > LEVEL_MERGE_TOL:
            kept.append(lev)
            last = lev
    kept[-1] = 1.0
    upper = np.array(kept)
    masses = np.diff(np.concatenate(([0.0], upper)))
    mids = upper - 0.5 * masses
    si = np.minimum(np.searchsorted(mu.cumulative, mids), len(mu) - 1)
    ti = np.minimum(np.searchsorted(nu.cumulative, mids), len(nu) - 1)
    return Refinement(upper, masses, mu.atoms[si], nu.atoms[ti], si, ti)


@dataclass(frozen=True)
class RearrangementMap:
    """Table form of the monotone rearrangement between two measures.

    Row ``k`` carries mass ``masses[k]`` from ``source[k]`` to ``target[k]``
    for quantile levels up to ``levels[k]``.
    """

    levels: np.ndarray
    masses: np.ndarray
    source: np.ndarray
    target: np.ndarray

    def rows(self):
        return list(zip(self.levels.tolist(), self.source.tolist(),
                        self.target.tolist(), self.masses.tolist()))

    def pushforward(self):
        """Image of the source measure; equals the target measure."""
        return DiscreteMeasure(self.target, self.masses)

    def source_measure(self):
        return DiscreteMeasure(self.source, self.masses)


def monotone_rearrangement(mu, nu):
    """Quantile coupling pairing ``F_mu^{-1}(u)`` with ``F_nu^{-1}(u)``.

    >>> m = monotone_rearrangement(DiscreteMeasure([0.0]), uniform([-1, 1]))
    >>> m.rows()
    [(0.5, 0.0, -1.0, 0.5), (1.0, 0.0, 1.0, 0.5)]
    """
    ref = common_refinement(mu, nu)
    return RearrangementMap(ref.upper, ref.masses, ref.source, ref.target)

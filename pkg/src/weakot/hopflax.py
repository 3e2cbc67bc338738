"""Hopf-Lax (inf-convolution) operator on convex functions of one variable.

``Q_t f(x) = inf_y { f(y) + t theta((y - x) / t) }``.  For strictly convex
``theta`` and convex ``f`` the infimum is attained at the unique root of the
monotone stationarity map ``y -> f'(y) + theta'((y - x) / t)``; everything in
this module is built on that root.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._numerics import (bisect_increasing, expand_bracket, integrate_panels,
                        thread_count)
from .costs import conjugate
from .errors import CapabilityError, DomainError, ParameterError, ShapeError

__all__ = [
    "ConvexFunction1D",
    "GridFunction",
    "HopfLaxResult",
    "constant",
    "forward_map",
    "from_callables",
    "grid_infconv_oracle",
    "hinge_squared",
    "hj_residual",
    "hopf_lax",
    "linear",
    "quadratic",
    "quartic",
    "smooth_abs",
    "softplus",
    "split_cost",
]

MIN_TIME = 1e-8
QUAD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ConvexFunction1D:
    """A convex function with derivative access, vectorized.

    ``kind`` is ``"analytic"`` for closed forms and ``"quadrature"`` for
    antiderivatives produced by :func:`split_cost`.
    """

    eval: callable
    deriv: callable
    lower_bound: float = -np.inf
    kind: str = "analytic"
    name: str = "f"

    def __call__(self, x):
        return self.eval(x)

    def __repr__(self):
        return f"ConvexFunction1D({self.name})"


def from_callables(eval, deriv, lower_bound=-np.inf, name="custom"):
    return ConvexFunction1D(eval, deriv, lower_bound, "analytic", name)


def quadratic(scale=1.0, center=0.0):
    """``scale * (x - center)**2 / 2``."""
    return ConvexFunction1D(
        lambda x: 0.5 * scale * (np.asarray(x, dtype=float) - center) ** 2,
        lambda x: scale * (np.asarray(x, dtype=float) - center),
        0.0, name=f"quadratic(scale={scale:g},center={center:g})")


def linear(slope):
    """``slope * x``; bounded below only when the slope is zero."""
    return ConvexFunction1D(
        lambda x: slope * np.asarray(x, dtype=float),
        lambda x: np.full_like(np.asarray(x, dtype=float), slope),
        0.0 if slope == 0 else -np.inf, name=f"linear({slope:g})")


def constant(c=0.0):
    return ConvexFunction1D(
        lambda x: np.full_like(np.asarray(x, dtype=float), c),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        c, name=f"constant({c:g})")


def softplus():
    """``log(1 + exp(x))``."""
    from scipy.special import expit
    return ConvexFunction1D(
        lambda x: np.logaddexp(0.0, x),
        lambda x: expit(np.asarray(x, dtype=float)),
        0.0, name="softplus")


def quartic():
    """``x**4 / 4``."""
    return ConvexFunction1D(
        lambda x: 0.25 * np.asarray(x, dtype=float) ** 4,
        lambda x: np.asarray(x, dtype=float) ** 3,
        0.0, name="quartic")


def smooth_abs(center=0.0, eps=0.1):
    """``sqrt((x - center)**2 + eps**2) - eps``, a C^1 surrogate of ``|x - center|``."""
    def value(x):
        d = np.asarray(x, dtype=float) - center
        return np.hypot(d, eps) - eps

    def deriv(x):
        d = np.asarray(x, dtype=float) - center
        return d / np.hypot(d, eps)

    return ConvexFunction1D(value, deriv, 0.0,
                            name=f"smooth_abs({center:g},{eps:g})")


def hinge_squared(center=0.0):
    """``max(0, x - center)**2``."""
    def value(x):
        return np.maximum(np.asarray(x, dtype=float) - center, 0.0) ** 2

    def deriv(x):
        return 2.0 * np.maximum(np.asarray(x, dtype=float) - center, 0.0)

    return ConvexFunction1D(value, deriv, 0.0, name=f"hinge2({center:g})")


@dataclass(frozen=True)
class HopfLaxResult:
    """Value ``Q_t f(x)``, minimizer ``T_t(x)`` and ``|f'(T) + theta'((T - x)/t)|``.

    Fields are floats for scalar queries and arrays otherwise.
    """

    value: object
    minimizer: object
    stationarity_residual: object


def _require_strict(theta):
    if not theta.strictly_convex or theta.inv_deriv is None:
        raise CapabilityError(
            f"hopf_lax needs a strictly convex cost, {theta.name} is not; "
            "use grid_infconv_oracle instead")


def _as_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= MIN_TIME)):
        raise ParameterError(f"time must be at least {MIN_TIME}")
    return t


def _initial_radius(theta, slope, t):
    level = np.maximum(np.abs(slope), 1.0)
    try:
        radius = t * np.abs(theta.inv_deriv(level))
    except DomainError:
        radius = t
    radius = np.where(np.isfinite(radius) & (radius > 0), radius, t)
    return radius


def _golden_fallback(f, theta, t, x, lo, hi):
    def obj(y):
        return float(f.eval(y) + t * theta.eval((y - x) / t))

    res = minimize_scalar(obj, bracket=(lo, 0.5 * (lo + hi), hi),
                          method="golden", tol=1e-12)
    return res.x


def _minimizers(f, theta, t, x):
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), _as_time(t))
    shape = x.shape
    x = x.ravel()
    t = t.ravel()

    def stationarity(y):
        return f.deriv(y) + theta.deriv((y - x) / t)

    radius = _initial_radius(theta, f.deriv(x), t)
    lo, hi, ok = expand_bracket(stationarity, x - radius, x + radius)
    y = bisect_increasing(stationarity, np.where(ok, lo, x),
                          np.where(ok, hi, x))
    for i in np.flatnonzero(~ok):
        y[i] = _golden_fallback(f, theta, t[i], x[i], lo[i], hi[i])
    return y.reshape(shape), x.reshape(shape), t.reshape(shape)


def hopf_lax(f, theta, t, x):
    """Evaluate ``Q_t^theta f(x)`` and its minimizer.

    Parameters
    ----------
    f : ConvexFunction1D
    theta : CostSpec
        Must be strictly convex.
    t : float or array_like
        Time(s), at least 1e-8.
    x : float or array_like
        Evaluation point(s); broadcast against ``t``.

    Returns
    -------
    HopfLaxResult

    Raises
    ------
    CapabilityError
        If ``theta`` is not strictly convex.
    """
    _require_strict(theta)
    scalar = np.ndim(x) == 0 and np.ndim(t) == 0
    y, xb, tb = _minimizers(f, theta, t, x)
    value = f.eval(y) + tb * theta.eval((y - xb) / tb)
    resid = np.abs(f.deriv(y) + theta.deriv((y - xb) / tb))
    if scalar:
        return HopfLaxResult(float(value), float(y), float(resid))
    return HopfLaxResult(np.asarray(value), y, np.asarray(resid))


def forward_map(f, theta, t, x):
    """The point whose Hopf-Lax minimizer is ``x``.

    Solves the stationarity condition for the query point:
    ``U_t(x) = x - t (theta')^{-1}(-f'(x))``, which for even costs reads
    ``x + t (theta')^{-1}(f'(x))``.

    Raises
    ------
    DomainError
        If ``-f'(x)`` is outside the range of ``theta'``.
    """
    _require_strict(theta)
    t = _as_time(t)
    slope = -np.asarray(f.deriv(x), dtype=float)
    lo_r, hi_r = theta.deriv_range
    if np.any((slope <= lo_r) | (slope >= hi_r)):
        raise DomainError("f'(x) is outside the range of theta'")
    out = np.asarray(x, dtype=float) - t * theta.inv_deriv(slope)
    return float(out) if out.ndim == 0 else out


def _clamped_inverse(theta, s):
    """``(theta')^{-1}(s)``, with slopes beyond the range clamped to the
    furthest preimage reachable by bracket search."""
    lo_r, hi_r = theta.deriv_range
    s = np.asarray(s, dtype=float)
    if np.isinf(lo_r) and np.isinf(hi_r):
        return theta.inv_deriv(s)
    reach = 2.0 ** 60
    edge_lo = theta.deriv(-reach) if np.isfinite(lo_r) else -np.inf
    edge_hi = theta.deriv(reach) if np.isfinite(hi_r) else np.inf
    inside = (s > edge_lo) & (s < edge_hi)
    out = np.where(s >= edge_hi, reach, -reach)
    if np.any(inside):
        out = np.array(out, dtype=float)
        out[inside] = theta.inv_deriv(s[inside])
    return out


def split_cost(f, split, anchor=0.0):
    """Split ``f = f1 + f2`` so that ``Q^theta f = Q^alpha f1 + Q^beta f2``.

    ``f1`` is the antiderivative, pinned to ``f1(0) = anchor``, of
    ``y -> -alpha'((theta')^{-1}(-f'(y)))`` (for even costs
    ``alpha' o (theta')^{-1} o f'``), evaluated by adaptive Gauss-Legendre
    quadrature; ``f2 = f - f1``.

    Parameters
    ----------
    f : ConvexFunction1D
    split : CostSplit
        ``split.theta`` must be strictly convex.

    Returns
    -------
    tuple of ConvexFunction1D
    """
    theta, alpha = split.theta, split.alpha
    _require_strict(theta)

    def d1(y):
        return -alpha.deriv(_clamped_inverse(theta, -np.asarray(f.deriv(y), dtype=float)))

    def f1(y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        vals = anchor + integrate_panels(d1, np.zeros_like(flat), flat,
                                         tol=QUAD_TOL)
        return vals.reshape(y.shape) if y.ndim else float(vals[0])

    def d2(y):
        return np.asarray(f.deriv(y), dtype=float) - d1(y)

    def f2(y):
        return np.asarray(f.eval(y), dtype=float) - f1(y)

    first = ConvexFunction1D(f1, d1, -np.inf, "quadrature", f"{f.name}|{alpha.name}")
    second = ConvexFunction1D(f2, d2, -np.inf, "quadrature",
                              f"{f.name}|{split.beta.name}")
    return first, second


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on a uniform grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.shape != values.shape:
            raise ShapeError("grid and values differ in length")
        if grid.size >= 2:
            steps = np.diff(grid)
            h = (grid[-1] - grid[0]) / (grid.size - 1)
            if h <= 0 or np.max(np.abs(steps - h)) > 1e-12 * max(1.0, abs(h)) + 1e-12:
                raise ShapeError("grid is not uniformly spaced")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self):
        if self.grid.size < 2:
            return 0.0
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    @classmethod
    def sample(cls, func, lo, hi, step):
        """Sample ``func`` on ``lo, lo + step, ..., hi``."""
        n = int(round((hi - lo) / step)) + 1
        grid = np.linspace(lo, hi, n)
        return cls(grid, func(grid))

    def at(self, x):
        """Value at the node nearest to ``x``."""
        i = int(np.argmin(np.abs(self.grid - x)))
        return float(self.values[i])


def grid_infconv_oracle(f, theta, t, chunk=512):
    """Exhaustive inf-convolution on a grid.

    ``g_i = min_j f_j + t theta((x_j - x_i) / t)``, an ``O(m^2)`` scan used as
    the arbitration oracle for :func:`hopf_lax` and :func:`split_cost`.
    Works for any convex ``theta``, strict or not.
    """
    t = float(_as_time(t))
    x = f.grid
    fv = f.values
    starts = range(0, x.size, chunk)

    def block(s):
        xi = x[s:s + chunk, None]
        return np.min(fv[None, :] + t * theta.eval((x[None, :] - xi) / t), axis=1)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        parts = list(pool.map(block, starts))
    return GridFunction(x, np.concatenate(parts))


def hj_residual(f, theta, t_grid, x_grid):
    """Sup-norm Hamilton-Jacobi residual of ``v(x, t) = Q_t f(x)``.

    ``v`` is evaluated on the product grid, ``dv/dt`` and ``dv/dx`` are
    central differences, and the result is the largest
    ``|dv/dt + theta*(-dv/dx)|`` over interior nodes (for even costs
    ``theta*(-s) = theta*(s)``).

    Raises
    ------
    CapabilityError
        If ``theta`` is not superlinear (its conjugate is not finite).
    """
    if not theta.superlinear:
        raise CapabilityError(f"{theta.name} is not superlinear")
    ts = np.asarray(t_grid, dtype=float).ravel()
    xs = np.asarray(x_grid, dtype=float).ravel()
    if ts.size < 3 or xs.size < 3:
        raise ShapeError("need at least three nodes in each direction")
    for g in (ts, xs):
        steps = np.diff(g)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * np.mean(steps):
            raise ShapeError("grids must be uniform and increasing")
    ht = (ts[-1] - ts[0]) / (ts.size - 1)
    hx = (xs[-1] - xs[0]) / (xs.size - 1)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    v = hopf_lax(f, theta, T, X).value
    vt = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2 * ht)
    vx = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * hx)
    return float(np.max(np.abs(vt + conjugate(theta, -vx))))

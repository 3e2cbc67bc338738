"""Convex cost functions ``theta`` with ``theta(0) = 0``.

A :class:`CostSpec` bundles the value, derivative, inverse derivative and
Legendre conjugate of a cost.  Builtin power costs carry closed forms; custom
costs and sums fall back to monotone bisection on the derivative.
"""

from dataclasses import dataclass

import numpy as np

from ._numerics import bisect_increasing, expand_bracket
from .errors import CapabilityError, DomainError, ParameterError

__all__ = [
    "CostSpec",
    "CostSplit",
    "add_costs",
    "complement_cost",
    "conjugate",
    "make_custom_cost",
    "make_power_cost",
    "scale_cost",
    "split_proportional",
    "split_sum",
]

_SAMPLE = np.linspace(-10.0, 10.0, 401)


@dataclass(frozen=True, eq=False)
class CostSpec:
    """A convex cost on the real line.

    Attributes
    ----------
    name : str
    eval, deriv : callable
        Vectorized ``theta`` and ``theta'``.
    inv_deriv : callable or None
        Vectorized inverse of ``theta'`` on ``deriv_range``; ``None`` when
        ``theta`` is not strictly convex.
    strictly_convex, superlinear : bool
    deriv_range : tuple of float
        Open interval ``theta'(R)``; may be unbounded.
    conj : callable or None
        Closed-form Legendre conjugate, if known.
    deriv2 : callable or None
        Second derivative, if known.
    """

    name: str
    eval: callable
    deriv: callable
    inv_deriv: callable = None
    strictly_convex: bool = True
    superlinear: bool = True
    deriv_range: tuple = (-np.inf, np.inf)
    conj: callable = None
    deriv2: callable = None

    def __call__(self, x):
        return self.eval(x)

    def __repr__(self):
        return f"CostSpec({self.name})"

    def require_inverse(self):
        if self.inv_deriv is None or not self.strictly_convex:
            raise CapabilityError(
                f"cost {self.name} is not strictly convex; "
                "its derivative has no inverse")
        return self.inv_deriv

    def conjugate(self, s):
        return conjugate(self, s)


@dataclass(frozen=True, eq=False)
class CostSplit:
    """A decomposition ``alpha + beta = theta`` of convex costs."""

    alpha: CostSpec
    beta: CostSpec
    theta: CostSpec

    def residual(self, grid=_SAMPLE):
        """Largest ``|alpha + beta - theta|`` on ``grid``."""
        grid = np.asarray(grid, dtype=float)
        return float(np.max(np.abs(
            self.alpha.eval(grid) + self.beta.eval(grid) - self.theta.eval(grid))))


def _power_inverse(p, scale):
    expo = 1.0 / (p - 1.0)

    def inv(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * (np.abs(s) / (scale * p)) ** expo

    return inv


def make_power_cost(p, scale=1.0):
    """``theta(x) = scale * |x|**p`` with exact calculus.

    Raises
    ------
    ParameterError
        If ``p <= 1`` or ``scale <= 0``; ``|x|`` itself is available through
        :func:`make_custom_cost`.
    """
    p = float(p)
    scale = float(scale)
    if not p > 1.0:
        raise ParameterError(f"power cost needs p > 1, got {p}")
    if not scale > 0.0:
        raise ParameterError(f"power cost needs scale > 0, got {scale}")

    def value(x):
        return scale * np.abs(x) ** p

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return scale * p * np.sign(x) * np.abs(x) ** (p - 1.0)

    def deriv2(x):
        x = np.asarray(x, dtype=float)
        if p == 2.0:
            return np.full_like(x, 2.0 * scale)
        return scale * p * (p - 1.0) * np.abs(x) ** (p - 2.0)

    def conj(s):
        # sup_x s x - c|x|^p, attained at x = sign(s) (|s| / (c p))^(1/(p-1))
        s = np.abs(np.asarray(s, dtype=float))
        return s * (1.0 - 1.0 / p) * (s / (scale * p)) ** (1.0 / (p - 1.0))

    name = f"pow:p={p:g},scale={scale:g}"
    return CostSpec(name, value, deriv, _power_inverse(p, scale),
                    strictly_convex=True, superlinear=True, conj=conj,
                    deriv2=deriv2)


def _bisection_inverse(deriv, deriv_range):
    lo_r, hi_r = deriv_range

    def inv(s):
        s = np.asarray(s, dtype=float)
        if np.any((s <= lo_r) | (s >= hi_r)):
            raise DomainError(
                f"{s} outside the derivative range ({lo_r}, {hi_r})")
        flat = s.ravel()

        def g(x):
            return deriv(x) - flat

        lo, hi, ok = expand_bracket(g, np.full(flat.shape, -1.0),
                                    np.full(flat.shape, 1.0))
        if not np.all(ok):
            raise DomainError(
                "derivative level not reached within the bracket search")
        return bisect_increasing(g, lo, hi, xtol=1e-14).reshape(s.shape)

    return inv


def make_custom_cost(eval, deriv, inv_deriv=None, *, strictly_convex=True,
                     superlinear=True, deriv_range=(-np.inf, np.inf),
                     conj=None, deriv2=None, name="custom", check=True):
    """Wrap user-supplied callables as a :class:`CostSpec`.

    For strictly convex costs without ``inv_deriv`` the inverse derivative is
    obtained by bracketed bisection.  With ``check`` the cost is sampled on
    ``[-10, 10]`` to confirm ``theta(0) = 0``, positivity and a monotone
    derivative.
    """
    if check:
        vals = np.asarray(eval(_SAMPLE), dtype=float)
        ders = np.asarray(deriv(_SAMPLE), dtype=float)
        if abs(float(eval(0.0))) > 1e-12:
            raise ParameterError(f"cost {name} does not vanish at 0")
        if np.any(vals < -1e-12):
            raise ParameterError(f"cost {name} takes negative values")
        if np.any(np.diff(ders) < -1e-9 * np.maximum(1.0, np.abs(ders[1:]))):
            raise ParameterError(f"cost {name} has a decreasing derivative")
    if strictly_convex and inv_deriv is None:
        inv_deriv = _bisection_inverse(deriv, deriv_range)
    if not strictly_convex:
        inv_deriv = None
    return CostSpec(name, eval, deriv, inv_deriv, strictly_convex,
                    superlinear, tuple(deriv_range), conj, deriv2)


def conjugate(theta, s):
    """Legendre conjugate ``theta*(s) = sup_x (s x - theta(x))``.

    Raises
    ------
    DomainError
        When ``s`` lies where ``theta*`` is infinite (outside the closure of
        the derivative range of a non-superlinear cost).
    CapabilityError
        For non-strictly convex custom costs without a closed form.
    """
    s_arr = np.asarray(s, dtype=float)
    if theta.conj is not None:
        out = theta.conj(s_arr)
    else:
        lo_r, hi_r = theta.deriv_range
        if np.any((s_arr <= lo_r) | (s_arr >= hi_r)):
            raise DomainError(
                f"conjugate of {theta.name} is infinite outside ({lo_r}, {hi_r})")
        x = theta.require_inverse()(s_arr)
        out = s_arr * x - theta.eval(x)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def scale_cost(theta, lam):
    """The cost ``lam * theta`` for ``lam > 0``."""
    lam = float(lam)
    if not lam > 0:
        raise ParameterError("scale must be positive")
    inv = None
    if theta.inv_deriv is not None:
        base_inv = theta.inv_deriv

        def inv(s):
            return base_inv(np.asarray(s, dtype=float) / lam)

    conj = None
    if theta.conj is not None:
        base_conj = theta.conj

        def conj(s):
            return lam * base_conj(np.asarray(s, dtype=float) / lam)

    d2 = None
    if theta.deriv2 is not None:
        base_d2 = theta.deriv2

        def d2(x):
            return lam * base_d2(x)

    lo, hi = theta.deriv_range
    return CostSpec(f"{lam:g}*({theta.name})",
                    lambda x: lam * theta.eval(x),
                    lambda x: lam * theta.deriv(x),
                    inv, theta.strictly_convex, theta.superlinear,
                    (lam * lo, lam * hi), conj, d2)


def add_costs(*costs):
    """Sum of convex costs; the inverse derivative comes from bisection."""
    if not costs:
        raise ParameterError("add_costs needs at least one cost")
    if len(costs) == 1:
        return costs[0]

    def value(x):
        return sum(c.eval(x) for c in costs)

    def deriv(x):
        return sum(c.deriv(x) for c in costs)

    d2 = None
    if all(c.deriv2 is not None for c in costs):
        def d2(x):
            return sum(c.deriv2(x) for c in costs)

    lo = sum(c.deriv_range[0] for c in costs)
    hi = sum(c.deriv_range[1] for c in costs)
    return make_custom_cost(
        value, deriv, strictly_convex=any(c.strictly_convex for c in costs),
        superlinear=any(c.superlinear for c in costs), deriv_range=(lo, hi),
        deriv2=d2, name="+".join(c.name for c in costs), check=False)


def complement_cost(theta, alpha, grid=_SAMPLE):
    """``theta - alpha``, checked to be convex on ``grid``.

    Strict convexity is declared when the difference of derivatives is
    strictly increasing on the sample.
    """
    def value(x):
        return theta.eval(x) - alpha.eval(x)

    def deriv(x):
        return theta.deriv(x) - alpha.deriv(x)

    ders = deriv(np.asarray(grid, dtype=float))
    steps = np.diff(ders)
    if np.any(steps < -1e-9 * np.maximum(1.0, np.abs(ders[1:]))):
        raise ParameterError(f"{theta.name} - {alpha.name} is not convex")
    if np.any(value(np.asarray(grid, dtype=float)) < -1e-12):
        raise ParameterError(f"{theta.name} - {alpha.name} takes negative values")
    strict = bool(np.all(steps > 0))
    return make_custom_cost(value, deriv, strictly_convex=strict,
                            superlinear=theta.superlinear and strict,
                            name=f"({theta.name})-({alpha.name})", check=False)


def split_proportional(theta, lam):
    """``alpha = lam * theta`` and ``beta = (1 - lam) * theta``."""
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ParameterError(f"split proportion must lie in (0, 1), got {lam}")
    return CostSplit(scale_cost(theta, lam), scale_cost(theta, 1.0 - lam), theta)


def split_sum(alpha, beta):
    """The split whose total cost is ``alpha + beta``."""
    return CostSplit(alpha, beta, add_costs(alpha, beta))

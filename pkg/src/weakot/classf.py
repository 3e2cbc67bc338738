"""Functions on R^n whose gradient is an eigenvector of their Hessian.

This is the class used to extend the one-dimensional splitting and
equality results to R^n.  The module tests membership, builds potentials
with gradient ``G(|grad f|) grad f / |grad f|``, measures curl, and checks
that a monotone map stays optimal when the cost changes.

Functions are vectorized over leading axes: a point batch has shape
``(..., n)``, gradients ``(..., n)`` and Hessians ``(..., n, n)``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._numerics import integrate_panels
from .errors import CapabilityError, ResourceError, ShapeError

__all__ = [
    "MapOptimalityReport",
    "MembershipReport",
    "Profile",
    "SmoothFunctionND",
    "VectorFieldND",
    "build_potential",
    "class_f_test",
    "converse_diagnostic",
    "curl_residual",
    "diagonal_quadratic",
    "grid_infconv_nd",
    "half_norm_minus",
    "line_integral",
    "linear_form",
    "potential_field",
    "quadratic_plus_linear",
    "radial",
    "split_potentials",
    "verify_map_optimality",
]

GRAD_STEP = 1e-6
HESS_STEP = 1e-5
CURL_STEP = 1e-5
ZERO_GRADIENT = 1e-10
EIGEN_SLACK = 1e-7
LINE_TOL = 1e-9


def _fd_jacobian(func, x, step):
    """Central-difference Jacobian of a vector map, shape (..., n, n)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        cols.append((func(x + e) - func(x - e)) / (2 * step))
    # cols[j][..., i] = d_j F_i
    return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class SmoothFunctionND:
    """A C^2 function on R^n with optional analytic derivatives.

    Missing gradients fall back to central differences of ``eval`` (step
    1e-6) and missing Hessians to central differences of the gradient
    (step 1e-5).
    """

    dim: int
    eval: callable = None
    gradient: callable = None
    hessian: callable = None
    name: str = "f"

    def value(self, x):
        if self.eval is None:
            raise CapabilityError(f"{self.name} has no value oracle")
        return self.eval(np.asarray(x, dtype=float))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return self.gradient(x)
        n = self.dim
        out = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = GRAD_STEP
            out.append((self.value(x + e) - self.value(x - e)) / (2 * GRAD_STEP))
        return np.stack(out, axis=-1)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return self.hessian(x)
        return _fd_jacobian(self.grad, x, HESS_STEP)

    def __neg__(self):
        ev = None if self.eval is None else (lambda x: -self.eval(x))
        gr = None if self.gradient is None else (lambda x: -self.gradient(x))
        he = None if self.hessian is None else (lambda x: -self.hessian(x))
        return SmoothFunctionND(self.dim, ev, gr, he, f"-{self.name}")


@dataclass(frozen=True, eq=False)
class VectorFieldND:
    """A vector field ``R^n -> R^n``, vectorized over leading axes."""

    dim: int
    eval: callable
    name: str = "F"

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))


def linear_form(c):
    """``<c, x>``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    return SmoothFunctionND(
        n, lambda x: x @ c,
        lambda x: np.broadcast_to(c, x.shape).copy(),
        lambda x: np.zeros(x.shape + (n,)), f"linear{c.tolist()}")


def quadratic_plus_linear(a, c):
    """``a |x|^2 + <c, x>``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    return SmoothFunctionND(
        n, lambda x: a * np.sum(x * x, axis=-1) + x @ c,
        lambda x: 2 * a * x + c,
        lambda x: np.broadcast_to(2 * a * np.eye(n), x.shape + (n,)).copy(),
        f"{a:g}|x|^2+linear{c.tolist()}")


def diagonal_quadratic(d):
    """``sum_i d_i x_i^2``; in the class only when the ``d_i`` coincide."""
    d = np.asarray(d, dtype=float)
    n = d.size
    return SmoothFunctionND(
        n, lambda x: np.sum(d * x * x, axis=-1),
        lambda x: 2 * d * x,
        lambda x: np.broadcast_to(np.diag(2 * d), x.shape + (n,)).copy(),
        f"diag{d.tolist()}")


_RADIAL = {
    "square": (lambda s: s * s, lambda s: 2 * s, lambda s: 2.0 + 0 * s),
    "half_square": (lambda s: 0.5 * s * s, lambda s: s, lambda s: 1.0 + 0 * s),
    "cosh": (lambda s: np.cosh(s) - 1, np.sinh, np.cosh),
    "quartic": (lambda s: 0.25 * s ** 4, lambda s: s ** 3, lambda s: 3 * s * s),
}


def radial(profile, dim):
    """``g(|x|)`` for a convex even profile ``g`` with ``g'(0) = 0``.

    Parameters
    ----------
    profile : str or tuple
        One of ``"square"``, ``"half_square"``, ``"cosh"``, ``"quartic"``,
        or a ``(g, g', g'')`` triple.
    dim : int
    """
    if isinstance(profile, str):
        name = profile
        g, dg, d2g = _RADIAL[profile]
    else:
        name = "custom"
        g, dg, d2g = profile

    def value(x):
        return g(np.linalg.norm(x, axis=-1))

    def gradient(x):
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        scale = np.where(r > 0, dg(r) / safe, 0.0)
        return scale[..., None] * x

    def hessian(x):
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        unit = x / safe[..., None]
        outer = unit[..., :, None] * unit[..., None, :]
        tangential = np.where(r > 0, dg(r) / safe, d2g(r))
        radial_part = np.where(r > 0, d2g(r), 0.0)
        eye = np.eye(dim)
        return (radial_part[..., None, None] * outer
                + tangential[..., None, None] * (eye - outer * (r > 0)[..., None, None]))

    return SmoothFunctionND(dim, value, gradient, hessian, f"radial({name})")


def half_norm_minus(g_grad, dim):
    """``f = |x|^2 / 2 - g`` known through ``grad f(x) = x - grad g(x)``.

    Only gradient and (finite-difference) Hessian are available.
    """
    if isinstance(g_grad, VectorFieldND):
        g_grad = g_grad.eval
    return SmoothFunctionND(dim, None, lambda x: x - g_grad(x), None,
                            "|x|^2/2-g")


@dataclass(frozen=True, eq=False)
class Profile:
    """Increasing ``G`` with ``G(0) = 0`` and its derivative.

    Without ``dG`` the derivative is a central difference (step 1e-6).
    """

    G: callable
    dG: callable = None
    name: str = "G"

    def __call__(self, s):
        return self.G(np.asarray(s, dtype=float))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.dG is not None:
            return self.dG(s)
        return (self.G(s + GRAD_STEP) - self.G(s - GRAD_STEP)) / (2 * GRAD_STEP)

    @classmethod
    def identity(cls):
        return cls(lambda s: s, lambda s: np.ones_like(s), "id")

    @classmethod
    def power(cls, k):
        return cls(lambda s: s ** k, lambda s: k * s ** (k - 1), f"s^{k:g}")

    @classmethod
    def from_cost(cls, theta):
        """``G = theta'`` on ``[0, inf)``."""
        return cls(theta.deriv, theta.deriv2, f"d({theta.name})")


def _as_profile(G):
    return G if isinstance(G, Profile) else Profile(G)


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of :func:`class_f_test`.

    ``max_symmetry_residual`` is the worst
    ``|d_i u d_j f - d_j u d_i f| / u`` with ``u = |grad f|``;
    ``max_eigen_residual`` the worst ``|Hess f grad f - lam grad f| / u``
    with the Rayleigh quotient ``lam``.
    """

    in_class: bool
    max_symmetry_residual: float
    convexity_violations: int
    failing_point: tuple
    max_eigen_residual: float
    skipped: int


def _points(points, dim):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != dim:
        raise ShapeError(f"points have dimension {pts.shape[-1]}, expected {dim}")
    return pts.reshape(-1, dim)


def class_f_test(f, points, tol=1e-6):
    """Test the eigenvector condition and convexity at sample points.

    Points where ``|grad f| <= 1e-10`` are skipped; there the condition is
    vacuous.  Convexity fails at points whose symmetrized Hessian has an
    eigenvalue below ``-1e-7``.
    """
    pts = _points(points, f.dim)
    g = f.grad(pts)
    H = f.hess(pts)
    u = np.linalg.norm(g, axis=-1)
    active = u > ZERO_GRADIENT
    sym_h = 0.5 * (H + np.swapaxes(H, -1, -2))
    eig_min = np.linalg.eigvalsh(sym_h)[:, 0]
    violations = int(np.sum(eig_min < -EIGEN_SLACK))

    sym = np.zeros(len(pts))
    eig = np.zeros(len(pts))
    if np.any(active):
        ga, ua = g[active], u[active]
        hg = np.einsum("mij,mj->mi", H[active], ga)
        du = hg / ua[:, None]
        cross = du[:, :, None] * ga[:, None, :] - du[:, None, :] * ga[:, :, None]
        sym[active] = np.max(np.abs(cross), axis=(1, 2)) / ua
        lam = np.einsum("mi,mi->m", ga, hg) / ua ** 2
        eig[active] = np.linalg.norm(hg - lam[:, None] * ga, axis=-1) / ua

    worst = int(np.argmax(sym))
    bad_convex = np.flatnonzero(eig_min < -EIGEN_SLACK)
    if sym[worst] <= tol and bad_convex.size:
        worst = int(bad_convex[0])
    max_sym = float(sym.max())
    return MembershipReport(
        in_class=bool(max_sym <= tol and violations == 0),
        max_symmetry_residual=max_sym,
        convexity_violations=violations,
        failing_point=tuple(pts[worst].tolist()),
        max_eigen_residual=float(eig.max()),
        skipped=int(np.sum(~active)),
    )


def potential_field(f, G):
    """``F = G(|grad f|) grad f / |grad f|`` (zero where the gradient vanishes)."""
    G = _as_profile(G)

    def field_eval(x):
        g = f.grad(x)
        u = np.linalg.norm(g, axis=-1)
        safe = np.where(u > 0, u, 1.0)
        scale = np.where(u > 0, G(u) / safe, 0.0)
        return scale[..., None] * g

    return VectorFieldND(f.dim, field_eval, f"{G.name}-field({f.name})")


def curl_residual(field, points, step=CURL_STEP):
    """Largest ``|d_j F_i - d_i F_j|`` over points and pairs, by central differences."""
    if not isinstance(field, VectorFieldND):
        raise ShapeError("curl_residual expects a VectorFieldND")
    pts = _points(points, field.dim)
    J = _fd_jacobian(field, pts, step)
    return float(np.max(np.abs(J - np.swapaxes(J, -1, -2)))) if field.dim > 1 else 0.0


def line_integral(field, vertices, tol=LINE_TOL):
    """Work of ``field`` along the polyline through ``vertices``."""
    verts = np.asarray(vertices, dtype=float)
    total = 0.0
    for a, b in zip(verts[:-1], verts[1:]):
        total += float(_segment_integrals(field, a, b[None, :], tol)[0])
    return total


def _segment_integrals(field, base, ends, tol):
    """``int_0^1 F(base + s (x - base)) . (x - base) ds`` for each row ``x``."""
    d = ends - base

    def integrand(s):
        pts = base + s[..., None] * d[:, None, :]
        return np.einsum("mqi,mi->mq", field(pts), d)

    return integrate_panels(integrand, np.zeros(len(ends)), np.ones(len(ends)),
                            tol=tol, order=64)


def default_sample(dim, count=100, box=2.0, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(count, dim))


def build_potential(f, G, base=None, validation_points=None, tol=1e-6):
    """Potential ``phi`` with ``grad phi = G(|grad f|) grad f / |grad f|``.

    ``phi(base) = 0``; values come from line integrals along the segment
    ``base -> x`` with 64-node Gauss-Legendre panels refined to 1e-9.  The
    Hessian is the chain-rule Jacobian of the field.

    Raises
    ------
    CapabilityError
        When ``f`` fails :func:`class_f_test` on the validation sample, in
        which case the field need not be a gradient.
    """
    G = _as_profile(G)
    base = np.zeros(f.dim) if base is None else np.asarray(base, dtype=float)
    pts = default_sample(f.dim) if validation_points is None else validation_points
    report = class_f_test(f, pts, tol)
    if not report.in_class:
        raise CapabilityError(
            f"{f.name} fails the class test (residual "
            f"{report.max_symmetry_residual:.3g} at {report.failing_point})")
    field_ = potential_field(f, G)

    def value(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, f.dim)
        out = _segment_integrals(field_, base, flat, LINE_TOL)
        return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])

    def hessian(x):
        g = f.grad(x)
        H = f.hess(x)
        u = np.linalg.norm(g, axis=-1)
        safe = np.where(u > 0, u, 1.0)
        Gu, dGu = G(u), G.derivative(u)
        hg = np.einsum("...ij,...j->...i", H, g)
        radial_coef = np.where(u > 0, (dGu * u - Gu) / safe ** 3, 0.0)
        tangent_coef = np.where(u > 0, Gu / safe, dGu)
        return (radial_coef[..., None, None] * g[..., :, None] * hg[..., None, :]
                + tangent_coef[..., None, None] * H)

    return SmoothFunctionND(f.dim, value, field_.eval, hessian,
                            f"potential[{G.name}]({f.name})")


def split_potentials(f, split, base=None, validation_points=None, tol=1e-6):
    """Split ``f`` in the class so that ``Q^theta f = Q^alpha phi + Q^beta psi``.

    ``phi`` is the potential with profile ``alpha' o (theta')^{-1}`` and
    ``psi`` the one with profile ``beta' o (theta')^{-1}``; for the even
    costs used here their sum is ``f`` up to a constant.
    """
    theta = split.theta
    inv = theta.require_inverse()
    parts = []
    for piece in (split.alpha, split.beta):
        prof = Profile(lambda s, d=piece.deriv: d(inv(s)), None,
                       f"d({piece.name})/d({theta.name})")
        parts.append(build_potential(f, prof, base, validation_points, tol))
    return tuple(parts)


def converse_diagnostic(f, G, points, tol=1e-6):
    """Cross-check the converse direction on a sample.

    When the field of ``G`` is curl-free, ``s G'(s) - G(s)`` does not vanish
    on the sampled gradient norms, and yet ``f`` fails the class test, the
    result is flagged ``inconsistent`` for manual inspection.
    """
    G = _as_profile(G)
    pts = _points(points, f.dim)
    curl = curl_residual(potential_field(f, G), pts)
    report = class_f_test(f, pts, tol)
    u = np.linalg.norm(f.grad(pts), axis=-1)
    degeneracy = np.abs(u * G.derivative(u) - G(u))
    nondegenerate = bool(np.all(degeneracy[u > ZERO_GRADIENT] > 1e-8))
    return {
        "curl_residual": curl,
        "in_class": report.in_class,
        "nondegenerate_profile": nondegenerate,
        "inconsistent": bool(curl <= tol and nondegenerate and not report.in_class),
    }


def grid_infconv_nd(points, values, theta, t, queries, chunk=256):
    """``min_j values_j + t theta(|points_j - q| / t)`` for each query ``q``."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    out = np.empty(len(queries))
    for s in range(0, len(queries), chunk):
        q = queries[s:s + chunk]
        dist = np.linalg.norm(points[None, :, :] - q[:, None, :], axis=-1)
        out[s:s + chunk] = np.min(values[None, :] + t * theta.eval(dist / t), axis=1)
    return out


@dataclass(frozen=True)
class MapOptimalityReport:
    """Worst deviation of ``Q psi(grad g(x)) = psi(x) + alpha(|x - grad g(x)|)`` per cost."""

    deviations: dict
    samples_used: int
    samples_excluded: int
    spacing: float
    passed: bool = None
    membership: MembershipReport = field(default=None, repr=False)


MAX_GRID_POINTS = 250_000


def _box_grid(box, spacing, dim):
    lo, hi = box
    count = int(round((hi - lo) / spacing)) + 1
    if count ** dim > MAX_GRID_POINTS:
        raise ResourceError(f"grid of {count}^{dim} points is too large")
    axis = np.linspace(lo, hi, count)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def verify_map_optimality(g_grad, costs, samples, box, spacing, tol=None,
                          class_tol=1e-6):
    """Check that a monotone map is optimal for several costs at once.

    With ``f = |x|^2/2 - g`` in the class, each cost ``alpha`` yields the
    potential ``psi = -phi`` where ``grad phi = alpha'(|grad f|) grad f / |grad f|``.
    Optimality of ``grad g`` is then the pointwise identity
    ``Q^alpha psi(grad g(x)) = psi(x) + alpha(|x - grad g(x)|)``, whose left
    side is evaluated by exhaustive search over the box grid.  Samples closer
    to the box edge than their displacement plus three grid steps are
    excluded.

    Parameters
    ----------
    g_grad : callable or VectorFieldND
        The map ``x -> grad g(x)``.
    costs : list of CostSpec
        Strictly convex costs.
    samples : array_like, shape (m, n)
    box : tuple of float
        ``(lo, hi)`` applied to every axis.
    spacing : float
    tol : float, optional
        When given, ``passed`` records whether every deviation is within it.

    Raises
    ------
    ResourceError
        For ``n >= 3`` or oversized grids.
    CapabilityError
        If ``|x|^2/2 - g`` fails the class test or a cost is not strictly convex.
    """
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    dim = pts.shape[-1]
    if dim >= 3:
        raise ResourceError("grid verification supports n <= 2")
    gmap = g_grad.eval if isinstance(g_grad, VectorFieldND) else g_grad
    f = half_norm_minus(gmap, dim)
    membership = class_f_test(f, pts, class_tol)
    if not membership.in_class:
        raise CapabilityError(
            "|x|^2/2 - g is not in the class; the map may depend on the cost")

    grid = _box_grid(box, spacing, dim)
    z = gmap(pts)
    disp = np.linalg.norm(pts - z, axis=-1)
    lo, hi = box
    edge = np.min(np.minimum(pts - lo, hi - pts), axis=-1)
    keep = edge >= disp + 3 * spacing
    used, zu = pts[keep], z[keep]
    base = np.full(dim, 0.5 * (lo + hi))

    deviations = {}
    for alpha in costs:
        if not alpha.strictly_convex:
            raise CapabilityError(f"{alpha.name} is not strictly convex")
        phi = build_potential(f, Profile.from_cost(alpha), base=base,
                              validation_points=pts, tol=class_tol)
        psi_grid = -phi.value(grid)
        if used.size == 0:
            deviations[alpha.name] = 0.0
            continue
        lhs = grid_infconv_nd(grid, psi_grid, alpha, 1.0, zu)
        rhs = -phi.value(used) + alpha.eval(np.linalg.norm(used - zu, axis=-1))
        deviations[alpha.name] = float(np.max(np.abs(lhs - rhs)))
    passed = None if tol is None else all(v <= tol for v in deviations.values())
    return MapOptimalityReport(deviations, int(keep.sum()), int((~keep).sum()),
                               float(spacing), passed, membership)

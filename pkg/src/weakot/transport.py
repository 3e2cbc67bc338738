"""Classical and weak (barycentric) transport costs between measures on R.

Both measures are read on the common refinement of their cumulative weights,
where they become step quantile functions ``x_k`` and ``y_k`` over cells of
mass ``w_k``.  The weak cost is the classical cost to the best
``nu1 <= nu`` in convex order.  On the refinement, ``x - nu1`` turns out to
be the weighted isotonic (non-decreasing) regression of ``x - y``, which
does not depend on the cost.
"""

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from .errors import CapabilityError, ParameterError
from .measures import DiscreteMeasure, common_refinement

__all__ = [
    "CouplingReport",
    "EqualityCertificate",
    "KernelRow",
    "brute_force_weak",
    "classical_cost",
    "duality_lower_bound",
    "equality_certificate",
    "isotonic_regression",
    "optimal_nu1",
    "weak_cost",
]

WITNESS_TOL = 1e-9


@dataclass(frozen=True)
class KernelRow:
    """Conditional law ``p(x, .)`` of one source atom and its barycenter."""

    source: float
    mass: float
    targets: tuple
    barycenter: float


@dataclass(frozen=True, eq=False)
class CouplingReport:
    """Outcome of a transport solve.

    ``plan`` lists ``(source, target, mass)`` triples.  For weak transport
    ``kernel`` holds one :class:`KernelRow` per source atom and
    ``effective_nu1`` the law of the row barycenters.
    """

    kind: str
    cost: float
    plan: tuple
    kernel: tuple = ()
    effective_nu1: DiscreteMeasure = None
    notes: tuple = field(default=())

    def source_marginal(self):
        src = np.array([p[0] for p in self.plan])
        mass = np.array([p[2] for p in self.plan])
        return DiscreteMeasure(src, mass)

    def target_marginal(self):
        tgt = np.array([p[1] for p in self.plan])
        mass = np.array([p[2] for p in self.plan])
        return DiscreteMeasure(tgt, mass)

    def recompute_cost(self, theta):
        """Cost implied by the plan (classical) or the kernel rows (weak)."""
        if self.kind == "classical":
            return float(sum(m * theta.eval(s - t) for s, t, m in self.plan))
        return float(sum(r.mass * theta.eval(r.source - r.barycenter)
                         for r in self.kernel))


def _aggregate(triples):
    acc = {}
    for s, t, m in triples:
        acc[(s, t)] = acc.get((s, t), 0.0) + m
    return tuple((s, t, m) for (s, t), m in sorted(acc.items()) if m > 0)


def classical_cost(mu, nu, theta):
    """Monotone (quantile) coupling cost ``int_0^1 theta(F_mu^-1 - F_nu^-1)``.

    Exact over the common refinement; optimal for every convex cost.
    """
    ref = common_refinement(mu, nu)
    cost = float(np.dot(ref.masses, theta.eval(ref.source - ref.target)))
    plan = _aggregate(zip(ref.source.tolist(), ref.target.tolist(),
                          ref.masses.tolist()))
    return CouplingReport("classical", cost, plan)


def isotonic_regression(values, weights):
    """Weighted least-squares non-decreasing fit (pool adjacent violators).

    Returns
    -------
    fit : ndarray
    blocks : list of (start, stop)
        Index ranges pooled to a common value.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    means, wsum, starts = [], [], []
    for i, (v, w) in enumerate(zip(values, weights)):
        means.append(v)
        wsum.append(w)
        starts.append(i)
        while len(means) > 1 and means[-2] > means[-1]:
            w2 = wsum.pop()
            m2 = means.pop()
            starts.pop()
            total = wsum[-1] + w2
            means[-1] = (wsum[-1] * means[-1] + w2 * m2) / total
            wsum[-1] = total
    stops = starts[1:] + [values.size]
    fit = np.empty_like(values)
    for m, a, b in zip(means, starts, stops):
        fit[a:b] = m
    return fit, list(zip(starts, stops))


def _nu1_on_refinement(mu, nu):
    ref = common_refinement(mu, nu)
    fit, blocks = isotonic_regression(ref.source - ref.target, ref.masses)
    return ref, ref.source - fit, blocks


def optimal_nu1(mu, nu):
    """The minimizer ``nu1 <= nu`` (convex order) of ``T(nu1, mu)``.

    It is the weighted Euclidean projection of ``x`` onto the majorization
    polytope of ``y``, which the suffix-sum constraints reduce to
    ``nu1 = x - iso(x - y)``.  The same measure is optimal for every convex
    cost.
    """
    ref, y1, _ = _nu1_on_refinement(mu, nu)
    return DiscreteMeasure(y1, ref.masses)


def _block_kernel(src_vals, src_mass, tgt_vals, tgt_mass):
    """A martingale coupling from a convex-order smaller block to its target."""
    k = src_vals.size
    if k == 1:
        return np.diag(src_mass)
    n = k * k
    # centred values keep HiGHS presolve from misjudging feasibility
    centre = np.dot(tgt_mass, tgt_vals) / tgt_mass.sum()
    a_eq = np.zeros((3 * k, n))
    b_eq = np.concatenate((src_mass, tgt_mass, src_mass * (src_vals - centre)))
    for i in range(k):
        a_eq[i, i * k:(i + 1) * k] = 1.0
        a_eq[k + i, i::k] = 1.0
        a_eq[2 * k + i, i * k:(i + 1) * k] = tgt_vals - centre
    # prefer nearby cells so the answer is reproducible
    cost = np.abs(np.subtract.outer(np.arange(k), np.arange(k))).ravel()
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                      method="highs", options={"presolve": False})
    if res.status != 0:
        raise RuntimeError(f"kernel decomposition failed: {res.message}")
    return np.maximum(res.x.reshape(k, k), 0.0)


def weak_cost(mu, nu, theta):
    """Weak transport cost ``inf_pi int theta(x - bary p(x, .)) dmu``.

    Evaluated as the classical cost from ``mu`` to :func:`optimal_nu1`,
    together with a kernel whose row barycenters realize ``nu1``.
    """
    ref, y1, blocks = _nu1_on_refinement(mu, nu)
    cost = float(np.dot(ref.masses, theta.eval(ref.source - y1)))

    flows = {}
    for a, b in blocks:
        pi = _block_kernel(y1[a:b], ref.masses[a:b], ref.target[a:b],
                           ref.masses[a:b])
        for i in range(b - a):
            s = float(ref.source[a + i])
            row = flows.setdefault(s, {})
            for j in range(b - a):
                if pi[i, j] > 0:
                    tgt = float(ref.target[a + j])
                    row[tgt] = row.get(tgt, 0.0) + float(pi[i, j])

    kernel, plan = [], []
    for s in sorted(flows):
        row = flows[s]
        mass = float(sum(row.values()))
        targets = tuple((t, float(m / mass)) for t, m in sorted(row.items()))
        bary = float(sum(t * p for t, p in targets))
        kernel.append(KernelRow(s, mass, targets, bary))
        plan.extend((s, t, m) for t, m in sorted(row.items()))

    notes = ()
    if not theta.strictly_convex:
        notes = ("cost is not strictly convex; value uses the cost-independent "
                 "optimal nu1",)
    return CouplingReport("weak", cost, _aggregate(plan), tuple(kernel),
                          DiscreteMeasure(y1, ref.masses), notes)


@dataclass(frozen=True)
class EqualityCertificate:
    """Whether ``u -> F_mu^-1(u) - F_nu^-1(u)`` is non-decreasing.

    ``levels`` are cell midpoints of the common refinement and
    ``differences`` the profile on them.  When the profile decreases,
    ``witness`` holds levels ``u1 < u2`` with
    ``d(u1) > d(u2) + 1e-9``.
    """

    holds: bool
    levels: np.ndarray
    differences: np.ndarray
    witness: tuple = None


def equality_certificate(mu, nu, tol=WITNESS_TOL):
    """Decide equality of weak and classical costs for strictly convex costs."""
    ref = common_refinement(mu, nu)
    d = ref.source - ref.target
    levels = ref.midpoints
    run_max = np.maximum.accumulate(d)
    bad = np.flatnonzero(run_max > d + tol)
    if bad.size == 0:
        return EqualityCertificate(True, levels, d)
    j = int(bad[0])
    i = int(np.argmax(d[:j + 1]))
    return EqualityCertificate(False, levels, d,
                               (float(levels[i]), float(levels[j])))


def _equal_weight_points(measure, n):
    counts = measure.weights * n
    if np.any(np.abs(counts - np.round(counts)) > 1e-9):
        return None
    return np.repeat(measure.atoms, np.round(counts).astype(int))


def _as_equal_weight(mu, nu, max_n=3):
    for n in range(1, max_n + 1):
        x = _equal_weight_points(mu, n)
        y = _equal_weight_points(nu, n)
        if x is not None and y is not None:
            return x, y
    raise CapabilityError(
        f"brute force supports equal-weight measures with at most {max_n} points")


@functools.lru_cache(maxsize=256)
def _feasible_lattice(y, resolution):
    """Sorted vectors majorized by ``y``: the first ``n - 1`` entries on the
    lattice, the last one fixed by the total."""
    y = np.array(y)
    n = y.size
    lo, hi = y[0], y[-1]
    total = y.sum()
    if n == 1:
        return y[None, :]
    count = int(np.floor((hi - lo) / resolution + 1e-9))
    lattice = lo + resolution * np.arange(count + 1)
    heads = lattice[np.array(list(itertools.combinations_with_replacement(
        range(lattice.size), n - 1)))]
    last = total - heads.sum(axis=1)
    slack = 1e-12 * max(1.0, abs(hi), abs(lo)) * n
    keep = (last >= heads[:, -1] - slack) & (last <= hi + slack)
    cand = np.column_stack((heads[keep], last[keep]))
    top_c = np.cumsum(cand[:, ::-1], axis=1)[:, :-1]
    top_y = np.cumsum(y[::-1])[:-1]
    return cand[np.all(top_c <= top_y + slack, axis=1)]


def brute_force_weak(mu, nu, theta, resolution):
    """Weak cost by exhaustive lattice search over ``y' <= y`` (oracle only).

    ``mu`` and ``nu`` must be uniform on at most three points each (counted
    with multiplicity).  Candidates ``y'`` are sorted vectors in
    ``[min y, max y]`` whose first ``n - 1`` entries lie on a lattice of step
    ``resolution`` and whose last entry makes ``sum y' = sum y`` exactly;
    those majorized by ``y`` are scored and the smallest mean cost is
    returned.  Keeping the total exact matters: at the optimum the cost
    gradient is constant on pooled entries, so a shifted total would bias
    the minimum at first order in ``resolution``.

    Raises
    ------
    CapabilityError
        For more than three points or unequal weights.
    """
    if not resolution > 0:
        raise ParameterError("resolution must be positive")
    x, y = _as_equal_weight(mu, nu)
    cand = _feasible_lattice(tuple(np.sort(y).tolist()), float(resolution))
    costs = theta.eval(np.sort(x)[None, :] - cand).mean(axis=1)
    return float(costs.min())


def _pl_eval(y, kinks, slopes):
    y = np.asarray(y, dtype=float)
    out = slopes[0] * (y - kinks[0])
    for k, ds in zip(kinks, np.diff(slopes)):
        out = out + ds * np.maximum(y - k, 0.0)
    return out


def _pl_hopf_lax(x, kinks, slopes, theta):
    """Exact ``Q_1 f`` for convex piecewise-linear ``f``: piece by piece."""
    inv = theta.require_inverse()
    edges = np.concatenate(([-np.inf], kinks, [np.inf]))
    best = np.full(np.shape(x), np.inf)
    for i, s in enumerate(slopes):
        y = np.clip(x + inv(-s), edges[i], edges[i + 1])
        best = np.minimum(best, _pl_eval(y, kinks, slopes) + theta.eval(y - x))
    return best


def duality_lower_bound(mu, nu, theta, kink_budget, sweeps=60):
    """Lower bound on the weak cost from convex piecewise-linear potentials.

    Maximizes ``int Q_1 f dmu - int f dnu`` over convex ``f`` with at most
    ``kink_budget`` kinks on the atom grid, by coordinate ascent on the
    initial slope and the (non-negative) slope increments, followed by a
    Nelder-Mead polish.  Any value returned is a valid lower bound.
    """
    if kink_budget < 1:
        raise ParameterError("kink_budget must be at least 1")
    grid = np.union1d(mu.atoms, nu.atoms)
    if grid.size > kink_budget:
        pick = np.unique(np.round(np.linspace(0, grid.size - 1, kink_budget)).astype(int))
        grid = grid[pick]
    kinks = grid
    span = max(float(np.ptp(np.union1d(mu.atoms, nu.atoms))), 1.0)
    bound = 2.0 * float(abs(theta.deriv(span))) + 1.0

    def objective(p):
        slopes = p[0] + np.concatenate(([0.0], np.cumsum(np.maximum(p[1:], 0.0))))
        q = _pl_hopf_lax(mu.atoms, kinks, slopes, theta)
        return float(np.dot(mu.weights, q)
                     - np.dot(nu.weights, _pl_eval(nu.atoms, kinks, slopes)))

    p = np.zeros(kinks.size + 1)
    best = objective(p)
    for _ in range(sweeps):
        start = best
        for i in range(p.size):
            lo, hi = (-bound, bound) if i == 0 else (0.0, 2.0 * bound)

            def neg(v, i=i):
                q = p.copy()
                q[i] = v
                return -objective(q)

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            if -res.fun > best:
                p[i] = res.x
                best = -res.fun
        if best - start < 1e-13:
            break
    polish = minimize(lambda q: -objective(q), p, method="Nelder-Mead",
                      options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
    return max(best, -float(polish.fun))

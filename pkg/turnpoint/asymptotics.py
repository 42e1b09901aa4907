"""
Differences of neighbouring inner or outer solutions (cocycles), their
exponential flatness in eps, and the Gevrey orders they imply.

Cocycles are carried as natural logarithms. The difference of two Laplace
integrals along rays d and d' equals the two tails beyond radius rho/2 plus
the arc of radius rho/2 joining them, since the Borel-plane function is the
same analytic function on the disc. The pieces keep their signs and are
summed in complex log space, so differences far below double precision
relative to the solutions themselves are still resolved.
"""
import collections
import logging
import math

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError, FitError, SectorError, StructuralError
from .geometry import wrap
from .inner import LAPLACE_DECAY, inner_extent, inner_solution, solve_inner
from .model import eps_power
from .outer import outer_solution, solve_outer
from .transforms import TAIL_TOLERANCE, ValueInterpolant, legendre_rule, panel_nodes
from .utils import to_jsonable

log = logging.getLogger("turnpoint")

ARC_RAYS = 3
ARC_NODES = 64
MIN_FIT_POINTS = 5
# naive differences below this fraction of |u| are solver noise
NAIVE_FLOOR = 1e-6
AGREEMENT = 0.1
R2_THRESHOLD = 0.98


FlatnessFit = collections.namedtuple(
    "FlatnessFit", ["order_tested", "slope", "intercept", "r2", "eps_points", "log_theta"]
)
FlatnessFit.__doc__ = """
Least-squares fit of log Theta = intercept + slope / |eps|^order_tested.

A flat cocycle has slope < 0; C = e^intercept and A = -slope.
"""


def fit_to_mapping(fit):
    return to_jsonable(fit._asdict())


def eps_ladder(covering, index, high, low, n=6):
    """
    ``n`` values of eps, geometric in |eps| from ``high`` down to ``low``,
    on the bisector of the overlap of sectors ``index`` and ``index + 1``.
    """
    if not 0 < low < high:
        raise StructuralError(f"need 0 < low < high, got low={low}, high={high}")
    angle = covering.overlap_bisector(index)
    return [r * np.exp(1j * angle) for r in np.geomspace(high, low, n)]


def complex_logsumexp(logs, axis=None):
    "log of the sum of exp(logs) for complex ``logs``; -inf where the sum vanishes."
    logs = np.asarray(logs, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.max(logs.real, axis=axis, keepdims=True)
        shift = np.where(np.isfinite(shift), shift, 0.0)
        total = np.log(np.sum(np.exp(logs - shift), axis=axis, keepdims=True)) + shift
    return np.squeeze(total, axis=axis)


def _complex_log(values):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.asarray(values, dtype=complex))


def _samples(solution, r, slope):
    if slope:
        return solution.slope()(r)
    return ValueInterpolant(solution.r_grid, solution.values)(r)


def tail_log(solution, r_min, kernel_log, slope=True):
    """
    Complex log, per m-node, of int f(tau) exp(kernel_log(tau)) dtau along
    the ray of ``solution`` from ``r_min`` to the end of the grid. ``f`` is
    the slope w/tau when ``slope`` is set, the values otherwise.

    Raises DivergenceError when the integrand has not decayed by the end.
    """
    r_grid = np.asarray(solution.r_grid)
    inner = r_grid[r_grid > r_min]
    if inner.size < 1:
        raise DomainError(f"the grid ends at {r_grid[-1]}, below the cut radius {r_min}")
    nodes, weights = panel_nodes(np.concatenate([[r_min], inner]))
    direction = solution.direction
    radial = np.log(weights) + 1j * direction + kernel_log(nodes * np.exp(1j * direction))
    logs = radial[:, None] + _complex_log(_samples(solution, nodes, slope))
    with np.errstate(invalid="ignore"):
        excess = np.max(logs[-1].real) - np.max(logs.real)
    if excess > math.log(TAIL_TOLERANCE):
        raise DivergenceError(
            f"cocycle ray {direction:.4f}: integrand has not decayed at the end of the grid "
            f"(tail/max = {math.exp(excess):.3e})"
        )
    return complex_logsumexp(logs, axis=0)


def arc_log(rows, start, stop, radius, kernel_log):
    """
    Complex log, per m-node, of the integral of f(tau) exp(kernel_log(tau))
    over the arc tau = radius e^(i theta) from ``start`` to ``stop``.

    ``rows`` samples f at equally spaced angles, both ends included; f is
    interpolated between them.
    """
    rows = np.asarray(rows, dtype=complex)
    span = wrap(stop - start)
    x, weights = legendre_rule(ARC_NODES)
    values = ValueInterpolant(np.linspace(0.0, 1.0, len(rows)), rows)(x)
    tau = radius * np.exp(1j * (start + span * x))
    radial = np.log(weights) + _complex_log(1j * span * tau) + kernel_log(tau)
    return complex_logsumexp(radial[:, None] + _complex_log(values), axis=0)


def fourier_log(per_m, m, weights, z):
    "log of (2 pi)^(-1/2) sum_m w_m e^(izm) exp(per_m), one value per z."
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    logs = np.log(weights)[None, :] + 1j * np.multiply.outer(z, m) + np.asarray(per_m)[None, :]
    return complex_logsumexp(logs, axis=1) - 0.5 * math.log(2 * math.pi)


def difference_log(first, second, rows, radius, kernel_log, z, slope=True):
    """
    log |L_second - L_first| per z, where L is the Laplace integral with
    kernel exp(kernel_log) along the ray of each solution, synthesised in z.

    Both solutions continue one analytic function on the disc of ``radius``;
    ``rows`` samples it on the arc between their rays.
    """
    pieces = [
        tail_log(second, radius, kernel_log, slope),
        tail_log(first, radius, kernel_log, slope) + 1j * math.pi,
        arc_log(rows, first.direction, second.direction, radius, kernel_log),
    ]
    per_m = complex_logsumexp(np.stack(pieces), axis=0)
    return fourier_log(per_m, first.m, first.weights, z).real


class CocycleEvaluator:
    """
    Solves, caches and differences the neighbouring solutions of one family
    at one eps. ``solver`` holds keyword arguments for the fixed-point solver.
    """

    def __init__(self, family, spec, eps, rho, solver=None):
        self.family = family
        self.spec = spec
        self.p = family.params
        self.eps = complex(eps)
        self.rho = float(rho)
        self.solver = dict(solver or {})
        self._solutions = {}

    @property
    def inner(self):
        return self.family.kind == "inner"

    def solve(self, direction, R):
        key = (round(direction, 12), round(R, 15))
        if key not in self._solutions:
            if self.inner:
                result = solve_inner(self.eps, self.spec, self.p, direction=direction, R=R, **self.solver)
            else:
                result = solve_outer(self.eps, self.spec, self.p, direction=direction, R=R, **self.solver)
            log.debug("%s solve along %.4f at eps=%s: %s", self.family.kind, direction, self.eps, result)
            self._solutions[key] = result
        return self._solutions[key]

    def _ratio(self, point):
        return complex(point) / eps_power(self.eps, self.p.gamma)

    def extent(self, direction, point):
        "Radius at which the Laplace integral at ``point`` has fully decayed along ``direction``."
        if self.inner:
            T = self.family.inner_T(point, self.eps)
            return inner_extent(T, direction, self.eps, self.p, self.rho)
        s = self._ratio(point)
        growth = self.p.nu / abs(self.eps) ** float(self.p.Gamma)
        rate = abs(s) * math.cos(direction + np.angle(s)) - growth
        if rate <= 0:
            raise DomainError(f"|t/eps^gamma| = {abs(s):.4g} does not beat the growth rate {growth:.4g}")
        return max(self.rho, LAPLACE_DECAY / rate)

    def ray(self, direction, point):
        return self.solve(direction, self.extent(direction, point))

    def directions(self, index, point):
        try:
            if self.inner:
                T = self.family.inner_T(point, self.eps)
                return self.family.laplace_direction(index, T), self.family.laplace_direction(index + 1, T)
            return (
                self.family.outer_direction(index, point, self.eps),
                self.family.outer_direction(index + 1, point, self.eps),
            )
        except SectorError as err:
            raise DomainError(f"eps={self.eps} is not in the overlap {index}: {err}") from err

    def kernel_log(self, point):
        "log of the Laplace kernel at ``point`` as a function of tau."
        if self.inner:
            kappa = self.p.kappa
            T = self.family.inner_T(point, self.eps)

            def kernel(tau):
                return math.log(kappa) - (tau / T) ** kappa
        else:
            s = self._ratio(point)

            def kernel(tau):
                return -s * tau

        return kernel

    def arc_rows(self, start, stop, first, second):
        "Samples on the arc of radius rho/2, solving intermediate rays up to rho/2."
        half = 0.5 * self.rho
        span = wrap(stop - start)
        samples = np.linspace(0.0, 1.0, ARC_RAYS + 2)
        rows = []
        for k, x in enumerate(samples):
            if k == 0:
                fp = first
            elif k == len(samples) - 1:
                fp = second
            else:
                fp = self.solve(start + span * x, half)
            rows.append(_samples(fp.solution, half, self.inner))
        return np.array(rows)

    def cocycle(self, index, point, z):
        "log |difference| of the neighbouring solutions at one time point, max over ``z``."
        start, stop = self.directions(index, point)
        if abs(wrap(stop - start)) < 1e-12:
            return -math.inf
        first, second = self.ray(start, point), self.ray(stop, point)
        rows = self.arc_rows(start, stop, first, second)
        logs = difference_log(
            first.solution, second.solution, rows, 0.5 * self.rho, self.kernel_log(point), z, self.inner
        )
        return float(np.max(logs))

    def naive(self, index, point, z):
        """
        log |difference| by subtracting the two solutions; -inf when the
        difference is below NAIVE_FLOOR times the solutions.
        """
        start, stop = self.directions(index, point)
        if abs(wrap(stop - start)) < 1e-12:
            return -math.inf
        p, eps = self.p, self.eps
        pair = (self.ray(start, point), self.ray(stop, point))
        if self.inner:
            t = complex(point) * eps_power(eps, p.chi - p.alpha)
            values = [inner_solution(t, z, eps, fp, p) for fp in pair]
            scale = eps_power(eps, p.m0)
        else:
            values = [outer_solution(point, z, eps, fp, p, delta1=self.family.delta1) for fp in pair]
            scale = eps_power(eps, -p.gamma0)
        first, second = (scale * np.atleast_1d(v) for v in values)
        difference = np.abs(second - first)
        visible = difference > NAIVE_FLOOR * np.maximum(np.abs(first), np.abs(second))
        if not np.any(visible):
            return -math.inf
        return float(np.log(np.max(difference[visible])))

    def _by_point(self, probe):
        by_point = collections.defaultdict(list)
        for point, z in probe:
            by_point[complex(point)].append(z)
        return by_point.items()

    def sup(self, index, probe):
        "log of the sup of the signed cocycle over ``probe``."
        return max((self.cocycle(index, point, zs) for point, zs in self._by_point(probe)), default=-math.inf)

    def naive_sup(self, index, probe):
        return max((self.naive(index, point, zs) for point, zs in self._by_point(probe)), default=-math.inf)


def cocycle_sup(family, index, eps, probe, spec, rho, solver=None):
    """
    log of the sup over ``probe`` of |eps^m0 (u^(d_(p+1)) - u^(d_p))| (inner)
    or |eps^(-gamma0) (v^(u_(j+1)) - v^(u_j))| (outer), summed with signs
    over the ray and arc pieces.

    Parameters
    ----------
    family : AssociatedFamily
    index : int
        The overlap of sectors ``index`` and ``index + 1``.
    probe : iterable of (point, z)
        ``point`` is x (inner, t = x eps^(chi - alpha)) or t (outer).
    rho : float
        Radius of the disc on which neighbouring Borel-plane functions agree.

    Returns
    -------
    float
        ``-inf`` when both solutions use the same ray.
    """
    best = CocycleEvaluator(family, spec, eps, rho, solver).sup(index, probe)
    log.info("cocycle %s/%s at |eps|=%.4g: log %.4f", family.kind, index, abs(eps), best)
    return best


def naive_cocycle(family, index, eps, probe, spec, rho, solver=None):
    """
    log of the sup over ``probe`` of the directly subtracted cocycle; only
    meaningful while the difference stands above the solver accuracy.
    """
    return CocycleEvaluator(family, spec, eps, rho, solver).naive_sup(index, probe)


def agrees(signed, naive, tolerance=AGREEMENT):
    """
    True when the naive log is within ``tolerance`` of the signed one in
    relative terms, None when the naive value is not representable.
    """
    if not math.isfinite(naive) or not math.isfinite(signed):
        return None
    return abs(naive - signed) <= tolerance * abs(signed)


def fit_flatness(logs, eps, order):
    """
    Least squares of ``logs`` against 1/|eps|^order.

    Raises
    ------
    FitError
        with fewer than five finite points or a degenerate design.
    """
    pairs = sorted(zip((abs(complex(e)) for e in eps), logs), reverse=True)
    if len(pairs) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} points, got {len(pairs)}")
    sizes = np.array([size for size, _ in pairs])
    y = np.array([value for _, value in pairs], dtype=float)
    if not np.all(np.isfinite(y)):
        raise FitError("the cocycle logs must be finite")
    if np.any(np.diff(sizes) >= 0):
        raise FitError("the eps points must be distinct")
    x = sizes ** (-float(order))
    if np.ptp(x) <= 1e-12 * np.max(np.abs(x)):
        raise FitError(f"1/|eps|^{order} is constant over the points")
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (intercept + slope * x)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0 else 1.0 - float(np.sum(residual ** 2)) / total
    return FlatnessFit(float(order), float(slope), float(intercept), r2, list(sizes), list(y))


def _order_pass(best, expected, mean_r2):
    return best is not None and math.isclose(best, expected) and mean_r2[best] >= R2_THRESHOLD


def gevrey_report(inner_fits, outer_fits, p):
    """
    Compare the best-fitting flatness orders with chi kappa (inner) and
    gamma (outer).

    ``inner_fits`` and ``outer_fits`` hold FlatnessFits over any overlaps at
    several tested orders; the best order is the one with the highest mean r2.
    A family passes when its best order is the expected one and that mean r2
    reaches R2_THRESHOLD.
    """
    def best_order(fits):
        by_order = collections.defaultdict(list)
        for fit in fits:
            by_order[fit.order_tested].append(fit.r2)
        if not by_order:
            return None, {}
        means = {order: float(np.mean(values)) for order, values in by_order.items()}
        return max(means, key=means.get), means

    inner_expected = float(p.chi * p.kappa)
    outer_expected = float(p.gamma)
    inner_best, inner_r2 = best_order(inner_fits)
    outer_best, outer_r2 = best_order(outer_fits)
    report = {
        "inner": {
            "expected_order": inner_expected,
            "best_order": inner_best,
            "mean_r2": inner_r2,
            "flat": all(fit.slope < 0 for fit in inner_fits),
            "pass": _order_pass(inner_best, inner_expected, inner_r2),
        },
        "outer": {
            "expected_order": outer_expected,
            "best_order": outer_best,
            "mean_r2": outer_r2,
            "flat": all(fit.slope < 0 for fit in outer_fits),
            "pass": _order_pass(outer_best, outer_expected, outer_r2),
        },
        "orders_distinct": not math.isclose(inner_expected, outer_expected),
        "outer_gevrey_bound": "C_j M_j^n Gamma(1 + n/gamma) |eps|^n",
        "inner_gevrey_bound": "C_p M_p^n Gamma(1 + n/(chi kappa)) |eps|^n",
    }
    report["pass"] = report["inner"]["pass"] and report["outer"]["pass"]
    for kind in ("inner", "outer"):
        if not report[kind]["pass"]:
            log.warning("%s flatness: best order %s (mean r2 %s), expected %s", kind,
                        report[kind]["best_order"], report[kind]["mean_r2"], report[kind]["expected_order"])
    return to_jsonable(report)


def sigma_t(t, p, delta1_inf, delta2_inf):
    """
    ((delta1 - delta2)/nu)^(1/(gamma - Gamma)) |t|^(1/(gamma - Gamma)): the
    eps radius below which t lies in the outer time domain.
    """
    if delta2_inf >= delta1_inf:
        raise DomainError(f"need delta2 < delta1, got {delta2_inf} >= {delta1_inf}")
    exponent = 1.0 / float(p.gamma - p.Gamma)
    return ((delta1_inf - delta2_inf) / p.nu) ** exponent * abs(t) ** exponent


def rs_boundedness(values_by_eps):
    """
    Boundedness of a family of solutions as eps -> 0, from a mapping of eps
    to the sup of |solution| over a probe.
    """
    items = sorted(((abs(complex(e)), float(v)) for e, v in values_by_eps.items()), reverse=True)
    if len(items) < 3:
        raise FitError(f"need at least 3 eps values, got {len(items)}")
    smallest = [value for _, value in items[-3:]]
    finite = all(math.isfinite(value) for value in smallest)
    trend = [value for _, value in items]
    non_increasing = all(b <= a * (1 + 1e-9) for a, b in zip(trend, trend[1:]))
    if finite and not non_increasing:
        log.info("solution sup grows as eps decreases: %s", trend)
    return {
        "eps": [size for size, _ in items],
        "sup": trend,
        "bounded": finite,
        "non_increasing": non_increasing,
        "bound": max(smallest) if finite else math.inf,
    }


def gevrey_bound(n, eps, C, M, k):
    "log of C M^n Gamma(1 + n/k) |eps|^n."
    if C <= 0 or M <= 0 or k <= 0:
        raise DomainError(f"need C, M, k > 0, got {C}, {M}, {k}")
    return math.log(C) + n * math.log(M) + float(special.gammaln(1 + n / k)) + n * math.log(abs(eps))


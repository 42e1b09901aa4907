"""
Borel and Laplace transforms of order kappa along rays, the classical Laplace
transform, and the special functions the bounds rely on.

Functions on a ray tau = r exp(i d) are carried as samples on a radial grid
starting at r = 0. Borel-plane functions vanish at 0 and are interpolated
through their slope g(r) = w(tau)/tau, with a cubic spline in ln r.
"""
import functools
import logging
import math

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .errors import (
    DivergenceError,
    DomainError,
    GridCoverageError,
    OverflowReportError,
    SectorError,
    StructuralError,
)
from .utils import canonical_json, csv_text

log = logging.getLogger("turnpoint")

DEFAULT_N_R = 400
DEFAULT_R1_RATIO = 1e-4
DEFAULT_QUAD_NODES = 20
PANEL_NODES = 8
TAIL_TOLERANCE = 1e-10


@functools.lru_cache(maxsize=256)
def jacobi_rule(n, alpha, beta):
    """
    Nodes and weights for int_0^1 (1 - x)^alpha x^beta f(x) dx.
    """
    t, w = special.roots_jacobi(n, alpha, beta)
    x = 0.5 * (1.0 + t)
    w = w * 2.0 ** (-alpha - beta - 1.0)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@functools.lru_cache(maxsize=64)
def legendre_rule(n):
    "Gauss-Legendre nodes and weights on [0, 1]."
    t, w = special.roots_legendre(n)
    x = 0.5 * (1.0 + t)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def ray_grid(R, n_r=DEFAULT_N_R, r1_ratio=DEFAULT_R1_RATIO):
    """
    0 followed by ``n_r`` geometric nodes from ``r1_ratio * R`` to ``R``.
    """
    if R <= 0 or n_r < 2:
        raise StructuralError(f"need R > 0 and n_r >= 2, got R={R}, n_r={n_r}")
    return np.concatenate([[0.0], np.geomspace(r1_ratio * R, R, n_r)])


def panel_nodes(r_grid, n=PANEL_NODES):
    """
    Composite Gauss-Legendre nodes and weights over the panels of ``r_grid``.
    """
    x, w = legendre_rule(n)
    left = np.asarray(r_grid[:-1])
    width = np.diff(r_grid)
    nodes = left[:, None] + width[:, None] * x[None, :]
    weights = width[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _expand(array, ndim):
    return array.reshape(array.shape + (1,) * (ndim - array.ndim))


class RayFunction:
    """
    Samples of a function along the ray of angle ``direction``.

    Parameters
    ----------
    direction : float
    r_grid : array_like
        Strictly increasing radii, starting at 0.
    values : array_like
        Samples with shape ``(len(r_grid),)`` or ``(len(r_grid), n_m)``.
    """

    def __init__(self, direction, r_grid, values):
        r_grid = np.array(r_grid, dtype=float)
        values = np.array(values, dtype=complex)
        if r_grid.ndim != 1 or r_grid.size < 3 or r_grid[0] != 0:
            raise StructuralError("r_grid must be one-dimensional, start at 0 and hold 3 nodes or more")
        if np.any(np.diff(r_grid) <= 0):
            raise StructuralError("r_grid must be strictly increasing")
        if values.shape[0] != r_grid.size:
            raise StructuralError(
                f"{values.shape[0]} samples for a grid of {r_grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise StructuralError("RayFunction values must be finite")
        self.direction = float(direction)
        self.r_grid = r_grid
        self.values = values

    @classmethod
    def from_function(cls, func, direction, r_grid):
        tau = np.asarray(r_grid) * np.exp(1j * direction)
        return cls(direction, r_grid, func(tau))

    @property
    def tau(self):
        return self.r_grid * np.exp(1j * self.direction)

    @property
    def R(self):
        return float(self.r_grid[-1])

    def with_values(self, values):
        return RayFunction(self.direction, self.r_grid, values)

    def slope(self):
        return SlopeInterpolant(self.r_grid, self.values, self.direction)

    def interpolant(self):
        return ValueInterpolant(self.r_grid, self.values)

    def header(self, kappa=None):
        return {"direction": self.direction, "kappa": kappa, "n_r": int(self.r_grid.size)}

    def to_csv(self):
        if self.values.ndim != 1:
            raise StructuralError("only scalar ray functions have a CSV form")
        rows = [(r, v.real, v.imag) for r, v in zip(self.r_grid, self.values)]
        return csv_text(("r", "re", "im"), rows)

    def header_json(self, kappa=None):
        return canonical_json(self.header(kappa))


class SlopeInterpolant:
    """
    Evaluate g(r) = w(r e^{id}) / (r e^{id}) for a function vanishing at 0.

    Cubic spline in ln r between the first and last positive node; below
    the first positive node, linear interpolation towards the value at 0
    extrapolated from the first two nodes.
    """

    def __init__(self, r_grid, values, direction):
        r = np.asarray(r_grid[1:], dtype=float)
        tau = r * np.exp(1j * direction)
        values = np.asarray(values[1:], dtype=complex)
        g = values / _expand(tau, values.ndim)
        self._trailing = g.shape[1:]
        self._r1 = r[0]
        self._R = r[-1]
        self._g1 = g[0]
        self._g0 = g[0] - (g[1] - g[0]) * r[0] / (r[1] - r[0])
        self._spline = CubicSpline(np.log(r), np.concatenate([g.real, g.imag], axis=-1) if g.ndim > 1
                                   else np.stack([g.real, g.imag], axis=-1))

    @property
    def R(self):
        return self._R

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        if flat.size and np.max(flat) > self._R * (1.0 + 1e-12):
            raise GridCoverageError(
                f"radius {np.max(flat)} lies beyond the grid end {self._R}"
            )
        out = np.empty((flat.size,) + self._trailing, dtype=complex)
        low = flat < self._r1
        if np.any(low):
            frac = _expand(flat[low] / self._r1, 1 + len(self._trailing))
            out[low] = self._g0 + (self._g1 - self._g0) * frac
        high = ~low
        if np.any(high):
            parts = self._spline(np.log(flat[high]))
            half = parts.shape[-1] // 2
            part = parts[..., :half] + 1j * parts[..., half:]
            out[high] = part.reshape((-1,) + self._trailing)
        return out.reshape(r.shape + self._trailing)


class ValueInterpolant:
    """
    Cubic spline in r through every node, 0 included; for functions that
    need not vanish at the origin.
    """

    def __init__(self, r_grid, values):
        values = np.asarray(values, dtype=complex)
        self._trailing = values.shape[1:]
        self._R = float(r_grid[-1])
        self._spline = CubicSpline(
            np.asarray(r_grid, dtype=float),
            np.concatenate([values.real, values.imag], axis=-1) if values.ndim > 1
            else np.stack([values.real, values.imag], axis=-1),
        )

    @property
    def R(self):
        return self._R

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if r.size and np.max(r) > self._R * (1.0 + 1e-12):
            raise GridCoverageError(f"radius {np.max(r)} lies beyond the grid end {self._R}")
        parts = self._spline(r.ravel())
        half = parts.shape[-1] // 2
        out = parts[..., :half] + 1j * parts[..., half:]
        return out.reshape(r.shape + self._trailing)


class FormalSeries:
    """
    A truncated series sum_{n >= 1} a_n X^n; ``coeffs[0]`` is a_1.

    Coefficients may be numbers or arrays of equal shape.
    """

    def __init__(self, coeffs):
        self.coeffs = tuple(coeffs)

    @property
    def N(self):
        return len(self.coeffs)

    @classmethod
    def monomial(cls, n, coeff=1.0):
        if n < 1:
            raise StructuralError("series start at degree 1")
        return cls([0.0] * (n - 1) + [coeff])

    def coefficient(self, n):
        if 1 <= n <= self.N:
            return self.coeffs[n - 1]
        return 0.0

    def irregular_derivative(self, kappa):
        "Coefficients of X^(kappa+1) d/dX applied to the series."
        coeffs = [0.0] * (self.N + kappa)
        for n, a in enumerate(self.coeffs, start=1):
            coeffs[n + kappa - 1] = n * a
        return FormalSeries(coeffs)

    def times_monomial(self, k, factor=1.0):
        return FormalSeries([0.0] * k + [factor * a for a in self.coeffs])

    def __call__(self, x):
        return sum(a * x ** n for n, a in enumerate(self.coeffs, start=1))

    def __repr__(self):
        return f"FormalSeries(N={self.N})"


def mk_borel(s, kappa):
    """
    Borel transform of order kappa: a_n maps to a_n / Gamma(n/kappa).
    """
    if kappa < 1:
        raise StructuralError(f"kappa must be at least 1, got {kappa}")
    return FormalSeries(
        [a / special.gamma(n / kappa) for n, a in enumerate(s.coeffs, start=1)]
    )


def series_laplace(s, T, kappa):
    "Termwise Laplace of order kappa of a Borel-plane series: b_n Gamma(n/kappa) T^n."
    return sum(b * special.gamma(n / kappa) * T ** n for n, b in enumerate(s.coeffs, start=1))


def _check_tail(integrand, weights, what):
    scale = np.max(np.abs(integrand))
    if scale == 0:
        return
    tail = np.max(np.abs(integrand[-1]))
    if tail > TAIL_TOLERANCE * scale:
        raise DivergenceError(
            f"{what}: integrand has not decayed at the end of the grid "
            f"(tail/max = {tail / scale:.3e})"
        )


def mk_laplace(w, T, kappa, delta=1e-3):
    """
    Laplace transform of order kappa along the ray of ``w``:

    kappa * int_0^inf w(u) exp(-(u/T)^kappa) du/u

    Parameters
    ----------
    w : RayFunction
        Borel-plane function, vanishing at 0.
    T : complex
    kappa : int
    delta : float
        Lower bound required of cos(kappa (d - arg T)).

    Returns
    -------
    value : complex, or array over the trailing axis of ``w.values``
    """
    T = complex(T)
    if T == 0:
        raise SectorError("the Laplace transform is not defined at T = 0")
    cosine = math.cos(kappa * (w.direction - np.angle(T)))
    if cosine < delta:
        raise SectorError(
            f"cos(kappa*(d - arg T)) = {cosine:.4f} is below {delta} for d={w.direction}"
        )
    slope = w.slope()
    nodes, weights = panel_nodes(w.r_grid)
    e_d = np.exp(1j * w.direction)
    g = slope(nodes)
    damping = np.exp(-(nodes * e_d / T) ** kappa)
    integrand = g * _expand(damping * e_d, g.ndim)
    _check_tail(integrand, weights, "mk_laplace")
    result = kappa * np.tensordot(weights, integrand, axes=([0], [0]))
    if np.ndim(result) == 0:
        return complex(result)
    return result


def fractional_kernel(slope, r_out, direction, a, p, kappa, nodes=DEFAULT_QUAD_NODES):
    """
    Borel image of the kernel operator

    tau^kappa / Gamma(a) int_0^{tau^kappa} (tau^kappa - s)^(a-1) (kappa s)^p w(s^(1/kappa)) ds/s

    evaluated at ``tau = r_out e^{i direction}`` from the slope interpolant
    of w. After s = tau^kappa y^kappa the integral is

    kappa^p tau^(kappa(a+p)+1) / Gamma(a) int_0^1 (1-y)^(a-1) S(y) g(r y) dy

    with S(y) = kappa (1 + y + ... + y^(kappa-1))^(a-1) y^(kappa p), and
    Gauss-Jacobi handles the endpoint singularity. ``a == 0`` is the limit
    kappa^p tau^(kappa p) w(tau).
    """
    r_out = np.asarray(r_out, dtype=float)
    tau = r_out * np.exp(1j * direction)
    if a == 0:
        g = slope(r_out)
        return _expand(kappa ** p * tau ** (kappa * p + 1), g.ndim) * g
    if a < 0:
        raise StructuralError(f"kernel order must be nonnegative, got {a}")
    y, w = jacobi_rule(nodes, float(a) - 1.0, 0.0)
    geometric = sum(y ** j for j in range(kappa))
    smooth = w * kappa * geometric ** (float(a) - 1.0) * y ** (kappa * p)
    g = slope(np.multiply.outer(r_out, y))
    integral = np.tensordot(smooth, g, axes=([0], [1]))
    prefactor = kappa ** p * tau ** (kappa * (float(a) + p) + 1) / special.gamma(float(a))
    return _expand(prefactor, integral.ndim) * integral


def cauchy_kernel(slope1, slope2, r_out, direction, kappa, pair=np.multiply, nodes=DEFAULT_QUAD_NODES):
    """
    Borel image of a product of two series,

    V(sigma) = sigma^kappa int_0^{sigma^kappa} pair(w1((sigma^kappa - s)^(1/kappa)),
               w2(s^(1/kappa))) ds / ((sigma^kappa - s) s),

    returned at ``sigma = r_out e^{i direction}``. The s-interval is split at
    its midpoint and each half is straightened by s = sigma^kappa u^kappa so
    that the slopes are evaluated at smooth arguments.
    """
    r_out = np.asarray(r_out, dtype=float)
    sigma = r_out * np.exp(1j * direction)
    u_star = 0.5 ** (1.0 / kappa)
    x, w = legendre_rule(nodes)
    u = u_star * x
    weights = u_star * w * (1.0 - u ** kappa) ** (1.0 / kappa - 1.0)
    v = (1.0 - u ** kappa) ** (1.0 / kappa)
    near = np.multiply.outer(r_out, u)
    far = np.multiply.outer(r_out, v)
    first = pair(slope1(far), slope2(near))
    second = pair(slope1(near), slope2(far))
    integral = np.tensordot(weights, first + second, axes=([0], [1]))
    return _expand(kappa * sigma ** 2, integral.ndim) * integral


def borel_identity_irregular(w, kappa):
    "kappa tau^kappa w(tau): the Borel image of T^(kappa+1) d/dT."
    factor = kappa * w.tau ** kappa
    return w.with_values(_expand(factor, w.values.ndim) * w.values)


def borel_identity_monomial(w, m, kappa, nodes=DEFAULT_QUAD_NODES):
    "The Borel image of multiplication by T^m, on the grid of ``w``."
    values = fractional_kernel(w.slope(), w.r_grid, w.direction, m / kappa, 0, kappa, nodes)
    return w.with_values(values)


def borel_identity_cauchy(w1, w2, kappa, nodes=DEFAULT_QUAD_NODES):
    "The Borel image of the product of two series, on the grid of ``w1``."
    if w1.r_grid.size != w2.r_grid.size or np.any(w1.r_grid != w2.r_grid):
        raise StructuralError("both factors must share a radial grid")
    values = cauchy_kernel(w1.slope(), w2.slope(), w1.r_grid, w1.direction, kappa, nodes=nodes)
    return w1.with_values(values)


def growth_rate(w):
    """
    Exponential growth rate of |w| estimated from the outer half of the grid.
    """
    r = w.r_grid
    half = np.searchsorted(r, 0.5 * r[-1])
    mags = np.abs(w.values)
    if mags.ndim > 1:
        mags = mags.max(axis=tuple(range(1, mags.ndim)))
    if mags[half] == 0 or mags[-1] == 0:
        return 0.0
    return max(0.0, math.log(mags[-1] / mags[half]) / (r[-1] - r[half]))


def classical_laplace(w, t, delta1=0.1):
    """
    int_0^inf w(tau) exp(-t tau) dtau along the ray of ``w``.

    Raises SectorError unless cos(d + arg t) >= delta1, and DivergenceError
    when |t| does not exceed the measured growth rate divided by delta1.
    """
    t = complex(t)
    cosine = math.cos(w.direction + np.angle(t))
    if t == 0 or cosine < delta1:
        raise SectorError(f"cos(d + arg t) = {cosine:.4f} is below {delta1}")
    rate = growth_rate(w)
    if abs(t) <= rate / delta1:
        raise DivergenceError(f"|t| = {abs(t)} does not beat the growth rate {rate}")
    interp = w.interpolant()
    nodes, weights = panel_nodes(w.r_grid)
    e_d = np.exp(1j * w.direction)
    values = interp(nodes)
    integrand = values * _expand(np.exp(-t * nodes * e_d) * e_d, values.ndim)
    _check_tail(integrand, weights, "classical_laplace")
    result = np.tensordot(weights, integrand, axes=([0], [0]))
    if np.ndim(result) == 0:
        return complex(result)
    return result


def gamma_fn(x):
    if x <= 0:
        raise DomainError(f"gamma_fn takes positive arguments, got {x}")
    return float(special.gamma(x))


def mittag_leffler(beta, x, N=None):
    """
    E_beta(x) = sum_{n >= 0} x^n / Gamma(1 + beta n) for x >= 0.

    Terms are summed in log-space until past the peak the next term drops
    below 1e-15 of the partial sum.

    Raises
    ------
    OverflowReportError
        when e^(x^(1/beta)) cannot be represented; ``log_value`` carries
        x^(1/beta).
    """
    if beta <= 0 or x < 0:
        raise DomainError(f"need beta > 0 and x >= 0, got beta={beta}, x={x}")
    log_bound = x ** (1.0 / beta) if x > 0 else 0.0
    if log_bound > 700:
        raise OverflowReportError(
            f"E_{beta}({x}) overflows: log of the growth bound is {log_bound:.1f}",
            log_bound,
        )
    if x == 0:
        return 1.0
    limit = N if N is not None else 100000
    log_x = math.log(x)
    total = 0.0
    previous = math.inf
    for n in range(limit):
        term = math.exp(n * log_x - special.gammaln(1.0 + beta * n))
        total += term
        if term < previous and term < 1e-15 * total:
            break
        previous = term
    return total


def mittag_leffler_bound_constant(beta, xs):
    """
    Smallest C with E_beta(x) <= C exp(x^(1/beta)) on the sample ``xs``.
    """
    return max(mittag_leffler(beta, x) * math.exp(-x ** (1.0 / beta)) for x in xs)

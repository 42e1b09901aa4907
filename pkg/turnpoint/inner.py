"""
Inner solutions: the Borel-plane fixed point omega(tau, m, eps) of the map
H_eps along a ray, and its m_kappa-Laplace and inverse Fourier synthesis.
"""
import functools
import json
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import special

from .errors import (
    AdmissibilityError,
    DivergenceError,
    DomainError,
    NonConvergenceError,
    SectorError,
    StructuralError,
)
from .fourier import (
    DEFAULT_N_PTS,
    default_m_max,
    grid,
    inverse_fourier_arrays,
    star_arrays,
    symbol,
    trapezoid_weights,
)
from .model import ScaleParams, eps_power
from .transforms import (
    DEFAULT_QUAD_NODES,
    RayFunction,
    SlopeInterpolant,
    cauchy_kernel,
    fractional_kernel,
    mk_laplace,
    ray_grid,
)
from .turning import eval_Pm
from .utils import FileManager, read_csv

log = logging.getLogger("turnpoint")

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 200
DEFAULT_N_R = 160
DEFAULT_N_M = DEFAULT_N_PTS
P_FLOOR = 1e-10
DIVERGENCE_STREAK = 3
LAGUERRE_NODES = 160
SERIES_TOLERANCE = 1e-12
MAX_TERMS = 400
# exp(-LAPLACE_DECAY) is the damping required at the end of a Laplace ray
LAPLACE_DECAY = 40.0
MIN_COSINE = 1e-3


class RayGrid2D(RayFunction):
    """
    Samples w(r e^{id}, m) on a radial grid times the symmetric m-grid of
    half-width ``m_max``; ``values`` has shape (n_r + 1, n_m).

    Borel-plane functions vanish at tau = 0, so the r = 0 row must be zero.
    """

    kind = "inner"

    def __init__(self, direction, r_grid, m_max, values, params=None):
        super().__init__(direction, r_grid, values)
        if self.values.ndim != 2 or self.values.shape[1] % 2 == 0:
            raise StructuralError(
                f"values must be (n_r, n_m) with n_m odd, got shape {self.values.shape}"
            )
        self._check_origin()
        self.m_max = float(m_max)
        self.params = params

    def _check_origin(self):
        if np.any(self.values[0] != 0):
            raise StructuralError("a Borel-plane grid function must vanish at tau = 0")

    @classmethod
    def zeros(cls, direction, r_grid, m_max, n_m, params=None):
        return cls(direction, r_grid, m_max, np.zeros((len(r_grid), n_m), dtype=complex), params)

    @classmethod
    def from_function(cls, func, direction, r_grid, m_max, n_m, params=None):
        "``func(tau, m)`` broadcast over a (n_r + 1, 1) by (n_m,) mesh."
        r_grid = np.asarray(r_grid, dtype=float)
        tau = (r_grid * np.exp(1j * direction))[:, None]
        m = grid(m_max, n_m)[None, :]
        values = np.broadcast_to(func(tau, m), (r_grid.size, n_m))
        return cls(direction, r_grid, m_max, values, params)

    @property
    def n_m(self):
        return self.values.shape[1]

    @property
    def m(self):
        return grid(self.m_max, self.n_m)

    @property
    def weights(self):
        return trapezoid_weights(self.m_max, self.n_m)

    def with_values(self, values):
        return type(self)(self.direction, self.r_grid, self.m_max, values, self.params)

    def header(self, kappa=None):
        return {
            "direction": self.direction,
            "kind": self.kind,
            "m_max": self.m_max,
            "n_m": self.n_m,
            "n_r": int(self.r_grid.size),
            "params": self.params.to_mapping() if self.params is not None else None,
        }

    def rows(self):
        m = self.m
        for r, row in zip(self.r_grid, self.values):
            for mj, v in zip(m, row):
                yield (r, mj, v.real, v.imag)


class FixedPointResult:
    """
    The outcome of a Picard iteration: the grid solution, the number of
    iterations, the final residual norm, the contraction ratios and the
    norms of the successive iterates.
    """

    def __init__(self, solution, iterations, residual_norm, contraction_ratios, eps, norms=()):
        self.solution = solution
        self.iterations = int(iterations)
        self.residual_norm = float(residual_norm)
        self.contraction_ratios = tuple(float(x) for x in contraction_ratios)
        self.eps = complex(eps)
        self.norms = tuple(float(x) for x in norms)

    @property
    def kind(self):
        return self.solution.kind

    def header(self):
        header = self.solution.header()
        header.update({
            "eps": [self.eps.real, self.eps.imag],
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "contraction_ratios": list(self.contraction_ratios),
            "norms": list(self.norms),
        })
        return header

    def save(self, directory, mode="x"):
        with FileManager(directory, allowed_modes=("x", "w")) as manager:
            manager.write_json("header", "header.json", self.header(), mode=mode)
            manager.write_csv("values", "values.csv", ("r", "m", "re", "im"),
                              list(self.solution.rows()), mode=mode)
            return manager.artifacts

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        with open(directory / "header.json") as f:
            header = json.load(f)
        columns, rows = read_csv(directory / "values.csv")
        if columns != ["r", "m", "re", "im"]:
            raise StructuralError(f"unexpected solution columns {columns}")
        n_r, n_m = header["n_r"], header["n_m"]
        data = np.array([[float(x) for x in row] for row in rows])
        if data.shape != (n_r * n_m, 4):
            raise StructuralError(f"values.csv holds {data.shape[0]} rows, expected {n_r * n_m}")
        r_grid = data[::n_m, 0]
        values = (data[:, 2] + 1j * data[:, 3]).reshape(n_r, n_m)
        params = ScaleParams(**header["params"]) if header.get("params") else None
        grid_class = RayGrid2D
        if header.get("kind") == "outer":
            from .outer import OuterGrid2D  # outer imports this module

            grid_class = OuterGrid2D
        solution = grid_class(header["direction"], r_grid, header["m_max"], values, params)
        return cls(
            solution, header["iterations"], header["residual_norm"],
            header["contraction_ratios"], complex(*header["eps"]), header.get("norms", ()),
        )

    def __repr__(self):
        return (
            f"FixedPointResult(kind={self.kind!r}, eps={self.eps}, iterations={self.iterations}, "
            f"residual_norm={self.residual_norm:.3e})"
        )


def _log_weighted(values, log_weight):
    "log of max |values| * exp(log_weight), -inf for an all-zero grid."
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(values)) + log_weight
    top = float(np.max(logs))
    return top


def frequency_log_weight(m, beta, mu):
    m = np.abs(m)
    return mu * np.log1p(m) + beta * m


def fnorm(w, eps):
    """
    Grid sup of (1+|m|)^mu e^(beta|m|) (1 + x^(2 kappa))/x e^(-nu x^kappa) |w|
    with x = |tau| / |eps|^chi.

    The weight behaves like 1/x at the origin, where w vanishes; the r = 0
    node contributes the limit |w(r_1)| |eps|^chi / r_1.
    """
    p = w.params
    if p is None:
        raise StructuralError("fnorm needs the scale parameters of the grid")
    scale = abs(eps) ** float(p.chi)
    r = w.r_grid[1:]
    x = r / scale
    log_x = np.log(x)
    log_r = np.logaddexp(0.0, 2 * p.kappa * log_x) - log_x - p.nu * x ** p.kappa
    log_m = frequency_log_weight(w.m, p.beta, p.mu)
    top = _log_weighted(w.values[1:], log_r[:, None] + log_m[None, :])
    origin = _log_weighted(w.values[1] * scale / r[0], log_m)
    top = max(top, origin)
    if top == -math.inf:
        return 0.0
    if top > 700:
        return math.inf
    return math.exp(top)


def a_coeffs(delta, kappa):
    """
    Exact coefficients A_(delta, p), p = 1..delta-1, with

    T^(delta (kappa+1)) d^delta = (T^(kappa+1) d)^delta
        + sum_p A_(delta, p) T^(kappa (delta - p)) (T^(kappa+1) d)^p.

    Both sides send T^n to a polynomial in n times T^(n + delta kappa);
    evaluating at n = -kappa, -2 kappa, ... makes the system triangular.
    """
    if delta < 1 or kappa < 1:
        raise StructuralError(f"need delta >= 1 and kappa >= 1, got {delta}, {kappa}")

    def rising(n, count):
        return math.prod((n + j * kappa for j in range(count)), start=Fraction(1))

    def falling(n, count):
        return math.prod((n - j for j in range(count)), start=Fraction(1))

    coeffs = []
    for i in range(1, delta):
        n = Fraction(-i * kappa)
        rhs = falling(n, delta) - rising(n, delta)
        rhs -= sum(A * rising(n, p) for p, A in enumerate(coeffs, start=1))
        coeffs.append(rhs / rising(n, i))
    return coeffs


@functools.lru_cache(maxsize=8)
def laguerre_rule(n=LAGUERRE_NODES):
    x, w = special.roots_laguerre(n)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    x.setflags(write=False)
    log_w.setflags(write=False)
    return x, log_w


def root_free_span(forcing, theta=None):
    """
    The open range of directions around ``theta`` (default theta_F) reached
    without crossing the ray of a root of F2.
    """
    theta = forcing.thetaF if theta is None else float(theta)
    low, high = theta - math.pi, theta + math.pi
    for root in forcing.F2.roots():
        offset = (np.angle(root) - theta + math.pi) % (2 * math.pi) - math.pi
        if offset > 0:
            high = min(high, theta + offset)
        elif offset < 0:
            low = max(low, theta + offset)
    return low, high


def forcing_direction(forcing, k, delta=1e-3, theta=None):
    """
    Direction phi of the root-free span closest to -arg(k), along which
    int e^(-k u) F1/F2(u) du converges; DomainError when the decay
    cos(phi + arg k) stays below ``delta``.
    """
    k = complex(k)
    if k == 0:
        raise DomainError("the exponential rate vanishes")
    low, high = root_free_span(forcing, theta)
    margin = min(0.2, 0.1 * (high - low))
    centre = 0.5 * (low + high)
    target = centre + ((-np.angle(k) - centre + math.pi) % (2 * math.pi) - math.pi)
    phi = min(max(target, low + margin), high - margin)
    cosine = math.cos(phi + np.angle(k))
    if cosine < delta:
        raise DomainError(
            f"no root-free direction gives decay for rate {k}: cos = {cosine:.4f}"
        )
    return phi


def ray_laplace(forcing, k, n_max=0, delta=1e-3, theta=None, phi=None):
    """
    log of int_0^inf e^(-k u) F1/F2(u) u^n/n! du for n = 0..n_max, along
    ``phi`` or the direction chosen by ``forcing_direction``. Gauss-Laguerre
    in the decay variable x = Re(k e^(i phi)) r.
    """
    if phi is None:
        phi = forcing_direction(forcing, k, delta, theta)
    rate = complex(k) * np.exp(1j * phi)
    a, b = rate.real, rate.imag
    if a <= 0:
        raise DomainError(f"e^(-{k} u) does not decay along the direction {phi:.4f}")
    x, log_w = laguerre_rule()
    u = x / a * np.exp(1j * phi)
    base = np.exp(-1j * (b / a) * x) * forcing.ratio(u)
    n = np.arange(n_max + 1)
    log_x = np.log(x)
    powers = np.exp(log_w[None, :] + n[:, None] * log_x[None, :] - special.gammaln(n + 1)[:, None])
    J = powers @ base
    with np.errstate(divide="ignore"):
        return np.log(J.astype(complex)) + 1j * phi * (n + 1) - (n + 1) * math.log(a)


def forcing_moments(forcing, n_max, theta=None):
    """
    log I_n, n = 0..n_max, I_n = int_{L_theta} e^(-K_F u) F1/F2(u) u^n/n! du.
    """
    return ray_laplace(forcing, forcing.KF, n_max, theta=theta)


def _sum_log_series(log_terms):
    """
    Sum exp(log_terms) over axis 0 with a max shift. Returns the log of the
    sum and the relative size of the last term.
    """
    shift = np.max(log_terms.real, axis=0)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    scaled = np.exp(log_terms - shift[None, ...])
    total = scaled.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.abs(scaled[-1]) / np.abs(total)
    with np.errstate(divide="ignore"):
        return np.log(total) + shift, np.nan_to_num(tail, nan=0.0)


def forcing_psi(eps, spec, p, shape):
    """
    Borel image Psi(tau, m, eps) of the forcing term on the grid of
    ``shape`` (any RayGrid2D):

    eps^nF C_F(m) sum_n I_n (-tau/eps^(gamma + alpha))^n / Gamma(n/kappa).

    Raises
    ------
    DomainError
        if the series overflows or has not converged on the grid.
    """
    values = np.zeros(shape.values.shape, dtype=complex)
    forcing = spec.forcing
    CF = forcing.CF(shape.m)
    if forcing.F1.is_zero or not np.any(CF):
        return shape.with_values(values)
    tau = shape.tau[1:]
    z = tau / (eps_power(eps, p.gamma) * eps_power(eps, p.alpha))
    size = float(np.max(np.abs(z)))
    rate = size / (forcing.KF * max(math.cos(forcing.thetaF), 1e-3))
    n_max = min(MAX_TERMS, max(40, int(2 * p.kappa * rate ** p.kappa) + 60))
    log_I = forcing_moments(forcing, n_max)[1:]
    n = np.arange(1, n_max + 1)
    log_terms = (
        log_I[:, None]
        + n[:, None] * np.log(-z)[None, :]
        - special.gammaln(n / p.kappa)[:, None]
    )
    log_sum, tail = _sum_log_series(log_terms)
    if np.any(log_sum.real > 700):
        raise DomainError(
            f"the forcing series overflows at |tau/eps^(gamma+alpha)| = {size:.3g}"
        )
    if np.any(tail > SERIES_TOLERANCE):
        raise DomainError(
            f"the forcing series has not converged after {n_max} terms "
            f"at |tau/eps^(gamma+alpha)| = {size:.3g}"
        )
    series = np.exp(log_sum)
    values[1:] = eps_power(eps, forcing.nF) * series[:, None] * CF[None, :]
    return shape.with_values(values)


class InnerProblem:
    """
    The map H_eps on one ray: coefficients and symbols are evaluated once,
    ``apply`` maps a value array to its image.
    """

    def __init__(self, eps, spec, p, direction, r_grid, m_max, n_m, adm=None,
                 quad_nodes=DEFAULT_QUAD_NODES):
        if adm is not None and not adm.passed:
            raise AdmissibilityError(
                f"direction {adm.direction} failed the admissibility check", witness=adm.worst_tau
            )
        self.eps = complex(eps)
        self.spec = spec
        self.p = p
        self.quad_nodes = quad_nodes
        self.shape = RayGrid2D.zeros(direction, r_grid, m_max, n_m, p)
        m = self.shape.m
        tau = self.shape.tau
        self.P = eval_Pm(tau[:, None], m[None, :], spec, p)
        small = np.abs(self.P) < P_FLOOR
        if np.any(small):
            r_index, m_index = np.argwhere(small)[0]
            raise AdmissibilityError(
                f"|P_m(tau)| falls below {P_FLOOR} at tau={tau[r_index]}, m={m[m_index]}",
                witness=complex(tau[r_index]),
            )
        self.linear = self._linear_terms(m)
        self.nonlinear = [
            (-cl * eps_power(eps, Fraction(mul - 2 * spec.m0) - p.alpha * hl), Fraction(hl, p.kappa))
            for cl, mul, hl in zip(spec.c, spec.mu_exp, spec.h_exp)
            if cl != 0
        ]
        self.q1 = symbol(spec.Q1poly, m)
        self.q2 = symbol(spec.Q2poly, m)
        self.weights = self.shape.weights
        self.forcing = self._forcing_terms(m, tau)
        self.source = self.forcing / self.P
        self.source[0] = 0

    def _linear_terms(self, m):
        spec, p, eps = self.spec, self.p, self.eps
        kappa = p.kappa
        Q = symbol(spec.Qpoly, m)
        terms = []
        for al, ml, kl in zip(spec.a[1:], spec.m_exp[1:], spec.k_exp):
            coeff = -al * eps_power(eps, ml - spec.m0 - p.alpha * kl)
            terms.append((coeff * Q, Fraction(kl, kappa), 0))
        RD = symbol(spec.RD, m)
        for order, A in enumerate(a_coeffs(spec.delta_D, kappa), start=1):
            terms.append((float(A) * RD, Fraction(spec.delta_D - order), order))
        for l in range(spec.D - 1):
            Rl = symbol(spec.Rpoly[l], m)
            delta_l = spec.delta_exp[l]
            dlk = p.dlk[l]
            coeff = eps_power(eps, spec.Delta[l] + p.alpha * (delta_l - spec.d_exp[l]) - spec.m0) * Rl
            terms.append((coeff, Fraction(dlk, kappa), delta_l))
            for order, A in enumerate(a_coeffs(delta_l, kappa), start=1):
                terms.append((float(A) * coeff, Fraction(dlk + kappa * (delta_l - order), kappa), order))
        return [term for term in terms if np.any(term[0])]

    def _forcing_terms(self, m, tau):
        spec, p, eps = self.spec, self.p, self.eps
        total = forcing_psi(eps, spec, p, self.shape).values.copy()
        for Bj, nj, bj in zip(spec.Bj, spec.n_exp, spec.b_exp):
            coeff = eps_power(eps, nj - p.alpha * bj) / special.gamma(bj / p.kappa)
            total += coeff * (tau ** bj)[:, None] * Bj(m)[None, :]
        return total

    def pair(self, f, g):
        "Inner m-convolution of the nonlinear term, (2 pi)^(-1/2) times the star product."
        return star_arrays(f, g, self.q1, self.q2, self.weights) / math.sqrt(2 * math.pi)

    def apply(self, values):
        values = np.asarray(values, dtype=complex)
        shape = self.shape
        kappa = self.p.kappa
        r_out = shape.r_grid[1:]
        total = np.zeros_like(values)
        if np.any(values) and (self.linear or self.nonlinear):
            slope = SlopeInterpolant(shape.r_grid, values, shape.direction)
            for coeff, a, p in self.linear:
                kernel = fractional_kernel(slope, r_out, shape.direction, a, p, kappa, self.quad_nodes)
                total[1:] += coeff[None, :] * kernel
            if self.nonlinear:
                V = np.zeros_like(values)
                V[1:] = cauchy_kernel(slope, slope, r_out, shape.direction, kappa, self.pair, self.quad_nodes)
                V_slope = SlopeInterpolant(shape.r_grid, V, shape.direction)
                for coeff, a in self.nonlinear:
                    total[1:] += coeff * fractional_kernel(
                        V_slope, r_out, shape.direction, a, 0, kappa, self.quad_nodes
                    )
        result = self.source + total / self.P
        result[0] = 0
        return result


def apply_H(w, eps, spec, p, adm=None, quad_nodes=DEFAULT_QUAD_NODES):
    "One application of H_eps to the grid function ``w``."
    problem = InnerProblem(eps, spec, p, w.direction, w.r_grid, w.m_max, w.n_m, adm, quad_nodes)
    return w.with_values(problem.apply(w.values))


def fixed_point_iteration(apply, norm, initial, tol, max_iter, label="picard"):
    """
    Picard iteration w_(k+1) = apply(w_k) from ``initial``.

    Stops once norm(w_(k+1) - w_k) < tol max(1, norm(w_k)) and the plain
    sup of the step is below tol times the sup of w_(k+1).

    Returns
    -------
    values, iterations, ratios, norms
        ``iterations`` counts the maps applied before the final, negligible
        step, so a map with constant image reports 1.
    """
    current = np.asarray(initial, dtype=complex)
    previous_step = None
    ratios, norms = [], []
    streak = 0
    for k in range(1, max_iter + 1):
        new = apply(current)
        difference = new - current
        step = norm(difference)
        size = norm(new)
        norms.append(size)
        if previous_step:
            ratio = step / previous_step
            ratios.append(ratio)
            log.debug("%s iteration %s: step %.3e, ratio %.4f", label, k, step, ratio)
            if ratio >= 1 and step > 1e-13 * max(size, 1e-300):
                streak += 1
                if streak >= DIVERGENCE_STREAK:
                    raise DivergenceError(
                        f"{label}: contraction ratio at or above 1 for {streak} iterations "
                        f"(last {ratio:.3f}); reduce eps0 or enlarge r_QRD"
                    )
            else:
                streak = 0
        sup_step = float(np.max(np.abs(difference)))
        sup_new = float(np.max(np.abs(new)))
        if step < tol * max(1.0, norm(current)) and sup_step <= tol * sup_new:
            log.info("%s converged after %s iterations", label, k - 1)
            return new, k - 1, ratios, norms
        if step > 0:
            previous_step = step
        current = new
    raise NonConvergenceError(f"{label}: no convergence within {max_iter} iterations")


def laplace_radius(T_abs, kappa, delta1=0.1, growth=0.0):
    """
    Radius past which exp(growth r^kappa - delta1 (r/|T|)^kappa) drops below
    exp(-LAPLACE_DECAY).

    ``delta1`` is the cosine of the ray against T; ``growth`` the rate of
    exp(growth r^kappa) that the Borel-plane function may reach.
    """
    rate = delta1 / float(T_abs) ** kappa - growth
    if rate <= 0:
        raise DomainError(
            f"the damping {delta1}/|T|^{kappa} does not beat the growth rate {growth} for |T| = {T_abs}"
        )
    return (LAPLACE_DECAY / rate) ** (1.0 / kappa)


def inner_extent(T, direction, eps, p, R_min=None):
    """
    End of a ray of ``direction`` long enough for the m_kappa-Laplace
    transform at ``T``: at least ``R_min`` (default rho), and past the point
    where the damping overtakes the exp(nu (r/|eps|^chi)^kappa) growth the
    weighted norm allows.
    """
    kappa = p.kappa
    cosine = math.cos(kappa * (direction - np.angle(complex(T))))
    if cosine < MIN_COSINE:
        raise SectorError(f"cos(kappa*(d - arg T)) = {cosine:.4f} gives no decay along {direction}")
    growth = p.nu / abs(eps) ** float(p.chi * kappa)
    radius = laplace_radius(abs(complex(T)), kappa, cosine, growth)
    return max(p.rho if R_min is None else R_min, radius)


def solve_inner(eps, spec, p, adm=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                direction=None, R=None, n_r=DEFAULT_N_R, n_m=DEFAULT_N_M, m_max=None,
                quad_nodes=DEFAULT_QUAD_NODES, start=None, T=None):
    """
    Fixed point of H_eps on the ray of ``direction`` (default the direction
    of ``adm``), by Picard iteration from 0 or from ``start``.

    Parameters
    ----------
    R : float
        End of the radial grid. Defaults to the disc radius rho of ``p``, or
        to ``inner_extent`` when the Laplace point ``T`` is given.
    m_max, n_m : float, int
        The frequency grid, by default 20/beta and 2049 nodes.

    Returns
    -------
    result : FixedPointResult
    """
    if direction is None:
        if adm is None:
            raise StructuralError("solve_inner needs a direction or an admissibility report")
        direction = adm.direction
    m_max = default_m_max(p.beta) if m_max is None else m_max
    if R is None:
        R = p.rho if T is None else inner_extent(T, direction, eps, p)
    r_grid = ray_grid(R, n_r)
    problem = InnerProblem(eps, spec, p, direction, r_grid, m_max, n_m, adm, quad_nodes)

    def norm(values):
        return fnorm(problem.shape.with_values(values), eps)

    initial = np.zeros(problem.shape.values.shape, dtype=complex) if start is None else start.values
    values, iterations, ratios, norms = fixed_point_iteration(
        problem.apply, norm, initial, tol, max_iter, label="solve_inner"
    )
    solution = problem.shape.with_values(values)
    residual = norm(problem.apply(values) - values)
    return FixedPointResult(solution, iterations, residual, ratios, eps, norms)


def inner_transform(t, eps, fp, p, delta1=1e-3):
    """
    eps^(-m0) times the m_kappa-Laplace transform of omega at T = eps^alpha t,
    one value per m-node: the Fourier image of u(t, ., eps).
    """
    T = eps_power(eps, p.alpha) * complex(t)
    hat = mk_laplace(fp.solution, T, p.kappa, delta1)
    return eps_power(eps, -p.m0) * hat


def inner_solution(t, z, eps, fp, p, delta1=1e-3):
    """
    u(t, z, eps) = eps^(-m0) (kappa / sqrt(2 pi)) int int omega(u, m)
    exp(-(u / (eps^alpha t))^kappa) e^(izm) du/u dm.
    """
    hat = inner_transform(t, eps, fp, p, delta1)
    grid_ = fp.solution
    result = inverse_fourier_arrays(hat, grid_.m, grid_.weights, z)
    if np.ndim(result) == 0:
        return complex(result)
    return result


def inner_pde_residual(t, z, eps, fp, spec, p, delta1=1e-3):
    "Relative residual of the original equation for the inner solution at (t, z)."
    from .outer import pde_residual  # outer imports this module

    def field(point):
        return inner_transform(point, eps, fp, p, delta1)

    return pde_residual(field, fp.solution.m, fp.solution.weights, t, z, eps, spec)


def inner_rational_residual(t, z, eps, fp, spec, p, delta1=1e-3):
    "Relative residual of the rational-coefficient equation for the inner solution at (t, z)."
    from .outer import rational_pde_residual  # outer imports this module

    def field(point):
        return inner_transform(point, eps, fp, p, delta1)

    return rational_pde_residual(field, fp.solution.m, fp.solution.weights, t, z, eps, spec)

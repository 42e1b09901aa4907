"""
Outer solutions: the fixed point W(tau, m, eps) of the map G_eps in the
classical Laplace plane, the forcing pieces Upsilon and F, and the synthesis
of v(t, z, eps) by classical Laplace and inverse Fourier transforms.
"""
import logging
import math

import numpy as np
from scipy import integrate

from .errors import DomainError, StructuralError
from .fourier import default_m_max, grid, inverse_fourier_arrays, star_arrays, symbol, trapezoid_weights
from .inner import (
    DEFAULT_MAX_ITER,
    DEFAULT_N_M,
    DEFAULT_N_R,
    DEFAULT_TOL,
    FixedPointResult,
    RayGrid2D,
    frequency_log_weight,
    fixed_point_iteration,
    forcing_direction,
    forcing_moments,
    ray_laplace,
)
from .model import eps_power
from .transforms import (
    DEFAULT_QUAD_NODES,
    ValueInterpolant,
    classical_laplace,
    jacobi_rule,
    legendre_rule,
    ray_grid,
)

log = logging.getLogger("turnpoint")

# number of m-nodes used to synthesize c_F(z) and b_j(z)
LINE_POINTS = 2049
FD_STEP = 1e-3

_stencils = {
    0: {0: 1.0},
    1: {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12},
    2: {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


class OuterGrid2D(RayGrid2D):
    """
    Samples of W(r e^{iu}, m) on a radial grid times the m-grid. Unlike the
    inner grids, the r = 0 row may be nonzero.
    """

    kind = "outer"

    def _check_origin(self):
        pass


def enorm(w, eps):
    """
    Grid sup of (1+|m|)^mu e^(beta|m|) (1 + x^2) e^(-nu x) |w| with
    x = |tau| / |eps|^Gamma.
    """
    p = w.params
    if p is None:
        raise StructuralError("enorm needs the scale parameters of the grid")
    x = w.r_grid / abs(eps) ** float(p.Gamma)
    log_r = np.log1p(x ** 2) - p.nu * x
    log_m = frequency_log_weight(w.m, p.beta, p.mu)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(w.values)) + log_r[:, None] + log_m[None, :]
    top = float(np.max(logs))
    if top == -math.inf:
        return 0.0
    if top > 700:
        return math.inf
    return math.exp(top)


def forcing_constant(spec, theta=None):
    "c = int_{L_theta} e^(-K_F u) F1/F2(u) du, theta defaulting to theta_F."
    return complex(np.exp(forcing_moments(spec.forcing, 0, theta=theta)[0]))


def omega_F(tau, m, spec):
    "C_F(m) e^(-K_F tau) F1/F2(tau); ``tau`` and ``m`` broadcast."
    forcing = spec.forcing
    tau = np.asarray(tau, dtype=complex)
    return forcing.CF(m) * np.exp(-forcing.KF * tau) * forcing.ratio(tau)


def _upsilon(tau, m, eps, spec, p, shift=0, nodes=DEFAULT_QUAD_NODES):
    """
    Upsilon(tau, m) / tau^shift, with the powers of tau combined before
    evaluation so that shift <= d_D - 1 stays regular at tau = 0.
    """
    d = spec.d_D
    if shift > d - 1:
        raise StructuralError(f"Upsilon/tau^{shift} is singular at 0 for d_D = {d}")
    tau = np.asarray(tau, dtype=complex)
    m = np.asarray(m, dtype=float)
    x, w = jacobi_rule(nodes, float(d - 1), 0.0)
    samples = omega_F(np.multiply.outer(tau, x)[..., None], m, spec)
    first = np.tensordot(samples, w, axes=([-2], [0]))
    tail = spec.forcing.CF(m) * forcing_constant(spec)
    coeff = eps_power(eps, spec.forcing.nF - p.gamma * d) / math.factorial(d - 1)
    return coeff * (
        (tau ** (d - shift))[:, None] * first - (tau ** (d - 1 - shift))[:, None] * tail[None, :]
    )


def forcing_upsilon(eps, spec, p, shape, nodes=DEFAULT_QUAD_NODES):
    """
    Upsilon(tau, m, eps) on the grid of ``shape``:

    eps^(nF - gamma d_D)/(d_D - 1)! (int_0^tau (tau-s)^(d_D-1) omega_F(s, m) ds
                                      - tau^(d_D-1) int_{L_theta_F} omega_F(u, m) du)
    """
    if not np.any(spec.forcing.CF(shape.m)) or spec.forcing.F1.is_zero:
        return shape.with_values(np.zeros(shape.values.shape, dtype=complex))
    return shape.with_values(_upsilon(shape.tau, shape.m, eps, spec, p, 0, nodes))


def _term_power(n, p, delta_D, what):
    power = n + p + 1 - delta_D
    if n < 0:
        raise StructuralError(f"{what}: d_D is too small for this term (order {n})")
    if power < 0:
        raise StructuralError(f"{what}: the term is singular at tau = 0 (power {power})")
    return power


class OuterProblem:
    """
    The map G_eps on one ray. Each term is a Jacobi-weighted integral
    J_(n, p)[w](tau) = tau^(n+p+1) int_0^1 (1-x)^n x^p w(x tau) dx, already
    divided by (-tau)^delta_D R_D(im).
    """

    def __init__(self, eps, spec, p, direction, r_grid, m_max, n_m, quad_nodes=DEFAULT_QUAD_NODES):
        self.eps = complex(eps)
        self.spec = spec
        self.p = p
        self.quad_nodes = quad_nodes
        self.shape = OuterGrid2D.zeros(direction, r_grid, m_max, n_m, p)
        m = self.shape.m
        tau = self.shape.tau
        d, delta_D = spec.d_D, spec.delta_D
        self.denominator = (-1) ** delta_D * symbol(spec.RD, m)
        Q = symbol(spec.Qpoly, m)
        gamma, gamma0 = p.gamma, p.gamma0

        linear = []
        for al, ml, kl in zip(spec.a[1:], spec.m_exp[1:], spec.k_exp):
            n = d - kl - 1
            power = _term_power(n, 0, delta_D, f"a term k={kl}")
            coeff = al * eps_power(eps, ml + gamma0 - gamma * (d - kl)) / math.factorial(n)
            linear.append((coeff * Q, n, 0, power))
        n = d - 1
        power = _term_power(n, 0, delta_D, "a_0 term")
        coeff = spec.a[0] * eps_power(eps, spec.m0 + gamma0 - gamma * d) / math.factorial(n)
        linear.append((coeff * Q, n, 0, power))
        for l in range(spec.D - 1):
            dl, delta_l = spec.d_exp[l], spec.delta_exp[l]
            n = d - dl - 1
            power = _term_power(n, delta_l, delta_D, f"R_{l + 1} term")
            coeff = -eps_power(eps, spec.Delta[l] + gamma0 - gamma * (d - dl + delta_l))
            coeff *= (-1) ** delta_l / math.factorial(n)
            linear.append((coeff * symbol(spec.Rpoly[l], m), n, delta_l, power))
        self.linear = [
            (coeff / self.denominator, n, pp, power)
            for coeff, n, pp, power in linear if np.any(coeff)
        ]

        self.nonlinear = []
        for cl, mul, hl in zip(spec.c, spec.mu_exp, spec.h_exp):
            if cl == 0:
                continue
            n = d - hl - 1
            power = _term_power(n, 1, delta_D, f"c term h={hl}")
            coeff = cl * eps_power(eps, mul + 2 * gamma0 - gamma * (d - hl)) / math.factorial(n)
            self.nonlinear.append((coeff / self.denominator, n, power))
        self.q1 = symbol(spec.Q1poly, m)
        self.q2 = symbol(spec.Q2poly, m)
        self.weights = self.shape.weights
        self.source = self._sources(m, tau) / self.denominator[None, :]

    def _sources(self, m, tau):
        spec, p, eps = self.spec, self.p, self.eps
        d, delta_D = spec.d_D, spec.delta_D
        total = np.zeros(self.shape.values.shape, dtype=complex)
        for Bj, nj, bj in zip(spec.Bj, spec.n_exp, spec.b_exp):
            n = d - bj - 1
            if n - delta_D < 0:
                raise StructuralError(f"B term b={bj}: the term is singular at tau = 0")
            coeff = eps_power(eps, nj - p.gamma * (d - bj)) / math.factorial(n)
            total -= coeff * (tau ** (n - delta_D))[:, None] * Bj(m)[None, :]
        if np.any(spec.forcing.CF(m)) and not spec.forcing.F1.is_zero:
            total -= _upsilon(tau, m, eps, spec, p, delta_D, self.quad_nodes)
        return total

    def pair(self, f, g):
        return star_arrays(f, g, self.q1, self.q2, self.weights) / math.sqrt(2 * math.pi)

    def _jacobi(self, interp, n, p):
        r = self.shape.r_grid
        x, w = jacobi_rule(self.quad_nodes, float(n), float(p))
        samples = interp(np.multiply.outer(r, x))
        return np.tensordot(w, samples, axes=([0], [1]))

    def apply(self, values):
        values = np.asarray(values, dtype=complex)
        tau = self.shape.tau
        total = self.source.copy()
        if not np.any(values):
            return total
        interp = ValueInterpolant(self.shape.r_grid, values)
        for coeff, n, p, power in self.linear:
            total += coeff[None, :] * (tau ** power)[:, None] * self._jacobi(interp, n, p)
        if self.nonlinear:
            r = self.shape.r_grid
            y, wy = legendre_rule(self.quad_nodes)
            pairs = self.pair(interp(np.multiply.outer(r, 1.0 - y)), interp(np.multiply.outer(r, y)))
            convolution = ValueInterpolant(r, np.tensordot(wy, pairs, axes=([0], [1])))
            for coeff, n, power in self.nonlinear:
                total += coeff[None, :] * (tau ** power)[:, None] * self._jacobi(convolution, n, 1)
        return total


def apply_G(w, eps, spec, p, quad_nodes=DEFAULT_QUAD_NODES):
    "One application of G_eps to the grid function ``w``."
    problem = OuterProblem(eps, spec, p, w.direction, w.r_grid, w.m_max, w.n_m, quad_nodes)
    return w.with_values(problem.apply(w.values))


def laplace_extent(t_abs, eps, p, delta1=0.1):
    """
    Radius past which exp(-|t/eps^gamma| r delta1) drops below 1e-16 for
    every |t| >= ``t_abs``.
    """
    return 40.0 * abs(eps) ** float(p.gamma) / (float(t_abs) * delta1)


def solve_outer(eps, spec, p, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, direction=0.0, R=None,
                n_r=DEFAULT_N_R, n_m=DEFAULT_N_M, m_max=None, quad_nodes=DEFAULT_QUAD_NODES,
                start=None, t_min=1.0, delta1=0.1):
    """
    Fixed point of G_eps on the ray of ``direction`` by Picard iteration,
    measured in ``enorm``. The grid reaches ``R``, by default far enough for
    Laplace transforms at |t| >= ``t_min``.

    Returns
    -------
    result : FixedPointResult
        tagged "outer".
    """
    m_max = default_m_max(p.beta) if m_max is None else m_max
    R = laplace_extent(t_min, eps, p, delta1) if R is None else R
    problem = OuterProblem(eps, spec, p, direction, ray_grid(R, n_r), m_max, n_m, quad_nodes)

    def norm(values):
        return enorm(problem.shape.with_values(values), eps)

    initial = np.zeros(problem.shape.values.shape, dtype=complex) if start is None else start.values
    values, iterations, ratios, norms = fixed_point_iteration(
        problem.apply, norm, initial, tol, max_iter, label="solve_outer"
    )
    residual = norm(problem.apply(values) - values)
    return FixedPointResult(problem.shape.with_values(values), iterations, residual, ratios, eps, norms)


def outer_transform(t, eps, fp, p, delta1=0.1):
    """
    eps^gamma0 int_{L_u} W(u, m) exp(-(t/eps^gamma) u) du, one value per
    m-node: the Fourier image of v(t, ., eps).

    Raises
    ------
    DomainError
        if |t| <= nu/delta1 |eps|^(gamma - Gamma).
    """
    t = complex(t)
    radius = p.nu / delta1 * abs(eps) ** float(p.gamma - p.Gamma)
    if abs(t) <= radius:
        raise DomainError(f"|t| = {abs(t):.4g} lies inside the inner radius {radius:.4g}")
    hat = classical_laplace(fp.solution, t / eps_power(eps, p.gamma), delta1)
    return eps_power(eps, p.gamma0) * hat


def outer_solution(t, z, eps, fp, p, delta1=0.1):
    """
    v(t, z, eps) = eps^gamma0 / sqrt(2 pi) int int W(u, m) e^(-(t/eps^gamma) u)
    e^(izm) du dm.
    """
    hat = outer_transform(t, eps, fp, p, delta1)
    result = inverse_fourier_arrays(hat, fp.solution.m, fp.solution.weights, z)
    if np.ndim(result) == 0:
        return complex(result)
    return result


def _c_F(spec, z):
    forcing = spec.forcing
    m_max = default_m_max(forcing.CF.beta)
    return inverse_fourier_arrays(
        forcing.CF(grid(m_max, LINE_POINTS)), grid(m_max, LINE_POINTS),
        trapezoid_weights(m_max, LINE_POINTS), z,
    )


def forcing_regime(t, eps, spec, delta1_0=None, delta1_inf=0.1, delta2_inf=0.1):
    """
    "disc" when |t| < (K_F cos theta_F - delta1_0)|eps|^gamma, "sector" when
    |t| > (K_F + delta2_inf)/delta1_inf |eps|^gamma; DomainError otherwise.
    """
    forcing = spec.forcing
    scale = abs(eps) ** float(forcing.gamma)
    reach = forcing.KF * math.cos(forcing.thetaF)
    delta1_0 = 0.1 * reach if delta1_0 is None else delta1_0
    if abs(t) < (reach - delta1_0) * scale:
        return "disc"
    if abs(t) > (forcing.KF + delta2_inf) / delta1_inf * scale:
        return "sector"
    raise DomainError(
        f"|t| = {abs(t):.4g} lies between the small disc and the sector of the forcing term"
    )


def forcing_F_direct(t, z, eps, spec, thetaF=None, delta1_0=None, delta1_inf=0.1, delta2_inf=0.1):
    """
    F(t, z, eps) = eps^nF / sqrt(2 pi) int int omega_F(u, m) (e^(-t u/eps^gamma) - 1) e^(izm) du dm.

    The m-integral gives c_F(z); the u-integral is taken along the root-free
    direction closest to steepest descent, which is the path deformation
    to theta_F^Delta in the sector regime.
    """
    t = complex(t)
    forcing = spec.forcing
    if forcing.F1.is_zero or forcing.CF.amplitude == 0 or t == 0:
        return 0j if np.ndim(z) == 0 else np.zeros(np.shape(z), dtype=complex)
    regime = forcing_regime(t, eps, spec, delta1_0, delta1_inf, delta2_inf)
    s = t / eps_power(eps, forcing.gamma)
    if regime == "disc":
        phi = None
    else:
        phi = forcing_direction(forcing, s, delta1_inf, thetaF)
    near = np.exp(ray_laplace(forcing, forcing.KF + s, theta=thetaF, phi=phi)[0])
    constant = forcing_constant(spec, thetaF)
    return eps_power(eps, forcing.nF) * _c_F(spec, z) * (near - constant)


def fd_derivatives(func, t, order, step=FD_STEP):
    """
    Derivatives 0..order of ``func`` at ``t`` from the five samples
    t + k h, |k| <= 2, with h = step * t.

    Raises StructuralError beyond order 4.
    """
    if order > 4:
        raise StructuralError(f"finite differences go up to order 4, got {order}")
    t = complex(t)
    h = step * t if t != 0 else step
    samples = {k: np.asarray(func(t + k * h)) for k in range(-2, 3)}
    out = []
    for j in range(order + 1):
        stencil = _stencils[j]
        out.append(sum(c * samples[k] for k, c in stencil.items()) / h ** j)
    return out


def ode_residual_F(t, z, eps, spec, **regime):
    """
    Relative residual of F2(-eps^gamma d/dt) F = eps^nF c_F(z)
    (sum_k F1_k k!/(K_F + t/eps^gamma)^(k+1) - F2(0) c).
    """
    forcing = spec.forcing
    scale = eps_power(eps, forcing.gamma)
    coeffs = forcing.F2.coeffs
    derivatives = fd_derivatives(
        lambda point: forcing_F_direct(point, z, eps, spec, **regime), t, len(coeffs) - 1
    )
    terms = [c * (-scale) ** j * derivatives[j] for j, c in enumerate(coeffs)]
    lhs = sum(terms)
    s = complex(t) / scale
    rational = sum(
        c * math.factorial(k) / (forcing.KF + s) ** (k + 1) for k, c in enumerate(forcing.F1.coeffs)
    )
    rhs = eps_power(eps, forcing.nF) * _c_F(spec, z) * (rational - coeffs[0] * forcing_constant(spec))
    size = sum(abs(term) for term in terms) + abs(rhs)
    if size == 0:
        return 0.0
    return float(abs(lhs - rhs) / size)


def forcing_F_bound(t, z, eps, spec, beta_prime=None, delta1_0=None, delta1_inf=0.1, delta2_inf=0.1):
    """
    Right side of the a priori bound on |F(t, z, eps)|,

    |eps|^nF C ||C_F|| / sqrt(2 pi) int (1+|m|)^(-mu) e^(-(beta - beta')|m|) dm
        * (1/delta + 1/(K_F cos theta_F)),

    where C bounds |F1/F2| on L_theta_F and delta is delta1_0 in the disc
    regime, delta2_inf in the sector regime.
    """
    forcing = spec.forcing
    beta, mu = forcing.CF.beta, forcing.CF.mu
    beta_prime = 0.5 * beta if beta_prime is None else beta_prime
    if abs(np.imag(z)) >= beta_prime:
        raise DomainError(f"|Im z| = {abs(np.imag(z))} must stay below beta' = {beta_prime}")
    reach = forcing.KF * math.cos(forcing.thetaF)
    delta1_0 = 0.1 * reach if delta1_0 is None else delta1_0
    regime = forcing_regime(t, eps, spec, delta1_0, delta1_inf, delta2_inf)
    r = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 4000)])
    C = float(np.max(np.abs(forcing.ratio(r * np.exp(1j * forcing.thetaF)))))
    m_integral = 2 * integrate.quad(lambda m: (1 + m) ** (-mu) * math.exp(-(beta - beta_prime) * m),
                                    0, math.inf)[0]
    delta = delta1_0 if regime == "disc" else delta2_inf
    return (
        abs(eps) ** forcing.nF * C * forcing.CF.norm() / math.sqrt(2 * math.pi) * m_integral
        * (1.0 / delta + 1.0 / reach)
    )


def _equation_terms(field, m, weights, t, z, eps, spec):
    """
    The terms of the perturbed equation at (t, z) other than the forcing,
    signed so that they sum to F(t, z, eps) for an exact solution; shape
    (n_terms, len(z)).
    """
    t = complex(t)
    eps = complex(eps)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    order = max(spec.delta_exp)
    derivatives = fd_derivatives(field, t, order)
    u_hat = derivatives[0]

    def synth(values):
        return inverse_fourier_arrays(values, m, weights, z)

    P = spec.a[0] * eps ** spec.m0 + sum(
        al * eps ** ml * t ** kl for al, ml, kl in zip(spec.a[1:], spec.m_exp[1:], spec.k_exp)
    )
    terms = [P * synth(symbol(spec.Qpoly, m) * u_hat)]
    c_sum = sum(cl * eps ** mul * t ** hl for cl, mul, hl in zip(spec.c, spec.mu_exp, spec.h_exp))
    terms.append(c_sum * synth(symbol(spec.Q1poly, m) * u_hat) * synth(symbol(spec.Q2poly, m) * u_hat))
    terms.extend(-synth(Bj(m)) * eps ** nj * t ** bj for Bj, nj, bj in zip(spec.Bj, spec.n_exp, spec.b_exp))
    terms.extend(
        -eps ** Dl * t ** dl * synth(symbol(Rl, m) * derivatives[deltal])
        for Dl, dl, deltal, Rl in zip(spec.Delta, spec.d_exp, spec.delta_exp, spec.Rpoly)
    )
    return np.array(terms)


def pde_residual(field, m, weights, t, z, eps, spec):
    """
    Relative residual of the perturbed equation at (t, z) for a solution
    given by its Fourier image: ``field(t)`` returns u_hat(t, m) on the
    nodes ``m``. Symbols act in m, derivatives in t are finite differences.
    """
    terms = _equation_terms(field, m, weights, t, z, eps, spec)
    forcing = forcing_F_direct(t, np.atleast_1d(z), eps, spec)
    size = np.abs(terms).sum(axis=0) + np.abs(forcing)
    if not np.any(size):
        return 0.0
    return float(np.max(np.abs(terms.sum(axis=0) - forcing) / size))


def rational_pde_residual(field, m, weights, t, z, eps, spec):
    """
    Relative residual of the equation with rational coefficients in (t, eps)
    obtained by applying F2(-eps^gamma d/dt) to every term. Its right side is

    eps^nF c_F(z) (sum_k F1_k k!/(K_F + t/eps^gamma)^(k+1) - F2(0) c),

    so it holds for the same solutions as the perturbed equation.
    """
    forcing = spec.forcing
    scale = eps_power(eps, forcing.gamma)
    coeffs = forcing.F2.coeffs
    derivatives = fd_derivatives(
        lambda point: _equation_terms(field, m, weights, point, z, eps, spec), t, len(coeffs) - 1
    )
    applied = sum(c * (-scale) ** j * derivatives[j] for j, c in enumerate(coeffs))
    s = complex(t) / scale
    rational = sum(
        c * math.factorial(k) / (forcing.KF + s) ** (k + 1) for k, c in enumerate(forcing.F1.coeffs)
    )
    rhs = np.zeros(applied.shape[1:], dtype=complex)
    if not (forcing.F1.is_zero or forcing.CF.amplitude == 0):
        c_F = _c_F(spec, np.atleast_1d(z))
        rhs = eps_power(eps, forcing.nF) * c_F * (rational - coeffs[0] * forcing_constant(spec))
    size = np.abs(applied).sum(axis=0) + np.abs(rhs)
    if not np.any(size):
        return 0.0
    return float(np.max(np.abs(applied.sum(axis=0) - rhs) / size))


def outer_pde_residual(t, z, eps, fp, spec, p, delta1=0.1):
    "Relative residual of the original equation for the outer solution at (t, z)."

    def field(point):
        return outer_transform(point, eps, fp, p, delta1)

    return pde_residual(field, fp.solution.m, fp.solution.weights, t, z, eps, spec)


def outer_rational_residual(t, z, eps, fp, spec, p, delta1=0.1):
    "Relative residual of the rational-coefficient equation for the outer solution at (t, z)."

    def field(point):
        return outer_transform(point, eps, fp, p, delta1)

    return rational_pde_residual(field, fp.solution.m, fp.solution.weights, t, z, eps, spec)

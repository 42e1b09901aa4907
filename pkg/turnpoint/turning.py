"""
Turning points: roots of P(t, eps) and their merging rate, the Borel-plane
principal symbol P_m(tau), its roots q_l(m) and the constants bounding it
from below on a sector.
"""
import logging
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    AdmissibilityError,
    DegreeDropError,
    DomainError,
    FitError,
    PrecisionError,
    SingularSymbolError,
    TurnpointError,
)
from .fourier import default_m_max, grid
from .model import eval_P, leading_index, P_leading_limit
from .utils import to_jsonable

log = logging.getLogger("turnpoint")

ADMISSIBLE_FLOOR = 1e-3
N_ANGULAR = 256
N_RADIAL = 64
N_M_SAMPLES = 65


def _pencil_coefficients(eps, spec):
    degree = spec.k_exp[-1]
    coeffs = np.zeros(degree + 1, dtype=complex)
    coeffs[0] = spec.a[0] * eps ** spec.m0
    for al, ml, kl in zip(spec.a[1:], spec.m_exp[1:], spec.k_exp):
        coeffs[kl] += al * eps ** ml
    return coeffs


def roots_P(eps, spec):
    """
    All roots in t of P(t, eps), repeated by multiplicity.

    Companion-matrix eigenvalues refined by a few Newton steps.

    Raises
    ------
    DegreeDropError
        if the coefficient of the top power of t vanishes at this eps.
    """
    eps = complex(eps)
    if eps == 0:
        raise DomainError("roots_P needs eps != 0")
    coeffs = _pencil_coefficients(eps, spec)
    if coeffs[-1] == 0:
        raise DegreeDropError(f"the leading coefficient of P vanishes at eps={eps}")
    roots = np.polynomial.polynomial.polyroots(coeffs).astype(complex)
    derivative = np.polynomial.polynomial.polyder(coeffs)
    scale = np.max(np.abs(coeffs))
    refined = []
    for root in roots:
        for _ in range(3):
            value = np.polynomial.polynomial.polyval(root, coeffs)
            slope = np.polynomial.polynomial.polyval(root, derivative)
            if abs(value) <= 1e-15 * scale or abs(slope) <= 1e-14 * scale:
                break
            root = root - value / slope
        size = np.sum(np.abs(coeffs) * np.abs(root) ** np.arange(coeffs.size))
        residual = abs(np.polynomial.polynomial.polyval(root, coeffs))
        if residual > 1e-10 * max(scale, size):
            raise PrecisionError(f"root {root} of P leaves residual {residual:.3e}")
        refined.append(complex(root))
    return refined


def merging_exponent(spec, eps_seq):
    """
    Slope of log(min |root|) against log(eps), by least squares.
    """
    logs_eps, logs_root = [], []
    for eps in eps_seq:
        try:
            roots = roots_P(eps, spec)
        except TurnpointError as err:
            log.debug("skipping eps=%s: %s", eps, err)
            continue
        smallest = min(abs(r) for r in roots)
        if smallest == 0:
            continue
        logs_eps.append(math.log(abs(eps)))
        logs_root.append(math.log(smallest))
    if len(logs_eps) < 4:
        raise FitError(f"need 4 usable eps values, got {len(logs_eps)}")
    slope, _ = np.polyfit(logs_eps, logs_root, 1)
    if abs(slope) < 0.05:
        log.warning("root sizes do not scale with eps (slope %.3g): no merging", slope)
    return float(slope)


def mu_window(spec):
    """
    Exponents mu for which the circle |t| = |eps|^mu separates the k_j1
    small roots from the others as eps -> 0, returned as (low, high).
    """
    j1 = leading_index(spec)
    mj, kj = spec.m_exp[j1], spec.k_exp[j1 - 1]
    high = Fraction(spec.m0 - mj, kj)
    for l in range(1, spec.q + 1):
        ml, kl = spec.m_exp[l], spec.k_exp[l - 1]
        if l != j1 and kl < kj:
            high = min(high, Fraction(ml - mj, kj - kl))
    return Fraction(0), high


def rouche_count(eps, mu, spec, n_nodes=2048):
    """
    Number of roots of P(., eps) in the disc |t| < |eps|^mu, by the argument
    principle.

    Raises
    ------
    DomainError
        if P is not dominated by its leading small-t term on the circle.
    PrecisionError
        if the winding integral is not close to an integer.
    """
    eps = complex(eps)
    radius = abs(eps) ** mu
    t = radius * np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    P = eval_P(t, eps, spec)
    P0 = P_leading_limit(t, eps, spec)
    ratio = float(np.max(np.abs(P - P0) / np.abs(P0)))
    if ratio >= 1:
        raise DomainError(
            f"|P - P0|/|P0| reaches {ratio:.3f} on |t| = |eps|^{mu}: mu outside the window"
        )
    coeffs = _pencil_coefficients(eps, spec)
    dP = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(coeffs))
    winding = np.mean(dP * t / P)
    count = int(round(winding.real))
    if abs(winding - count) > 0.2:
        raise PrecisionError(f"winding number {winding} is not close to an integer")
    return count


def root_locus(spec, eps_seq):
    "Rows (eps, index, re, im, abs) of the roots of P along ``eps_seq``."
    rows = []
    for eps in eps_seq:
        for index, root in enumerate(sorted(roots_P(eps, spec), key=lambda r: (abs(r), np.angle(r)))):
            rows.append((float(abs(eps)), index, root.real, root.imag, abs(root)))
    return rows


def eval_Pm(tau, m, spec, p):
    """
    Q(im) a_0 - R_D(im) kappa^delta_D tau^(delta_D kappa); ``tau`` and ``m``
    broadcast.
    """
    m = np.asarray(m, dtype=float)
    tau = np.asarray(tau, dtype=complex)
    n = spec.delta_D * p.kappa
    return spec.Qpoly(1j * m) * spec.a[0] - spec.RD(1j * m) * p.kappa ** spec.delta_D * tau ** n


def q_roots(m, spec, p):
    """
    The delta_D kappa roots q_l(m) of tau -> P_m(tau), l = 0, 1, ...
    """
    Q = complex(spec.Qpoly(1j * m))
    RD = complex(spec.RD(1j * m))
    if abs(Q) < 1e-14 or abs(RD) < 1e-14:
        raise SingularSymbolError(f"Q(im) or R_D(im) vanishes at m={m}", m=m)
    n = spec.delta_D * p.kappa
    ratio = spec.a[0] * Q / (RD * p.kappa ** spec.delta_D)
    modulus = abs(ratio) ** (1.0 / n)
    angle = np.angle(ratio)
    return [modulus * np.exp(1j * (angle + 2 * np.pi * l) / n) for l in range(n)]


def _q_table(spec, p, m):
    return np.array([q_roots(mj, spec, p) for mj in m])


def _wrap(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


def _min_growth_factor(delta_D, kappa):
    """
    min over x >= 0 of (1+x)^(delta kappa - 1) / (1 + x^kappa)^(delta - 1/kappa).
    """
    exponent_a = delta_D * kappa - 1
    exponent_b = delta_D - 1.0 / kappa

    def objective(y):
        x = y / (1.0 - y)
        return math.exp(exponent_a * math.log1p(x) - exponent_b * math.log1p(x ** kappa))

    found = minimize_scalar(objective, bounds=(0.0, 1.0 - 1e-9), method="bounded")
    return min(1.0, float(found.fun))


class AdmissibilityReport:
    """
    Empirical constants of a direction: the root distances M1 and M2, the
    index l0 realising M2, the lower-bound constant CP and the r_QRD it was
    computed with.
    """

    def __init__(self, M1, M2, l0, CP, r_QRD, passed, worst_tau, worst_m,
                 direction, aperture, rho):
        self.M1 = float(M1)
        self.M2 = float(M2)
        self.l0 = int(l0)
        self.CP = float(CP)
        self.r_QRD = float(r_QRD)
        self.passed = bool(passed)
        self.worst_tau = complex(worst_tau)
        self.worst_m = float(worst_m)
        self.direction = float(direction)
        self.aperture = float(aperture)
        self.rho = float(rho)

    def lower_bound(self, tau, m, spec, p):
        "CP r_QRD^(1/(delta kappa)) |R_D(im)| (1 + |tau|^kappa)^(delta - 1/kappa)."
        n = spec.delta_D * p.kappa
        return (
            self.CP * self.r_QRD ** (1.0 / n) * np.abs(spec.RD(1j * np.asarray(m, dtype=float)))
            * (1.0 + np.abs(tau) ** p.kappa) ** (spec.delta_D - 1.0 / p.kappa)
        )

    def to_mapping(self):
        return to_jsonable({
            "M1": self.M1, "M2": self.M2, "l0": self.l0, "CP": self.CP,
            "r_QRD": self.r_QRD, "pass": self.passed, "worst_tau": self.worst_tau,
            "worst_m": self.worst_m, "direction": self.direction,
            "aperture": self.aperture, "rho": self.rho,
        })

    def __repr__(self):
        return f"AdmissibilityReport({self.to_mapping()})"


def sector_samples(direction, aperture, rho, far, n_ang=N_ANGULAR, n_rad=N_RADIAL):
    """
    Sample points of the closed disc of radius ``rho`` together with the
    sector of bisector ``direction`` and opening ``aperture`` up to ``far``.
    """
    angles = np.linspace(0.0, 2 * np.pi, n_ang, endpoint=False)
    radii = np.linspace(0.0, rho, n_rad + 1)
    disc = np.multiply.outer(radii, np.exp(1j * angles)).ravel()
    sector_angles = direction + np.linspace(-aperture / 2, aperture / 2, n_ang // 4 + 1)
    sector_radii = np.geomspace(rho, far, n_rad)
    sector = np.multiply.outer(sector_radii, np.exp(1j * sector_angles)).ravel()
    return np.concatenate([disc, sector])


def sector_admissibility(direction, aperture, rho, spec, p, r_QRD, m=None):
    """
    Measure how far the roots q_l(m) stay from the disc of radius ``rho``
    union the sector S_d of bisector ``direction``.

    Returns
    -------
    report : AdmissibilityReport
        ``passed`` is False when some q_l(m) lies inside the region (the
        offending root is recorded as ``worst_tau``) or when M1 or M2 fall
        below 1e-3.
    """
    if aperture <= 0:
        raise DomainError(f"aperture must be positive, got {aperture}")
    if m is None:
        m = grid(default_m_max(p.beta), N_M_SAMPLES)
    m = np.asarray(m, dtype=float)
    ratio_floor = float(np.min(np.abs(spec.Qpoly(1j * m) / spec.RD(1j * m))))
    if r_QRD > ratio_floor * (1.0 + 1e-9):
        raise DomainError(
            f"r_QRD={r_QRD} exceeds inf_m |Q(im)/R_D(im)| = {ratio_floor}"
        )
    q = _q_table(spec, p, m)
    n = q.shape[1]
    inside = (np.abs(q) <= rho) | (np.abs(_wrap(np.angle(q) - direction)) <= aperture / 2)
    if np.any(inside):
        j, l = np.argwhere(inside)[0]
        log.info("root q_%s(%s) = %s lies in the sector of direction %s", l, m[j], q[j, l], direction)
        return AdmissibilityReport(0.0, 0.0, l, 0.0, r_QRD, False, q[j, l], m[j], direction, aperture, rho)
    far = 1e3 * max(rho, float(np.max(np.abs(q))))
    tau = sector_samples(direction, aperture, rho, far)
    distance = np.abs(tau[:, None, None] - q[None, :, :])
    scaled = distance / (1.0 + np.abs(tau))[:, None, None]
    flat_index = np.unravel_index(np.argmin(scaled), scaled.shape)
    M1 = float(scaled[flat_index])
    per_root = (distance / np.abs(q)[None, :, :]).min(axis=(0, 1))
    l0 = int(np.argmax(per_root))
    M2 = float(per_root[l0])
    kappa = p.kappa
    delta = spec.delta_D
    CP = (
        M1 ** (n - 1) * M2 * kappa ** delta * abs(spec.a[0]) ** (1.0 / n)
        / (kappa ** delta) ** (1.0 / n) * _min_growth_factor(delta, kappa)
    )
    passed = M1 > ADMISSIBLE_FLOOR and M2 > ADMISSIBLE_FLOOR and CP > 0
    report = AdmissibilityReport(
        M1, M2, l0, CP, r_QRD, passed, tau[flat_index[0]], m[flat_index[1]],
        direction, aperture, rho,
    )
    log.debug("admissibility of direction %.4f: %s", direction, report)
    return report


def search_r_QRD(direction, aperture, rho, spec, p, threshold, start=1.0, max_doublings=40):
    """
    Grow r_QRD by factors of 2 from ``start`` until CP r^(1/(delta kappa))
    reaches ``threshold``, never beyond inf_m |Q(im)/R_D(im)|.
    """
    m = grid(default_m_max(p.beta), N_M_SAMPLES)
    cap = float(np.min(np.abs(spec.Qpoly(1j * m) / spec.RD(1j * m))))
    n = spec.delta_D * p.kappa
    r = min(start, cap)
    for _ in range(max_doublings):
        report = sector_admissibility(direction, aperture, rho, spec, p, r, m)
        if not report.passed:
            raise AdmissibilityError(
                f"direction {direction} is not admissible", witness=report.worst_tau
            )
        if report.CP * r ** (1.0 / n) >= threshold:
            return r, report
        if r >= cap:
            break
        r = min(2 * r, cap)
    raise AdmissibilityError(
        f"CP * r_QRD^(1/{n}) stays below {threshold} up to r_QRD = {r}"
    )

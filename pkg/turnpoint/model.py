"""
Equation data, scale exponents and the exact constraint checks that gate the
inner and outer constructions.
"""
import cmath
import collections
import json
import logging
import math
from fractions import Fraction

import numpy as np

from .errors import SingularSymbolError, StructuralError
from .fourier import DEFAULT_N_PTS, SampledLine, default_m_max, ebeta_norm, grid
from .utils import parse_complex, parse_rational, resolve_data_path, to_jsonable

log = logging.getLogger("turnpoint")

# nodes of the m-grid used to check that symbols do not vanish
SYMBOL_CHECK_PTS = 4001


class Polynomial:
    """
    A polynomial with complex coefficients in ascending degree.

    Trailing zero coefficients are dropped so that ``degree()`` is the index of
    the last nonzero coefficient. The zero polynomial has degree -1.
    """

    def __init__(self, coeffs):
        coeffs = [complex(c) for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_json(cls, value):
        if not isinstance(value, (list, tuple)):
            raise StructuralError(f"a polynomial is a list of coefficients, got {value!r}")
        return cls([parse_complex(c) for c in value])

    def to_json(self):
        return [[c.real, c.imag] for c in self.coeffs]

    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def leading(self):
        return self.coeffs[-1] if self.coeffs else 0j

    def __call__(self, x):
        if self.is_zero:
            return np.zeros_like(np.asarray(x, dtype=complex))
        return np.polynomial.polynomial.polyval(x, np.array(self.coeffs))

    def roots(self):
        if self.degree() < 1:
            return np.array([], dtype=complex)
        return np.polynomial.polynomial.polyroots(np.array(self.coeffs))

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


class Profile:
    """
    The decaying frequency profile c (1 + |m|)^(-mu-1) exp(-beta |m|).

    Its (beta, mu)-norm is |c|, attained at m = 0.
    """

    def __init__(self, amplitude, beta, mu):
        self.amplitude = complex(amplitude)
        self.beta = float(beta)
        self.mu = float(mu)

    def __call__(self, m):
        m = np.abs(np.asarray(m, dtype=float))
        return self.amplitude * (1.0 + m) ** (-self.mu - 1.0) * np.exp(-self.beta * m)

    def sample(self, m_max, n_pts=DEFAULT_N_PTS):
        return SampledLine.from_function(self, m_max, n_pts)

    def norm(self, beta=None, mu=None):
        beta = self.beta if beta is None else beta
        mu = self.mu if mu is None else mu
        if beta == self.beta and mu == self.mu:
            return abs(self.amplitude)
        return ebeta_norm(self.sample(default_m_max(beta)), beta, mu)

    def __repr__(self):
        return f"Profile({self.amplitude}, beta={self.beta}, mu={self.mu})"


def profile_line(c, beta, mu, m_max, n_pts=DEFAULT_N_PTS):
    return Profile(c, beta, mu).sample(m_max, n_pts)


class ForcingSpec:
    """
    Data of the forcing term: the exponent n_F, the rational gamma, the rate
    K_F, the profile C_F(m), the rational function F1/F2 and the ray angle
    theta_F of the defining integral.
    """

    def __init__(self, nF, gamma, KF, CF, F1, F2, thetaF=0.0):
        self.nF = int(nF)
        self.gamma = parse_rational(gamma)
        self.KF = float(KF)
        self.CF = CF
        self.F1 = F1
        self.F2 = F2
        self.thetaF = float(thetaF)
        if self.nF < 0:
            raise StructuralError(f"nF must be nonnegative, got {self.nF}")
        if self.gamma <= Fraction(1, 2):
            raise StructuralError(f"gamma must exceed 1/2, got {self.gamma}")
        if self.KF <= 0:
            raise StructuralError(f"KF must be positive, got {self.KF}")
        if F2.is_zero:
            raise StructuralError("F2 must not be the zero polynomial")
        if F1.degree() > F2.degree():
            raise StructuralError(
                f"deg(F1)={F1.degree()} exceeds deg(F2)={F2.degree()}"
            )
        if not -math.pi / 2 < self.thetaF < math.pi / 2:
            raise StructuralError(f"thetaF must lie in (-pi/2, pi/2), got {self.thetaF}")
        distance = self.ray_distance(self.thetaF)
        if distance < 1e-8:
            raise StructuralError(
                f"the ray of angle {self.thetaF} passes through a root of F2"
            )

    def ray_distance(self, theta):
        """
        Smallest distance from a root of F2 to the closed ray of angle
        ``theta`` issued from 0.
        """
        direction = cmath.exp(1j * theta)
        best = math.inf
        for root in self.F2.roots():
            along = (root * direction.conjugate()).real
            if along <= 0:
                best = min(best, abs(root))
            else:
                best = min(best, abs(root - along * direction))
        return best

    def ratio(self, u):
        "F1(u)/F2(u)."
        return self.F1(u) / self.F2(u)

    def to_json(self):
        return {
            "nF": self.nF,
            "gamma": str(self.gamma),
            "KF": self.KF,
            "F1": self.F1.to_json(),
            "F2": self.F2.to_json(),
            "thetaF": self.thetaF,
        }


class EquationSpec:
    """
    Coefficients, exponents and polynomials of the perturbed equation.

    Index conventions follow the sums of the equation: ``a``, ``m_exp`` run
    over l = 0..q, ``k_exp`` over l = 1..q (``k_exp[0]`` is k_1); ``c``,
    ``mu_exp``, ``h_exp`` over l = 0..M; ``Bj``, ``n_exp``, ``b_exp`` over
    j = 0..Qcount; ``Delta``, ``d_exp``, ``delta_exp``, ``Rpoly`` over
    l = 1..D, so the last entries belong to the principal term D.
    """

    _keys = (
        "q", "M", "Qcount", "D", "a", "m_exp", "k_exp", "c", "mu_exp", "h_exp",
        "n_exp", "b_exp", "Delta", "d_exp", "delta_exp", "Qpoly", "Q1poly",
        "Q2poly", "Rpoly", "forcing", "profiles",
    )

    def __init__(
        self, q, M, Qcount, D, a, m_exp, k_exp, c, mu_exp, h_exp, Bj, n_exp,
        b_exp, Delta, d_exp, delta_exp, Qpoly, Q1poly, Q2poly, Rpoly, forcing,
        profile_beta=1.0, profile_mu=2.0,
    ):
        self.q = int(q)
        self.M = int(M)
        self.Qcount = int(Qcount)
        self.D = int(D)
        self.a = tuple(complex(x) for x in a)
        self.m_exp = tuple(int(x) for x in m_exp)
        self.k_exp = tuple(int(x) for x in k_exp)
        self.c = tuple(complex(x) for x in c)
        self.mu_exp = tuple(int(x) for x in mu_exp)
        self.h_exp = tuple(int(x) for x in h_exp)
        self.Bj = tuple(Bj)
        self.n_exp = tuple(int(x) for x in n_exp)
        self.b_exp = tuple(int(x) for x in b_exp)
        self.Delta = tuple(int(x) for x in Delta)
        self.d_exp = tuple(int(x) for x in d_exp)
        self.delta_exp = tuple(int(x) for x in delta_exp)
        self.Qpoly = Qpoly
        self.Q1poly = Q1poly
        self.Q2poly = Q2poly
        self.Rpoly = tuple(Rpoly)
        self.forcing = forcing
        self.profile_beta = float(profile_beta)
        self.profile_mu = float(profile_mu)
        self.check_structure()

    # -- indices of the principal term --------------------------------------

    @property
    def m0(self):
        return self.m_exp[0]

    @property
    def RD(self):
        return self.Rpoly[-1]

    @property
    def d_D(self):
        return self.d_exp[-1]

    @property
    def delta_D(self):
        return self.delta_exp[-1]

    @property
    def Delta_D(self):
        return self.Delta[-1]

    def check_structure(self):
        """
        Raise StructuralError on index mismatches, ordering and degree
        violations, and SingularSymbolError if Q or R_D vanishes at some i*m.
        """
        counts = {
            "a": (self.a, self.q + 1),
            "m_exp": (self.m_exp, self.q + 1),
            "k_exp": (self.k_exp, self.q),
            "c": (self.c, self.M + 1),
            "mu_exp": (self.mu_exp, self.M + 1),
            "h_exp": (self.h_exp, self.M + 1),
            "B": (self.Bj, self.Qcount + 1),
            "n_exp": (self.n_exp, self.Qcount + 1),
            "b_exp": (self.b_exp, self.Qcount + 1),
            "Delta": (self.Delta, self.D),
            "d_exp": (self.d_exp, self.D),
            "delta_exp": (self.delta_exp, self.D),
            "Rpoly": (self.Rpoly, self.D),
        }
        for name, (values, expected) in counts.items():
            if len(values) != expected:
                raise StructuralError(
                    f"{name} has {len(values)} entries, expected {expected}"
                )
        if min(self.q, self.D) < 1 or min(self.M, self.Qcount) < 0:
            raise StructuralError("q and D must be positive, M and Qcount nonnegative")
        for name in ("k_exp", "h_exp", "b_exp", "delta_exp"):
            values = getattr(self, name)
            if any(b <= a for a, b in zip(values, values[1:])):
                raise StructuralError(f"{name} must be strictly increasing, got {values}")
        for name in ("k_exp", "b_exp", "delta_exp"):
            if min(getattr(self, name)) < 1:
                raise StructuralError(f"{name} entries must be positive")
        for name in ("m_exp", "mu_exp", "h_exp", "n_exp", "Delta", "d_exp"):
            if min(getattr(self, name)) < 0:
                raise StructuralError(f"{name} entries must be nonnegative")
        deg_Q = self.Qpoly.degree()
        deg_RD = self.RD.degree()
        if deg_Q != deg_RD:
            raise StructuralError(f"deg(Q)={deg_Q} differs from deg(R_D)={deg_RD}")
        if any(R.degree() > deg_RD for R in self.Rpoly[:-1]):
            raise StructuralError("deg(R_l) must not exceed deg(R_D)")
        if deg_RD < max(self.Q1poly.degree(), self.Q2poly.degree()):
            raise StructuralError("deg(R_D) must be at least max(deg(Q1), deg(Q2))")
        m = grid(default_m_max(self.profile_beta), SYMBOL_CHECK_PTS)
        for name, poly in (("Q", self.Qpoly), ("R_D", self.RD)):
            values = np.abs(poly(1j * m))
            if poly.is_zero or np.min(values) < 1e-12:
                offending = float(m[np.argmin(values)])
                raise SingularSymbolError(f"{name}(im) vanishes near m={offending}", m=offending)

    @property
    def has_merging_roots(self):
        return any(self.m0 > ml for ml in self.m_exp[1:])

    def B_line(self, j, m_max, n_pts=DEFAULT_N_PTS):
        return self.Bj[j].sample(m_max, n_pts)

    def CF_line(self, m_max, n_pts=DEFAULT_N_PTS):
        return self.forcing.CF.sample(m_max, n_pts)

    # -- serialization ---------------------------------------------------------

    @classmethod
    def from_json(cls, mapping):
        missing = [key for key in cls._keys if key not in mapping]
        if missing:
            raise StructuralError(f"equation document lacks keys {missing}")
        profiles = mapping["profiles"]
        beta = float(profiles.get("beta", 1.0))
        mu = float(profiles.get("mu", 2.0))
        Bj = [Profile(parse_complex(c), beta, mu) for c in profiles.get("B", [])]
        forcing = mapping["forcing"]
        try:
            forcing_spec = ForcingSpec(
                nF=forcing["nF"],
                gamma=forcing["gamma"],
                KF=forcing["KF"],
                CF=Profile(parse_complex(profiles.get("CF", 0)), beta, mu),
                F1=Polynomial.from_json(forcing["F1"]),
                F2=Polynomial.from_json(forcing["F2"]),
                thetaF=forcing.get("thetaF", 0.0),
            )
            return cls(
                q=mapping["q"],
                M=mapping["M"],
                Qcount=mapping["Qcount"],
                D=mapping["D"],
                a=[parse_complex(x) for x in mapping["a"]],
                m_exp=mapping["m_exp"],
                k_exp=mapping["k_exp"],
                c=[parse_complex(x) for x in mapping["c"]],
                mu_exp=mapping["mu_exp"],
                h_exp=mapping["h_exp"],
                Bj=Bj,
                n_exp=mapping["n_exp"],
                b_exp=mapping["b_exp"],
                Delta=mapping["Delta"],
                d_exp=mapping["d_exp"],
                delta_exp=mapping["delta_exp"],
                Qpoly=Polynomial.from_json(mapping["Qpoly"]),
                Q1poly=Polynomial.from_json(mapping["Q1poly"]),
                Q2poly=Polynomial.from_json(mapping["Q2poly"]),
                Rpoly=[Polynomial.from_json(R) for R in mapping["Rpoly"]],
                forcing=forcing_spec,
                profile_beta=beta,
                profile_mu=mu,
            )
        except KeyError as err:
            raise StructuralError(f"equation document lacks key {err}") from err
        except TypeError as err:
            raise StructuralError(f"malformed equation document: {err}") from err

    def to_json(self):
        return {
            "q": self.q,
            "M": self.M,
            "Qcount": self.Qcount,
            "D": self.D,
            "a": to_jsonable(self.a),
            "m_exp": list(self.m_exp),
            "k_exp": list(self.k_exp),
            "c": to_jsonable(self.c),
            "mu_exp": list(self.mu_exp),
            "h_exp": list(self.h_exp),
            "n_exp": list(self.n_exp),
            "b_exp": list(self.b_exp),
            "Delta": list(self.Delta),
            "d_exp": list(self.d_exp),
            "delta_exp": list(self.delta_exp),
            "Qpoly": self.Qpoly.to_json(),
            "Q1poly": self.Q1poly.to_json(),
            "Q2poly": self.Q2poly.to_json(),
            "Rpoly": [R.to_json() for R in self.Rpoly],
            "forcing": self.forcing.to_json(),
            "profiles": {
                "beta": self.profile_beta,
                "mu": self.profile_mu,
                "B": to_jsonable([B.amplitude for B in self.Bj]),
                "CF": to_jsonable(self.forcing.CF.amplitude),
            },
        }

    def with_changes(self, **changes):
        """
        A new spec from this one's JSON form with top-level keys replaced.
        """
        mapping = self.to_json()
        mapping.update(to_jsonable(changes))
        return EquationSpec.from_json(mapping)


def load_config(path):
    """
    Read a JSON equation document or run configuration. Bare names resolve
    against the shipped data directory.
    """
    with open(resolve_data_path(path)) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as err:
            raise StructuralError(f"{str(path)!r} is not valid JSON: {err}") from err


def load_spec(path):
    return EquationSpec.from_json(load_config(path))


class ScaleParams:
    """
    Exponent bundles of the inner (kappa, chi, alpha) and outer (gamma,
    gamma0, Gamma) constructions, with the shared weights nu, beta, mu.

    Rational exponents are held as Fractions. ``m0`` and ``dlk`` are copied
    or derived from the equation.
    """

    _rational = ("chi", "alpha", "gamma", "gamma0", "Gamma")

    def __init__(self, kappa, chi, alpha, gamma, gamma0, Gamma, nu, beta, mu, rho, eps0, m0, dlk):
        self.kappa = int(kappa)
        self.chi = parse_rational(chi)
        self.alpha = parse_rational(alpha)
        self.gamma = parse_rational(gamma)
        self.gamma0 = parse_rational(gamma0)
        self.Gamma = parse_rational(Gamma)
        self.nu = float(nu)
        self.beta = float(beta)
        self.mu = float(mu)
        self.rho = float(rho)
        self.eps0 = float(eps0)
        self.m0 = int(m0)
        self.dlk = tuple(int(x) for x in dlk)
        if self.kappa < 1:
            raise StructuralError(f"kappa must be a positive integer, got {self.kappa}")
        if not 0 <= self.Gamma < self.gamma:
            raise StructuralError(f"need 0 <= Gamma < gamma, got Gamma={self.Gamma}, gamma={self.gamma}")
        for name in ("nu", "beta", "rho", "eps0"):
            if getattr(self, name) <= 0:
                raise StructuralError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mu <= 1:
            raise StructuralError(f"mu must exceed 1, got {self.mu}")

    @classmethod
    def from_mapping(cls, mapping, spec):
        """
        Build from a ``params`` block. ``gamma`` defaults to the forcing's,
        ``beta`` and ``mu`` to the profiles', and ``nu`` to 2 K_F eps0^Gamma.
        """
        mapping = dict(mapping)
        kappa = int(mapping["kappa"])
        Gamma = parse_rational(mapping.get("Gamma", 0))
        eps0 = float(mapping.get("eps0", 0.1))
        nu = mapping.get("nu")
        if nu is None:
            nu = 2.0 * spec.forcing.KF * eps0 ** float(Gamma)
        dlk = [
            d - delta * (kappa + 1)
            for d, delta in zip(spec.d_exp[:-1], spec.delta_exp[:-1])
        ]
        try:
            return cls(
                kappa=kappa,
                chi=mapping["chi"],
                alpha=mapping["alpha"],
                gamma=mapping.get("gamma", spec.forcing.gamma),
                gamma0=mapping.get("gamma0", 0),
                Gamma=Gamma,
                nu=nu,
                beta=mapping.get("beta", spec.profile_beta),
                mu=mapping.get("mu", spec.profile_mu),
                rho=mapping.get("rho", 0.05),
                eps0=eps0,
                m0=spec.m0,
                dlk=dlk,
            )
        except KeyError as err:
            raise StructuralError(f"params block lacks key {err}") from err

    def to_mapping(self):
        mapping = {
            name: getattr(self, name)
            for name in ("kappa", "nu", "beta", "mu", "rho", "eps0", "m0")
        }
        mapping.update({name: str(getattr(self, name)) for name in self._rational})
        mapping["dlk"] = list(self.dlk)
        return mapping

    def replace(self, **changes):
        mapping = {name: getattr(self, name) for name in (
            "kappa", "chi", "alpha", "gamma", "gamma0", "Gamma", "nu", "beta",
            "mu", "rho", "eps0", "m0", "dlk")}
        mapping.update(changes)
        return ScaleParams(**mapping)

    def __repr__(self):
        return f"ScaleParams({self.to_mapping()})"


ConstraintEntry = collections.namedtuple(
    "ConstraintEntry", ["cid", "passed", "lhs", "rhs", "citation"]
)

_relations = {
    ">=": lambda lhs, rhs: lhs >= rhs,
    ">": lambda lhs, rhs: lhs > rhs,
    "<=": lambda lhs, rhs: lhs <= rhs,
    "==": lambda lhs, rhs: lhs == rhs,
}


def _entry(cid, lhs, relation, rhs, citation):
    return ConstraintEntry(cid, bool(_relations[relation](lhs, rhs)), lhs, rhs, citation)


class ConstraintReport:
    """
    Ordered constraint entries; ``overall`` is their conjunction.
    """

    def __init__(self, entries, title=""):
        self.entries = tuple(entries)
        self.title = title

    @property
    def overall(self):
        return all(entry.passed for entry in self.entries)

    def failures(self):
        return [entry for entry in self.entries if not entry.passed]

    @property
    def binding(self):
        "The first failing entry, or None."
        failures = self.failures()
        return failures[0] if failures else None

    def __getitem__(self, cid):
        for entry in self.entries:
            if entry.cid == cid:
                return entry
        raise KeyError(cid)

    def __contains__(self, cid):
        return any(entry.cid == cid for entry in self.entries)

    def __add__(self, other):
        return ConstraintReport(self.entries + other.entries, self.title or other.title)

    def to_mapping(self):
        return {
            "title": self.title,
            "overall": self.overall,
            "entries": [
                {
                    "id": entry.cid,
                    "pass": entry.passed,
                    "lhs": to_jsonable(entry.lhs),
                    "rhs": to_jsonable(entry.rhs),
                    "citation": entry.citation,
                }
                for entry in self.entries
            ],
        }


def validate_inner(spec, p):
    """
    Exact rational check of every exponent condition of the Borel-plane
    construction of order kappa with scaling chi, alpha.

    Returns
    -------
    report : ConstraintReport
    """
    spec.check_structure()
    kappa = Fraction(p.kappa)
    chi, alpha, gamma = p.chi, p.alpha, p.gamma
    m0 = Fraction(spec.m0)
    delta_D = Fraction(spec.delta_D)
    shift = chi * kappa * (delta_D - 1 / kappa)
    entries = [
        _entry(
            "inner.Delta_D_balance",
            spec.Delta_D + alpha * (delta_D - spec.d_D) - m0, "==", 0,
            "Delta_D + alpha*(delta_D - d_D) - m0 = 0",
        ),
        _entry(
            "inner.d_D_degree", Fraction(spec.d_D), "==", delta_D * (kappa + 1),
            "d_D = delta_D*(kappa + 1)",
        ),
    ]
    for l, (d, delta) in enumerate(zip(spec.d_exp[:-1], spec.delta_exp[:-1]), start=1):
        entries.append(_entry(
            f"inner.d_kappa[{l}]", Fraction(d) - delta * (kappa + 1), ">=", 1,
            "d_l - delta_l*(kappa + 1) >= 1",
        ))
    entries += [
        _entry("inner.gamma_alpha_chi", gamma + alpha, "<=", chi, "gamma + alpha <= chi"),
        _entry("inner.chi_kappa", chi * kappa, ">", Fraction(1, 2), "chi*kappa > 1/2"),
        _entry(
            "inner.m0_gap", max(m0 - ml for ml in spec.m_exp[1:]), ">", 0,
            "m0 > m_l for some l >= 1",
        ),
        _entry("inner.delta_D_kappa", delta_D, ">=", 1 / kappa, "delta_D >= 1/kappa"),
    ]
    for l, (ml, kl) in enumerate(zip(spec.m_exp[1:], spec.k_exp), start=1):
        entries.append(_entry(
            f"inner.linear_k[{l}]", chi * kl + ml - m0 - alpha * kl, ">=", 0,
            "chi*k_l + m_l - m0 - alpha*k_l >= 0",
        ))
    for j, (nj, bj) in enumerate(zip(spec.n_exp, spec.b_exp)):
        entries.append(_entry(
            f"inner.monomial_b[{j}]", chi * bj + nj - alpha * bj, ">=", 0,
            "chi*b_j + n_j - alpha*b_j >= 0",
        ))
        entries.append(_entry(f"inner.b_positive[{j}]", Fraction(bj), ">=", 1, "b_j >= 1"))
    for l, (Dl, dl, deltal) in enumerate(
        zip(spec.Delta[:-1], spec.d_exp[:-1], spec.delta_exp[:-1]), start=1
    ):
        dlk = Fraction(dl) - deltal * (kappa + 1)
        entries.append(_entry(
            f"inner.irregular_d[{l}]",
            chi * kappa * (dlk / kappa + deltal) + Dl + alpha * (deltal - dl) - m0 - shift,
            ">=", 0,
            "chi*kappa*(d_lk/kappa + delta_l) + Delta_l + alpha*(delta_l - d_l) - m0"
            " - chi*kappa*(delta_D - 1/kappa) >= 0",
        ))
        entries.append(_entry(
            f"inner.delta_order[{l}]", delta_D - 1 / kappa, ">=", Fraction(deltal),
            "delta_D - 1/kappa >= delta_l",
        ))
    for l, (mul, hl) in enumerate(zip(spec.mu_exp, spec.h_exp)):
        entries.append(_entry(
            f"inner.nonlinear_h[{l}]",
            chi * kappa * (Fraction(hl) / kappa + 1 / kappa) + mul - 2 * m0 - alpha * hl
            - shift - chi,
            ">=", 0,
            "chi*kappa*(h_l/kappa + 1/kappa) + mu_l - 2*m0 - alpha*h_l"
            " - chi*kappa*(delta_D - 1/kappa) - chi >= 0",
        ))
    entries.append(_entry(
        "inner.mu_degree", p.mu, ">",
        float(max(spec.Q1poly.degree(), spec.Q2poly.degree()) + 1),
        "mu > max(deg(Q1) + 1, deg(Q2) + 1)",
    ))
    report = ConstraintReport(entries, title="inner")
    log.info("inner constraints: %s of %s pass", len(entries) - len(report.failures()), len(entries))
    return report


def validate_outer(spec, p):
    """
    Exact rational check of every exponent condition of the classical
    Laplace construction with scaling gamma, gamma0, Gamma.
    """
    spec.check_structure()
    gamma, gamma0, Gamma = p.gamma, p.gamma0, p.Gamma
    d = Fraction(spec.d_D)
    delta_D = Fraction(spec.delta_D)
    nF = spec.forcing.nF
    gap = Gamma - gamma
    entries = [
        _entry(
            "outer.Delta_D_gamma", Fraction(spec.Delta_D), "==", gamma * delta_D - gamma0,
            "Delta_D = gamma*delta_D - gamma0",
        ),
        _entry("outer.gamma_half", gamma, ">", Fraction(1, 2), "gamma > 1/2"),
        _entry("outer.Gamma_range", gamma - Gamma, ">", 0, "0 <= Gamma < gamma"),
    ]
    for name, values in (("d", spec.d_exp), ("k", spec.k_exp), ("b", spec.b_exp), ("h", spec.h_exp)):
        entries.append(_entry(
            f"outer.d_D_dominates_{name}", d, ">=", Fraction(max(values)),
            f"d_D >= {name}_i for every i",
        ))
    entries += [
        _entry("outer.upsilon_degree", d, ">=", 1 + delta_D, "d_D >= 1 + delta_D"),
        _entry("outer.upsilon_delta", delta_D, ">=", 0, "delta_D >= 0"),
        _entry(
            "outer.upsilon_eps", nF + Gamma * (d - 1 - delta_D) - gamma * d, ">=", 0,
            "n_F + Gamma*(d_D - 1 - delta_D) - gamma*d_D >= 0",
        ),
    ]
    for l, (ml, kl) in enumerate(zip(spec.m_exp[1:], spec.k_exp), start=1):
        entries += [
            _entry(f"outer.linear_k[{l}].order", d - kl - 1, ">=", 0, "d_D - k_l - 1 >= 0"),
            _entry(f"outer.linear_k[{l}].delta", d - kl, ">=", delta_D, "delta_D <= d_D - k_l"),
            _entry(
                f"outer.linear_k[{l}].eps", ml + gamma0 + gap * (d - kl) - Gamma * delta_D, ">=", 0,
                "m_l + gamma0 + (Gamma - gamma)*(d_D - k_l) - Gamma*delta_D >= 0",
            ),
        ]
    entries += [
        _entry("outer.linear_a0.order", d, ">=", 1, "d_D >= 1"),
        _entry("outer.linear_a0.delta", d, ">=", delta_D, "delta_D <= d_D"),
        _entry(
            "outer.linear_a0.eps", spec.m0 + gamma0 + gap * d - Gamma * delta_D, ">=", 0,
            "m0 + gamma0 + (Gamma - gamma)*d_D - Gamma*delta_D >= 0",
        ),
    ]
    for l, (mul, hl) in enumerate(zip(spec.mu_exp, spec.h_exp)):
        entries += [
            _entry(f"outer.nonlinear_h[{l}].delta", d - hl, ">=", delta_D, "delta_D <= d_D - h_l"),
            _entry(
                f"outer.nonlinear_h[{l}].eps",
                mul + 2 * gamma0 + gap * (d - hl) - Gamma * (delta_D - 1), ">=", 0,
                "mu_l + 2*gamma0 + (Gamma - gamma)*(d_D - h_l) - Gamma*(delta_D - 1) >= 0",
            ),
        ]
    for j, (nj, bj) in enumerate(zip(spec.n_exp, spec.b_exp)):
        entries += [
            _entry(f"outer.monomial_b[{j}].order", d - bj - 1, ">=", delta_D, "d_D - b_j - 1 >= delta_D"),
            _entry(
                f"outer.monomial_b[{j}].eps",
                nj - gamma * (d - bj) + Gamma * (d - bj - 1 - delta_D), ">=", 0,
                "n_j - gamma*(d_D - b_j) + Gamma*(d_D - b_j - 1 - delta_D) >= 0",
            ),
        ]
    for l, (Dl, dl, deltal) in enumerate(
        zip(spec.Delta[:-1], spec.d_exp[:-1], spec.delta_exp[:-1]), start=1
    ):
        entries += [
            _entry(f"outer.irregular_d[{l}].upper", d - dl + deltal, ">=", delta_D,
                   "delta_D <= d_D - d_l + delta_l"),
            _entry(f"outer.irregular_d[{l}].lower", delta_D, ">=", Fraction(deltal), "delta_D >= delta_l"),
            _entry(
                f"outer.irregular_d[{l}].eps",
                Dl + gamma0 + gap * (d - dl + deltal) - Gamma * delta_D, ">=", 0,
                "Delta_l + gamma0 + (Gamma - gamma)*(d_D - d_l + delta_l) - Gamma*delta_D >= 0",
            ),
        ]
    report = ConstraintReport(entries, title="outer")
    log.info("outer constraints: %s of %s pass", len(entries) - len(report.failures()), len(entries))
    return report


def check_scaling_identities(spec, p):
    """
    The two relations between the inner and outer exponents from which the
    separation of the inner and outer time domains follows.
    """
    kappa = Fraction(p.kappa)
    delta_D = Fraction(spec.delta_D)
    m0 = Fraction(spec.m0)
    entries = [
        _entry(
            "scaling.exponent_match", p.gamma * delta_D - p.gamma0, "==",
            p.alpha * delta_D * kappa + m0,
            "gamma*delta_D - gamma0 = alpha*delta_D*kappa + m0",
        ),
        _entry(
            "scaling.outer_room", m0 + p.gamma0, ">=",
            (p.gamma - p.Gamma) * delta_D * (kappa + 1) + p.Gamma * delta_D,
            "m0 + gamma0 >= (gamma - Gamma)*delta_D*(kappa + 1) + Gamma*delta_D",
        ),
    ]
    return ConstraintReport(entries, title="scaling")


def eps_power(eps, exponent):
    """
    eps**exponent on the principal branch. Integer exponents use exact
    repeated multiplication.
    """
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        return complex(eps) ** int(exponent)
    if eps == 0:
        if exponent > 0:
            return 0j
        raise ZeroDivisionError("0 raised to a nonpositive power")
    return cmath.exp(float(exponent) * cmath.log(eps))


def eval_P(t, eps, spec):
    """
    P(t, eps) = sum_l a_l eps^m_l t^k_l + a_0 eps^m_0. ``t`` may be an array.
    """
    eps = complex(eps)
    total = spec.a[0] * eps ** spec.m0 + 0 * np.asarray(t, dtype=complex)
    for al, ml, kl in zip(spec.a[1:], spec.m_exp[1:], spec.k_exp):
        total = total + al * eps ** ml * np.asarray(t, dtype=complex) ** kl
    if np.ndim(total) == 0:
        return complex(total)
    return total


def leading_index(spec):
    """
    Index j1 of the term dominating P near t = 0 for small eps: the smallest
    l >= 1 with minimal m_l among those with m_l < m0.
    """
    candidates = [l for l in range(1, spec.q + 1) if spec.m_exp[l] < spec.m0]
    if not candidates:
        raise StructuralError("no term with m_l < m0: the turning points do not merge")
    lowest = min(spec.m_exp[l] for l in candidates)
    return min(l for l in candidates if spec.m_exp[l] == lowest)


def P_leading_limit(t, eps, spec):
    "a_j1 eps^m_j1 t^k_j1, the part of P that survives as eps -> 0."
    j1 = leading_index(spec)
    return spec.a[j1] * complex(eps) ** spec.m_exp[j1] * np.asarray(t, dtype=complex) ** spec.k_exp[j1 - 1]


def check_smallness(spec, zeta1, m_max=None, n_pts=SYMBOL_CHECK_PTS):
    """
    Compare every coefficient size entering the outer contraction with
    ``zeta1``: |a_i|, |c_j|, the (beta, mu)-norms of B_k and C_F, and
    sup_m |R_l(im)/R_D(im)| for l < D.
    """
    if zeta1 <= 0:
        raise StructuralError(f"zeta1 must be positive, got {zeta1}")
    beta, mu = spec.profile_beta, spec.profile_mu
    m = grid(m_max or default_m_max(beta), n_pts)
    entries = []
    for i, ai in enumerate(spec.a):
        entries.append(_entry(f"smallness.a[{i}]", abs(ai), "<=", zeta1, "|a_i| <= zeta1"))
    for j, cj in enumerate(spec.c):
        entries.append(_entry(f"smallness.c[{j}]", abs(cj), "<=", zeta1, "|c_j| <= zeta1"))
    for k, Bk in enumerate(spec.Bj):
        entries.append(_entry(
            f"smallness.B[{k}]", Bk.norm(beta, mu), "<=", zeta1, "||B_k||_(beta,mu) <= zeta1"
        ))
    entries.append(_entry(
        "smallness.CF", spec.forcing.CF.norm(beta, mu), "<=", zeta1, "||C_F||_(beta,mu) <= zeta1"
    ))
    RD = np.abs(spec.RD(1j * m))
    for l, Rl in enumerate(spec.Rpoly[:-1], start=1):
        ratio = float(np.max(np.abs(Rl(1j * m)) / RD))
        entries.append(_entry(
            f"smallness.R_ratio[{l}]", ratio, "<=", zeta1, "sup_m |R_l(im)/R_D(im)| <= zeta1"
        ))
    return ConstraintReport(entries, title="smallness")


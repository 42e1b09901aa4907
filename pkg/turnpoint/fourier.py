"""
Functions on a truncated uniform frequency grid: the weighted sup-norm of the
space E_(beta, mu), the symbol-weighted star product, classical convolution and
the inverse Fourier transform.
"""
import logging

import numpy as np

from .errors import SingularSymbolError, StructuralError
from .utils import csv_text, read_csv

log = logging.getLogger("turnpoint")

DEFAULT_N_PTS = 2049
SINGULAR_SYMBOL = 1e-12


class SampledLine:
    """
    A complex function sampled on the symmetric grid m_j in [-m_max, m_max].

    Parameters
    ----------
    m_max : float
        Half-width of the grid.
    n_pts : int
        Number of nodes, odd so that m = 0 is a node.
    values : array_like
        Complex samples, one per node.
    """

    def __init__(self, m_max, n_pts, values):
        if n_pts < 1 or n_pts % 2 == 0:
            raise StructuralError(f"n_pts must be a positive odd integer, got {n_pts}")
        if m_max <= 0:
            raise StructuralError(f"m_max must be positive, got {m_max}")
        values = np.array(values, dtype=complex)
        if values.shape != (n_pts,):
            raise StructuralError(
                f"expected {n_pts} samples, got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise StructuralError("SampledLine values must be finite")
        self.m_max = float(m_max)
        self.n_pts = int(n_pts)
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def from_function(cls, func, m_max, n_pts=DEFAULT_N_PTS):
        m = grid(m_max, n_pts)
        return cls(m_max, n_pts, func(m))

    @classmethod
    def zeros(cls, m_max, n_pts=DEFAULT_N_PTS):
        return cls(m_max, n_pts, np.zeros(n_pts, dtype=complex))

    @property
    def m(self):
        return grid(self.m_max, self.n_pts)

    @property
    def h(self):
        return spacing(self.m_max, self.n_pts)

    @property
    def weights(self):
        "Trapezoid weights including the spacing h_m."
        return trapezoid_weights(self.m_max, self.n_pts)

    def same_grid(self, other):
        return self.n_pts == other.n_pts and np.isclose(self.m_max, other.m_max, rtol=0, atol=1e-14)

    def with_values(self, values):
        return SampledLine(self.m_max, self.n_pts, values)

    def symbol(self, poly):
        """
        Evaluate ``poly`` at i*m on this grid (a multiplier in Fourier space).
        """
        return symbol(poly, self.m)

    def __mul__(self, other):
        if isinstance(other, SampledLine):
            _check_same_grid(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __add__(self, other):
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def to_csv(self):
        rows = [(m, v.real, v.imag) for m, v in zip(self.m, self.values)]
        return csv_text(("m", "re", "im"), rows)

    @classmethod
    def from_csv(cls, path):
        header, rows = read_csv(path)
        if header != ["m", "re", "im"]:
            raise StructuralError(f"unexpected SampledLine columns {header}")
        m = np.array([float(row[0]) for row in rows])
        values = np.array([complex(float(row[1]), float(row[2])) for row in rows])
        return cls(float(m[-1]), len(m), values)

    def __repr__(self):
        return f"SampledLine(m_max={self.m_max}, n_pts={self.n_pts})"


def grid(m_max, n_pts):
    return np.linspace(-m_max, m_max, n_pts)


def spacing(m_max, n_pts):
    return 2.0 * m_max / (n_pts - 1)


def trapezoid_weights(m_max, n_pts):
    weights = np.full(n_pts, spacing(m_max, n_pts))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


def default_m_max(beta):
    return 20.0 / beta


def symbol(poly, m):
    if poly is None:
        return np.ones_like(np.asarray(m, dtype=float), dtype=complex)
    return np.asarray(poly(1j * np.asarray(m, dtype=float)), dtype=complex)


def _check_same_grid(f, g):
    if not f.same_grid(g):
        raise StructuralError(f"grids differ: {f!r} and {g!r}")


def norm_weight(m, beta, mu):
    m = np.abs(np.asarray(m, dtype=float))
    return (1.0 + m) ** mu * np.exp(beta * m)


def ebeta_norm(h, beta, mu):
    """
    Grid sup of (1 + |m|)^mu exp(beta |m|) |h(m)|.

    Parameters
    ----------
    h : SampledLine
    beta : float
        Exponential decay rate, positive.
    mu : float
        Polynomial decay rate, greater than 1.

    Returns
    -------
    norm : float
    """
    if h.values.size == 0:
        raise StructuralError("cannot take the norm of an empty grid")
    if beta <= 0 or mu <= 1:
        raise StructuralError(f"need beta > 0 and mu > 1, got beta={beta}, mu={mu}")
    return float(np.max(norm_weight(h.m, beta, mu) * np.abs(h.values)))


def star_arrays(f_values, g_values, q1_values, q2_values, weights, r_values=None):
    """
    Star product on raw arrays whose last axis runs over the m-grid.

    ``q1_values`` and ``q2_values`` are the symbols Q1(im), Q2(im) sampled on
    the same grid; ``weights`` are the trapezoid weights. Leading axes of
    ``f_values`` and ``g_values`` must broadcast together.
    """
    f_values, g_values = np.broadcast_arrays(
        np.asarray(f_values, dtype=complex), np.asarray(g_values, dtype=complex)
    )
    n = f_values.shape[-1]
    centre = (n - 1) // 2
    fq = f_values * q1_values
    gq = g_values * q2_values * weights
    lead_shape = f_values.shape[:-1]
    fq = fq.reshape(-1, n)
    gq = gq.reshape(-1, n)
    out = np.empty_like(fq)
    for row in range(fq.shape[0]):
        # f(m_j - m_k) sits at index j - k + centre; outside the grid it is zero
        out[row] = np.convolve(fq[row], gq[row])[centre:centre + n]
    out = out.reshape(lead_shape + (n,))
    if r_values is not None:
        out = out / r_values
    return out


def star_product(f, g, Q1=None, Q2=None, R=None):
    """
    Symbol-weighted convolution

    (f * g)(m) = 1/R(im) sum_k Q1(i(m - m_k)) f(m - m_k) Q2(i m_k) g(m_k) h_m

    with f extended by zero off the grid. Missing polynomials mean 1.
    """
    _check_same_grid(f, g)
    m = f.m
    r_values = symbol(R, m)
    small = np.abs(r_values) < SINGULAR_SYMBOL
    if np.any(small):
        offending = float(m[np.argmax(small)])
        raise SingularSymbolError(
            f"R(im) vanishes at m={offending} on the grid", m=offending
        )
    values = star_arrays(
        f.values, g.values, symbol(Q1, m), symbol(Q2, m), f.weights, r_values
    )
    return f.with_values(values)


def classical_convolution(f, g):
    "Plain convolution on the grid: the star product with Q1 = Q2 = R = 1."
    return star_product(f, g)


def inverse_fourier_arrays(values, m, weights, z):
    """
    (2 pi)^(-1/2) sum_j values_j exp(i z m_j) w_j along the last axis.

    ``z`` may be a scalar or an array; the result has shape
    ``values.shape[:-1] + np.shape(z)``.
    """
    z = np.asarray(z, dtype=complex)
    phase = np.exp(1j * np.multiply.outer(z, m)) * weights
    result = np.tensordot(np.asarray(values, dtype=complex), phase, axes=([-1], [-1]))
    return result / np.sqrt(2.0 * np.pi)


def inverse_fourier(h, z):
    """
    Trapezoid rule for the inverse Fourier transform of ``h`` at ``z``.

    Meaningful while |Im z| stays below the exponential decay rate of h.
    """
    result = inverse_fourier_arrays(h.values, h.m, h.weights, z)
    if np.ndim(result) == 0:
        return complex(result)
    return result


def product_identity_check(f, g, z):
    """
    |F^-1(f) F^-1(g) - F^-1((2 pi)^(-1/2) f conv g)| at ``z``.
    """
    left = inverse_fourier(f, z) * inverse_fourier(g, z)
    conv = classical_convolution(f, g)
    right = inverse_fourier(conv, z) / np.sqrt(2.0 * np.pi)
    return float(np.max(np.abs(left - right)))


def empirical_star_constant(Q1, Q2, R, m_max, n_pts, mu):
    """
    The grid constant bounding the star product in E_(beta, mu):

    sup_m (1+|m|)^mu / |R(im)| sum_k |Q1(i(m-m_k))| |Q2(i m_k)|
        (1+|m-m_k|)^-mu (1+|m_k|)^-mu h_m

    The exponential weights cancel, so beta does not enter.
    """
    m = grid(m_max, n_pts)
    weights = trapezoid_weights(m_max, n_pts)
    r_abs = np.abs(symbol(R, m))
    if np.any(r_abs < SINGULAR_SYMBOL):
        raise SingularSymbolError("R(im) vanishes on the grid")
    diff = m[:, None] - m[None, :]
    kernel = (
        np.abs(symbol(Q1, diff))
        * (1.0 + np.abs(diff)) ** (-mu)
        * np.abs(symbol(Q2, m))[None, :]
        * (1.0 + np.abs(m))[None, :] ** (-mu)
        * weights[None, :]
    )
    constant = float(np.max((1.0 + np.abs(m)) ** mu / r_abs * kernel.sum(axis=1)))
    log.debug("empirical star constant %s on %s nodes", constant, n_pts)
    return constant


def richardson_estimate(coarse, fine, order=2):
    """
    Error estimate of ``fine`` from two runs whose step differs by a factor 2.
    """
    return float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))) / (2.0 ** order - 1.0)

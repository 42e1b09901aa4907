"""
Good coverings of a punctured disc in the eps-plane, the directions and
time domains associated with them, and the separation of the inner and
outer time domains.
"""
import logging
import math

import numpy as np

from .errors import ContradictionError, GeometryError, SectorError, TurnpointError
from .model import eps_power
from .turning import sector_admissibility
from .utils import to_jsonable

log = logging.getLogger("turnpoint")

MESH_POINTS = 10000
SCAN_CANDIDATES = 720


def wrap(angle):
    "Representative of ``angle`` in [-pi, pi)."
    return (angle + math.pi) % (2 * math.pi) - math.pi


class Sector:
    """
    An open sector of the plane, possibly truncated to r_min < |z| < r_max.
    """

    def __init__(self, bisector, aperture, r_min=0.0, r_max=math.inf):
        if not 0 < aperture < 2 * math.pi:
            raise GeometryError(f"aperture must lie in (0, 2 pi), got {aperture}")
        if not 0 <= r_min < r_max:
            raise GeometryError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
        self.bisector = float(bisector)
        self.aperture = float(aperture)
        self.r_min = float(r_min)
        self.r_max = float(r_max)

    def contains_angle(self, angle):
        return np.abs(wrap_array(np.asarray(angle) - self.bisector)) < self.aperture / 2

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        radius = np.abs(z)
        return self.contains_angle(np.angle(z)) & (radius > self.r_min) & (radius < self.r_max)

    def angle_mesh(self, n=9, margin=1e-6):
        "Angles across the sector, continuous around the bisector."
        half = self.aperture / 2 - margin
        return self.bisector + np.linspace(-half, half, n)

    def to_mapping(self):
        return {
            "bisector": self.bisector,
            "aperture": self.aperture,
            "r_min": self.r_min,
            "r_max": self.r_max if math.isfinite(self.r_max) else "inf",
        }


def wrap_array(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


class GoodCovering:
    """
    A cyclic family of sectors of radius ``eps0`` whose consecutive members
    overlap, no three of which meet, and whose union is the punctured disc.
    """

    def __init__(self, sectors, aperture_target, eps0):
        self.sectors = tuple(sectors)
        self.aperture_target = float(aperture_target)
        self.eps0 = float(eps0)
        if len(self.sectors) < 2:
            raise GeometryError("a good covering needs at least two sectors")
        self.check()

    def __len__(self):
        return len(self.sectors)

    def __getitem__(self, index):
        return self.sectors[index % len(self.sectors)]

    def membership(self, n=MESH_POINTS):
        angles = np.linspace(-np.pi, np.pi, n, endpoint=False)
        return angles, np.array([s.contains_angle(angles) for s in self.sectors])

    def check(self):
        angles, member = self.membership()
        count = member.sum(axis=0)
        if np.any(count == 0):
            raise GeometryError(
                f"the sectors leave the direction {angles[np.argmax(count == 0)]:.4f} uncovered"
            )
        if np.any(count > 2):
            raise GeometryError(
                f"three sectors meet at the direction {angles[np.argmax(count > 2)]:.4f}"
            )
        for p in range(len(self.sectors)):
            q = (p + 1) % len(self.sectors)
            if not np.any(member[p] & member[q]):
                raise GeometryError(f"sectors {p} and {q} do not overlap")

    def overlap_bisector(self, p):
        """
        Middle direction of the overlap of sectors p and p+1, continuous with
        the bisector of sector p.
        """
        first, second = self[p], self[p + 1]
        gap = wrap(second.bisector - first.bisector)
        edge_first = first.bisector + first.aperture / 2
        edge_second = first.bisector + gap - second.aperture / 2
        return 0.5 * (edge_first + edge_second)

    def to_mapping(self):
        return {
            "aperture_target": self.aperture_target,
            "eps0": self.eps0,
            "sectors": [s.to_mapping() for s in self.sectors],
        }


def build_covering(count, aperture_target, eps0, slack=0.1):
    """
    Equally spaced sectors of bisectors 2 pi p / count.

    The common aperture is max(aperture_target, 2 pi / count) + xi with
    xi = slack * aperture_target, reduced if needed so that no three
    sectors meet.
    """
    if count < 2:
        raise GeometryError(f"count must be at least 2, got {count}")
    base = max(aperture_target, 2 * math.pi / count)
    ceiling = 4 * math.pi / count if count > 2 else 2 * math.pi
    if base >= ceiling:
        raise GeometryError(
            f"{count} sectors of aperture {aperture_target:.4f} cannot avoid triple overlaps"
        )
    xi = min(slack * aperture_target, 0.5 * (ceiling - base))
    aperture = base + xi
    sectors = [
        Sector(2 * math.pi * p / count, aperture, 0.0, eps0) for p in range(count)
    ]
    log.debug("covering of %s sectors with aperture %.5f", count, aperture)
    return GoodCovering(sectors, aperture_target, eps0)


class AssociatedFamily:
    """
    Directions tied to a good covering, with the data that makes the
    Laplace integrals along them converge.

    For the inner family, ``directions`` are the bisectors d_p of the
    Borel-plane sectors S_{d_p} of opening ``aperture``; time points are
    t = x eps^(chi - alpha) with x in the sector X of bisector
    ``x_direction``, opening ``x_aperture`` and radius ``rho_X``. For the
    outer family, ``directions`` are the bisectors u_j of sectors U_{u_j}
    of opening ``aperture`` and time points range over
    alpha_inf < arg t < beta_inf, |t| > Delta_nu |eps|^(gamma - Gamma).
    """

    def __init__(self, kind, covering, directions, aperture, theta, deltas, params,
                 rho_X=None, x_direction=0.0, x_aperture=None, Delta_nu=None,
                 alpha_inf=None, beta_inf=None, reports=None):
        self.kind = kind
        self.covering = covering
        self.directions = tuple(float(d) for d in directions)
        self.aperture = float(aperture)
        self.theta = theta
        self.deltas = tuple(deltas)
        self.params = params
        self.rho_X = rho_X
        self.x_direction = float(x_direction)
        self.x_aperture = x_aperture
        self.Delta_nu = Delta_nu
        self.alpha_inf = alpha_inf
        self.beta_inf = beta_inf
        self.reports = tuple(reports or ())

    @property
    def delta1(self):
        return self.deltas[0]

    def sector_range(self, index):
        d = self.directions[index % len(self.directions)]
        return d - self.aperture / 2, d + self.aperture / 2

    def _clamp(self, index, target):
        low, high = self.sector_range(index)
        centre = 0.5 * (low + high)
        target = centre + wrap(target - centre)
        return min(max(target, low), high)

    def inner_T(self, x, eps):
        "eps^alpha t for t = x eps^(chi - alpha)."
        p = self.params
        t = complex(x) * eps_power(eps, p.chi - p.alpha)
        return eps_power(eps, p.alpha) * t

    def laplace_direction(self, index, T):
        """
        Ray of S_{d_p} closest to arg T; the cosine condition is checked.
        """
        kappa = self.params.kappa
        arg_T = np.angle(T)
        direction = self._clamp(index, arg_T)
        cosine = math.cos(kappa * (direction - arg_T))
        if cosine < self.delta1:
            raise SectorError(
                f"cos(kappa*(gamma - arg T)) = {cosine:.4f} below {self.delta1} in sector {index}"
            )
        return direction

    def outer_ratio_arg(self, t, eps):
        return float(np.angle(complex(t) / eps_power(eps, self.params.gamma)))

    def outer_direction(self, index, t, eps):
        """
        u_j^Delta(eps, t): the ray of U_{u_j} closest to -arg(t/eps^gamma),
        with cos(u + arg(t/eps^gamma)) >= delta1_inf checked.
        """
        phi = self.outer_ratio_arg(t, eps)
        direction = self._clamp(index, -phi)
        cosine = math.cos(direction + phi)
        if cosine < self.delta1:
            raise SectorError(
                f"cos(u + arg(t/eps^gamma)) = {cosine:.4f} below {self.delta1} in sector {index}"
            )
        return direction

    def to_mapping(self):
        return to_jsonable({
            "kind": self.kind,
            "covering": self.covering.to_mapping(),
            "directions": list(self.directions),
            "aperture": self.aperture,
            "theta": self.theta,
            "deltas": list(self.deltas),
            "rho_X": self.rho_X,
            "x_direction": self.x_direction,
            "x_aperture": self.x_aperture,
            "Delta_nu": self.Delta_nu,
            "alpha_inf": self.alpha_inf,
            "beta_inf": self.beta_inf,
            "reports": [r.to_mapping() for r in self.reports],
        })


def _candidates():
    "0, 0.5 deg, ..., in increasing order of angle in [0, 2 pi)."
    return [2 * math.pi * k / SCAN_CANDIDATES for k in range(SCAN_CANDIDATES)]


def _eps_mesh(sector, eps0, n_ang=9, radii=(0.25, 0.5, 0.9)):
    angles = sector.angle_mesh(n_ang)
    return [r * eps0 * np.exp(1j * a) for r in radii for a in angles]


def associate_inner(cov, spec, p, rho, aperture, rho_X, x_aperture, x_direction=0.0,
                    delta1=0.1, delta2=None, r_QRD=None):
    """
    Pick, for each sector of ``cov``, the first direction d_p (0.5 degree
    scan) such that S_{d_p} union the disc of radius ``rho`` is admissible
    and eps^alpha t falls within theta/2 of d_p, with a Laplace ray of
    S_{d_p} satisfying the cosine condition, for every eps of the sector
    and every t = x eps^(chi - alpha), x in X.

    theta is pi/kappa plus half the aperture of S_{d_p}.
    """
    if p.alpha >= p.chi:
        raise GeometryError(f"need alpha < chi, got alpha={p.alpha}, chi={p.chi}")
    if r_QRD is None:
        m = np.linspace(-20 / p.beta, 20 / p.beta, 65)
        r_QRD = float(np.min(np.abs(spec.Qpoly(1j * m) / spec.RD(1j * m))))
    delta2 = delta1 / 2 if delta2 is None else delta2
    theta = math.pi / p.kappa + aperture / 2
    x_mesh = [
        radius * rho_X * np.exp(1j * (x_direction + a))
        for radius in (0.1, 0.5, 1.0)
        for a in np.linspace(-x_aperture / 2, x_aperture / 2, 5)
    ]
    admissible = {}
    directions, reports = [], []
    for index, sector in enumerate(cov.sectors):
        eps_mesh = _eps_mesh(sector, cov.eps0)
        T_args = np.array([
            np.angle(complex(x) * eps_power(e, p.chi)) for e in eps_mesh for x in x_mesh
        ])
        chosen = None
        for k, d in enumerate(_candidates()):
            offsets = np.abs(wrap_array(T_args - d))
            if np.any(offsets >= theta / 2):
                continue
            # Laplace ray: clamp arg T into S_d
            beyond = np.maximum(offsets - aperture / 2, 0.0)
            if np.any(np.cos(p.kappa * beyond) < delta1):
                continue
            if k not in admissible:
                admissible[k] = sector_admissibility(d, aperture, rho, spec, p, r_QRD)
            if admissible[k].passed:
                chosen = (d, admissible[k])
                break
        if chosen is None:
            raise GeometryError(
                f"no admissible direction for inner sector {index} among {SCAN_CANDIDATES} candidates"
            )
        directions.append(chosen[0])
        reports.append(chosen[1])
        log.debug("inner sector %s: direction %.4f", index, chosen[0])
    log.info("associated %s inner directions", len(directions))
    return AssociatedFamily(
        "inner", cov, directions, aperture, theta, (delta1, delta2), p,
        rho_X=rho_X, x_direction=x_direction, x_aperture=x_aperture, reports=reports,
    )


def associate_outer(cov, spec, p, aperture, delta1, alpha_inf, beta_inf, Delta_nu,
                    delta2=None, t_max=10.0):
    """
    Pick, for each sector of ``cov``, the first direction u_j (0.5 degree
    scan) whose sector U_{u_j} of opening ``aperture`` contains no root of
    F_2 and from which, for every eps of the sector and t of the time
    sector, a ray u with cos(u + arg(t/eps^gamma)) >= delta1 can be drawn.
    """
    if delta1 > 1:
        raise GeometryError(f"delta1={delta1} exceeds 1: no direction can satisfy the cosine condition")
    if Delta_nu <= p.nu / delta1:
        raise GeometryError(f"need Delta_nu > nu/delta1 = {p.nu / delta1:.4g}, got {Delta_nu}")
    delta2 = delta1 / 2 if delta2 is None else delta2
    roots = spec.forcing.F2.roots()
    root_args = np.angle(roots) if len(roots) else np.array([])
    family = AssociatedFamily(
        "outer", cov, [0.0] * len(cov), aperture, None, (delta1, delta2), p,
        Delta_nu=Delta_nu, alpha_inf=alpha_inf, beta_inf=beta_inf,
    )
    reach = math.acos(min(delta1, 1.0))
    directions = []
    for index, sector in enumerate(cov.sectors):
        eps_mesh = _eps_mesh(sector, cov.eps0)
        t_args = np.linspace(alpha_inf, beta_inf, 7)[1:-1]
        phis = np.array([
            family.outer_ratio_arg(np.exp(1j * a), e) for e in eps_mesh for a in t_args
        ])
        chosen = None
        blocked = []
        for u in _candidates():
            if len(root_args) and np.any(np.abs(wrap_array(root_args - u)) <= aperture / 2):
                blocked.append(u)
                continue
            gaps = np.abs(wrap_array(-phis - u)) - aperture / 2
            if np.all(gaps <= reach * (1 - 1e-9)):
                chosen = u
                break
        if chosen is None:
            raise GeometryError(
                f"no outer direction for sector {index}; F2 roots {to_jsonable(list(roots))} "
                f"block {len(blocked)} candidates"
            )
        directions.append(chosen)
        log.debug("outer sector %s: direction %.4f", index, chosen)
    family.directions = tuple(directions)
    log.info("associated %s outer directions", len(directions))
    return family


def scaling_gap(p, rho_X, Delta_nu):
    """
    Margin (chi - alpha) - (gamma - Gamma) between the inner and outer time
    scales and the eps below which the two time domains are disjoint.

    Returns
    -------
    margin : Fraction
    eps_threshold : float
        (Delta_nu / rho_X)^(1/margin), where rho_X eps^(chi - alpha) meets
        Delta_nu eps^(gamma - Gamma).
    """
    margin = (p.chi - p.alpha) - (p.gamma - p.Gamma)
    if margin <= 0:
        raise ContradictionError(
            f"chi - alpha = {p.chi - p.alpha} does not exceed gamma - Gamma = {p.gamma - p.Gamma}"
        )
    threshold = (Delta_nu / rho_X) ** (1.0 / float(margin))
    return margin, threshold


def domains_disjoint(eps, p, rho_X, Delta_nu):
    """
    Whether the inner radius rho_X |eps|^(chi - alpha) stays below the
    outer radius Delta_nu |eps|^(gamma - Gamma).
    """
    size = abs(eps)
    inner = rho_X * size ** float(p.chi - p.alpha)
    outer = Delta_nu * size ** float(p.gamma - p.Gamma)
    return inner < outer


def check_family(family, probe):
    """
    Evaluate the family's direction selector on ``probe``, a list of
    (sector index, eps, time point) triples, returning the number of
    failures. Inner probes carry x, outer probes t.
    """
    failures = 0
    for index, eps, point in probe:
        try:
            if family.kind == "inner":
                family.laplace_direction(index, family.inner_T(point, eps))
            else:
                family.outer_direction(index, point, eps)
        except TurnpointError:
            failures += 1
    return failures

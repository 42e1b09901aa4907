"""
Command-line front end: check the exponent constraints, follow the turning
points, solve the inner and outer problems, measure the flatness of the
cocycles and report the Gevrey orders.

Every stage writes into ``<out>/<stage>-<digest>/``, the digest hashing the
configuration together with the package version.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ._version import __version__
from .asymptotics import (
    CocycleEvaluator,
    FlatnessFit,
    agrees,
    eps_ladder,
    fit_flatness,
    fit_to_mapping,
    gevrey_report,
)
from .errors import DomainError, PipelineOrderError, StructuralError, TurnpointError
from .geometry import associate_inner, associate_outer, build_covering, domains_disjoint, scaling_gap
from .inner import inner_pde_residual, inner_rational_residual, solve_inner
from .model import (
    EquationSpec,
    ScaleParams,
    check_scaling_identities,
    check_smallness,
    eps_power,
    leading_index,
    load_config,
    validate_inner,
    validate_outer,
)
from .outer import outer_pde_residual, outer_rational_residual, solve_outer
from .turning import merging_exponent, mu_window, root_locus, rouche_count
from .utils import FileManager, RunArchive, apply_overrides, content_digest, parse_complex

log = logging.getLogger("turnpoint")

EXIT_OK = 0
EXIT_CONSTRAINT = 1
EXIT_INPUT = 2
EXIT_ORDER = 3
EXIT_NUMERICAL = 4

DEFAULT_COVERING = {"inner_count": 12, "outer_count": 4, "slack": 0.1}
DEFAULT_INNER = {
    "delta1": 0.1,
    "delta2": None,
    "aperture": 1.0,
    "rho_X": 1.0,
    "x_aperture": 0.1,
    "x_direction": 0.0,
}
DEFAULT_OUTER = {
    "delta1": 0.1,
    "delta2": None,
    "rho": 0.04,
    "aperture": math.pi / 4,
    "alpha_inf": -0.3,
    "beta_inf": 0.3,
    "Delta_nu": None,
}
DEFAULT_SOLVER = {"tol": 1e-9, "max_iter": 200, "n_r": 160, "n_m": 2049, "m_max": None, "quad_nodes": 20}
DEFAULT_FLATNESS = {
    "index": 0,
    "n_eps": 6,
    "inner_eps": [0.316, 0.178],
    "outer_eps": [0.01, 0.001],
    "probe_x": [[0.0, 0.5]],
    "probe_t": [[1.0, 0.0]],
    "probe_z": [0.0],
    "inner_orders": None,
    "outer_orders": None,
}
DEFAULT_ZETA1 = 0.01
DEFAULT_OUTPUT_DIR = "turnpoint-output"

ROOT_EPS = np.geomspace(1e-2, 1e-6, 12)
ROUCHE_EPS = 1e-3
EXPONENT_TOLERANCE = 0.02
CONTRACTION_TARGET = 0.75
CONTRACTION_WITHIN = 10
RESIDUAL_TARGET = 1e-3
STAGES = ("validate", "roots", "solve-inner", "solve-outer", "flatness", "report")


def _block(config, name, defaults):
    block = dict(defaults)
    given = config.get(name, {})
    if not isinstance(given, dict):
        raise StructuralError(f"the {name} block must be a mapping, got {given!r}")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise StructuralError(f"unknown keys {unknown} in the {name} block")
    block.update(given)
    return block


def _parse_eps(text):
    "Comma-separated eps values; complex values are written re+imj."
    values = [parse_complex(item) for item in text.split(",") if item.strip()]
    if not values:
        raise StructuralError(f"no eps values in {text!r}")
    if any(value == 0 for value in values):
        raise DomainError("eps must be nonzero")
    return values


class RunConfig:
    """
    A run configuration with defaults resolved: the equation, the scale
    parameters and the covering, geometry, solver and flatness blocks.

    Parameters
    ----------
    config : dict
        An equation document with optional run blocks.
    spec_path : str or Path, optional
        Where ``config`` was read from.
    output_dir : str or Path, optional
        Overrides the ``output_dir`` entry; not part of the digest.
    """

    def __init__(self, config, spec_path=None, output_dir=None):
        self.config = config
        self.spec_path = spec_path
        self.spec = EquationSpec.from_json(config)
        if "params" not in config:
            raise StructuralError("the configuration lacks a params block")
        self.params = ScaleParams.from_mapping(config["params"], self.spec)
        self.covering = _block(config, "covering", DEFAULT_COVERING)
        self.inner = _block(config, "inner", DEFAULT_INNER)
        self.outer = _block(config, "outer", DEFAULT_OUTER)
        self.solver = _block(config, "solver", DEFAULT_SOLVER)
        self.flatness = _block(config, "flatness", DEFAULT_FLATNESS)
        self.zeta1 = float(config.get("zeta1", DEFAULT_ZETA1))
        self.output_dir = Path(output_dir or config.get("output_dir", DEFAULT_OUTPUT_DIR))
        hashed = {key: value for key, value in config.items() if key != "output_dir"}
        self.digest = content_digest(hashed, __version__)
        self.probe_x = [parse_complex(x) for x in self.flatness["probe_x"]]
        self.probe_t = [parse_complex(t) for t in self.flatness["probe_t"]]
        self.probe_z = [parse_complex(z) for z in self.flatness["probe_z"]]
        if not (self.probe_x and self.probe_t and self.probe_z):
            raise StructuralError("probe_x, probe_t and probe_z must not be empty")
        self._families = {}

    @classmethod
    def from_args(cls, args):
        config = apply_overrides(load_config(args.config), args.override)
        return cls(config, args.config, args.out)

    def stage_dir(self, stage):
        return self.output_dir / f"{stage}-{self.digest}"

    def manager(self, stage):
        return FileManager(self.stage_dir(stage), allowed_modes=("x", "w"))

    def require(self, stage):
        "The summary of ``stage`` for this configuration."
        path = self.stage_dir(stage) / "summary.json"
        if not path.exists():
            raise PipelineOrderError(stage)
        with open(path) as f:
            return json.load(f)

    @property
    def outer_Delta_nu(self):
        Delta_nu = self.outer["Delta_nu"]
        if Delta_nu is None:
            Delta_nu = 1.25 * self.params.nu / self.outer["delta1"]
        return float(Delta_nu)

    def family(self, kind):
        if kind not in self._families:
            p = self.params
            count = int(self.covering[f"{kind}_count"])
            covering = build_covering(count, 2 * math.pi / count, p.eps0, self.covering["slack"])
            if kind == "inner":
                block = self.inner
                family = associate_inner(
                    covering, self.spec, p, p.rho, block["aperture"], block["rho_X"],
                    block["x_aperture"], x_direction=block["x_direction"],
                    delta1=block["delta1"], delta2=block["delta2"],
                )
            else:
                block = self.outer
                family = associate_outer(
                    covering, self.spec, p, block["aperture"], block["delta1"],
                    block["alpha_inf"], block["beta_inf"], self.outer_Delta_nu,
                    delta2=block["delta2"],
                )
            self._families[kind] = family
        return self._families[kind]

    def ladder(self, kind):
        high, low = (float(x) for x in self.flatness[f"{kind}_eps"])
        family = self.family(kind)
        return eps_ladder(family.covering, self.flatness["index"], high, low, self.flatness["n_eps"])

    def probe(self, kind):
        points = self.probe_x if kind == "inner" else self.probe_t
        return [(point, z) for point in points for z in self.probe_z]

    def orders(self, kind):
        orders = self.flatness[f"{kind}_orders"]
        if orders is None:
            p = self.params
            expected = float(p.chi * p.kappa) if kind == "inner" else float(p.gamma)
            orders = [expected / 2, expected, 2 * expected]
        return [float(order) for order in orders]

    def rho(self, kind):
        return self.params.rho if kind == "inner" else float(self.outer["rho"])


def _sector_index(family, eps):
    for index, sector in enumerate(family.covering.sectors):
        if sector.contains(eps):
            return index
    raise DomainError(f"eps={eps} lies outside the {family.kind} covering")


def cmd_validate(run, eps=None):
    """
    Exact constraint reports for the inner and outer constructions; exit 0
    iff both pass. The scaling identities and the smallness of the
    coefficients are reported alongside.
    """
    spec, p = run.spec, run.params
    reports = {
        "inner": validate_inner(spec, p),
        "outer": validate_outer(spec, p),
        "scaling": check_scaling_identities(spec, p),
        "smallness": check_smallness(spec, run.zeta1),
    }
    passed = reports["inner"].overall and reports["outer"].overall
    summary = {
        "pass": passed,
        "reports": {name: report.overall for name, report in reports.items()},
        "binding": {
            name: report.binding.cid for name, report in reports.items() if report.binding is not None
        },
    }
    with run.manager("validate") as manager:
        for name, report in reports.items():
            manager.write_json("constraints", f"{name}.json", report.to_mapping(), mode="w")
        manager.write_json("summary", "summary.json", summary, mode="w")
    for name, report in reports.items():
        entry = report.binding
        if entry is None:
            continue
        level = logging.ERROR if name in ("inner", "outer") else logging.WARNING
        log.log(level, "%s constraint %s fails: %s (lhs %s, rhs %s)",
                name, entry.cid, entry.citation, entry.lhs, entry.rhs)
    log.info("constraint reports written to %s", run.stage_dir("validate"))
    return EXIT_OK if passed else EXIT_CONSTRAINT


def cmd_roots(run, eps=None):
    """
    Root locus of P(., eps), the fitted merging exponent and a Rouche count
    of the merging roots.
    """
    spec = run.spec
    eps_seq = list(ROOT_EPS) if eps is None else eps
    rows = root_locus(spec, eps_seq)
    exponent = merging_exponent(spec, eps_seq)
    j1 = leading_index(spec)
    k_j1 = spec.k_exp[j1 - 1]
    expected = Fraction(spec.m0 - spec.m_exp[j1], k_j1)
    low, high = mu_window(spec)
    mu = (low + high) / 2
    count = rouche_count(ROUCHE_EPS, float(mu), spec)
    passed = abs(exponent - float(expected)) <= EXPONENT_TOLERANCE and count == k_j1
    summary = {
        "exponent": exponent,
        "expected_exponent": expected,
        "mu_window": [low, high],
        "rouche": {"eps": ROUCHE_EPS, "mu": mu, "count": count, "expected": k_j1},
        "pass": passed,
    }
    with run.manager("roots") as manager:
        manager.write_csv("roots", "roots.csv", ("eps", "index", "re", "im", "abs"), rows, mode="w")
        manager.write_json("summary", "summary.json", summary, mode="w")
    log.info("merging exponent %.4f (expected %s), %s roots inside |t| = |eps|^%s",
             exponent, expected, count, mu)
    return EXIT_OK if passed else EXIT_CONSTRAINT


def _solve_entry(fp, index, direction, residuals, rational):
    ratios = fp.contraction_ratios
    contracting = fp.iterations <= 1 or any(r < CONTRACTION_TARGET for r in ratios[:CONTRACTION_WITHIN])
    size = fp.norms[-1] if fp.norms else 0.0
    return {
        "eps": fp.eps,
        "sector": index,
        "direction": direction,
        "iterations": fp.iterations,
        "residual_norm": fp.residual_norm,
        "norm": size,
        "contraction_ratios": list(ratios),
        "pde_residuals": residuals,
        "rational_residuals": rational,
        "contracting": contracting,
        "small_residual": fp.residual_norm <= 1e-6 * max(size, 1e-300),
        "exact": all(r < RESIDUAL_TARGET for r in residuals),
    }


def _solve_stage(run, kind, eps):
    spec, p = run.spec, run.params
    family = run.family(kind)
    if eps is None:
        ladder = run.ladder(kind)
        eps = [ladder[0], ladder[len(ladder) // 2], ladder[-1]]
    stage = f"solve-{kind}"
    entries = []
    for k, value in enumerate(eps):
        index = _sector_index(family, value)
        if kind == "inner":
            x = run.probe_x[0]
            T = family.inner_T(x, value)
            direction = family.laplace_direction(index, T)
            fp = solve_inner(value, spec, p, direction=direction, T=T, **run.solver)
            t = complex(x) * eps_power(value, p.chi - p.alpha)
            residuals = [inner_pde_residual(t, z, value, fp, spec, p) for z in run.probe_z]
            rational = [inner_rational_residual(t, z, value, fp, spec, p) for z in run.probe_z]
        else:
            t = run.probe_t[0]
            direction = family.outer_direction(index, t, value)
            fp = solve_outer(
                value, spec, p, direction=direction, t_min=min(abs(x) for x in run.probe_t),
                delta1=family.delta1, **run.solver
            )
            residuals = [outer_pde_residual(t, z, value, fp, spec, p, family.delta1) for z in run.probe_z]
            rational = [outer_rational_residual(t, z, value, fp, spec, p, family.delta1) for z in run.probe_z]
        fp.save(run.stage_dir(stage) / f"eps-{k}", mode="w")
        entry = _solve_entry(fp, index, direction, residuals, rational)
        if not (entry["contracting"] and entry["small_residual"] and entry["exact"]):
            log.warning("%s solve at eps=%s misses a check: %s", kind, value, entry)
        entries.append(entry)
    summary = {
        "kind": kind,
        "solves": entries,
        "pass": all(e["contracting"] and e["small_residual"] and e["exact"] for e in entries),
    }
    with run.manager(stage) as manager:
        manager.write_json("summary", "summary.json", summary, mode="w")
    log.info("%s %s solves written to %s", len(entries), kind, run.stage_dir(stage))
    return EXIT_OK if summary["pass"] else EXIT_CONSTRAINT


def cmd_solve_inner(run, eps=None):
    "Inner fixed points at ``eps`` (default: three points of the inner ladder)."
    return _solve_stage(run, "inner", eps)


def cmd_solve_outer(run, eps=None):
    "Outer fixed points at ``eps`` (default: three points of the outer ladder)."
    return _solve_stage(run, "outer", eps)


def cmd_flatness(run, eps=None):
    """
    Cocycle logs along the ladders of both families, cross-checked against
    direct subtraction wherever that is representable, and their flatness
    fits at the configured orders.
    """
    run.require("solve-inner")
    run.require("solve-outer")
    index = run.flatness["index"]
    rows, fits, disagreements = [], {}, []
    for kind in ("inner", "outer"):
        family = run.family(kind)
        ladder = run.ladder(kind) if eps is None else eps
        probe = run.probe(kind)
        logs = []
        for value in ladder:
            evaluator = CocycleEvaluator(family, run.spec, value, run.rho(kind), run.solver)
            log_theta = evaluator.sup(index, probe)
            naive = evaluator.naive_sup(index, probe)
            agreement = agrees(log_theta, naive)
            if agreement is False:
                log.warning("%s cocycle at eps=%s: signed log %.4f, subtracted log %.4f",
                            kind, value, log_theta, naive)
                disagreements.append({"kind": kind, "eps": value, "log_theta": log_theta, "naive": naive})
            logs.append(log_theta)
            value = complex(value)
            rows.append((kind, index, value.real, value.imag, abs(value), log_theta, naive, agreement))
        fits[kind] = [fit_to_mapping(fit_flatness(logs, ladder, order)) for order in run.orders(kind)]
    summary = {
        "index": index,
        "fits": fits,
        "disagreements": disagreements,
        "pass": not disagreements,
    }
    with run.manager("flatness") as manager:
        manager.write_csv(
            "cocycles", "cocycles.csv",
            ("kind", "index", "eps_re", "eps_im", "eps_abs", "log_theta", "log_naive", "agrees"),
            rows, mode="w",
        )
        manager.write_json("summary", "summary.json", summary, mode="w")
    log.info("flatness fits written to %s", run.stage_dir("flatness"))
    return EXIT_OK if summary["pass"] else EXIT_CONSTRAINT


def _stage_documents(run):
    documents = {}
    for stage in STAGES[:-1]:
        directory = run.stage_dir(stage)
        if not directory.is_dir():
            continue
        documents[stage] = {}
        for path in sorted(directory.glob("*.json")):
            with open(path) as f:
                documents[stage][path.stem] = json.load(f)
    return documents


def cmd_report(run, eps=None):
    """
    Gevrey orders from the flatness fits, the scaling gap between the time
    domains, and an HDF5 archive of every report of the run.
    """
    flatness = run.require("flatness")
    p = run.params
    fits = {kind: [FlatnessFit(**fit) for fit in flatness["fits"][kind]] for kind in ("inner", "outer")}
    gevrey = gevrey_report(fits["inner"], fits["outer"], p)
    rho_X, Delta_nu = run.inner["rho_X"], run.outer_Delta_nu
    margin, threshold = scaling_gap(p, rho_X, Delta_nu)
    samples = threshold * np.geomspace(0.99, 1e-3, 20)
    disjoint = all(domains_disjoint(value, p, rho_X, Delta_nu) for value in samples)
    summary = {
        "version": __version__,
        "digest": run.digest,
        "gevrey": gevrey,
        "scaling_gap": {
            "margin": margin,
            "eps_threshold": threshold,
            "samples": len(samples),
            "disjoint": disjoint,
        },
        "pass": gevrey["pass"] and disjoint,
    }
    documents = _stage_documents(run)
    with run.manager("report") as manager:
        manager.write_json("summary", "summary.json", summary, mode="w")
    with RunArchive(run.stage_dir("report")) as archive:
        archive.add("report", summary)
        for stage, mappings in documents.items():
            archive.add(stage, mappings)
    log.info("report written to %s", run.stage_dir("report"))
    return EXIT_OK if summary["pass"] else EXIT_CONSTRAINT


COMMANDS: Dict[str, Callable[..., int]] = {
    "validate": cmd_validate,
    "roots": cmd_roots,
    "solve-inner": cmd_solve_inner,
    "solve-outer": cmd_solve_outer,
    "flatness": cmd_flatness,
    "report": cmd_report,
}


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        required=True,
        help="Equation document or run configuration (JSON); bare names resolve against the shipped data.",
    )
    common.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dot-path assignment into the configuration, e.g. params.chi=5. May be repeated.",
    )
    common.add_argument(
        "--eps",
        default=None,
        help="Comma-separated eps values replacing the stage's default list; complex as re+imj.",
    )
    common.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory (default: the configuration's output_dir).",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    parser = argparse.ArgumentParser(prog="turnpoint", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=(command.__doc__ or "").strip().split("\n")[0])
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        run = RunConfig.from_args(args)
        eps = None if args.eps is None else _parse_eps(args.eps)
    except (OSError, KeyError, ValueError, TurnpointError) as err:
        log.error("cannot load %s: %s", args.config, err)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](run, eps)
    except PipelineOrderError as err:
        log.error("%s: run %r first", err, err.stage)
        return EXIT_ORDER
    except TurnpointError as err:
        log.error("%s failed: %s", args.command, err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())

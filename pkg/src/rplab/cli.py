"""``rp-lab``: run one certification experiment from a JSON config and write a report.

Exit codes: 0 all checks pass, 1 some check failed, 2 bad config, 3 solver failure.
``RPLAB_NUM_THREADS`` sets the number of worker threads for column solves.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .boundary import dn_monotonicity, half_difference_residual, half_region, image_covariances, quotient_covariances
from .clifford import a_matrix, clifford_residual, gamma_matrices
from .dirac import (
    anticommutation_residual,
    assemble_dirac,
    boundary_value,
    build_momentum_grid,
    contour_kernel,
    contour_quadrature,
    dirac_gram_lattice,
    dirac_gram_momentum,
    positive_time_dofs,
    propagator_apply,
    spatial_dft,
    square_form_value,
    theta_map,
)
from .geometry import LatticeSpec, StaticMetric, build_lattice, build_reflection, partition_regions
from .linalg import NonConvergenceError, SolverConfig
from .quantization import ReflectionPositivityError, os_quotient, quotient_gram
from .scalar import (
    PotentialField,
    action_identity_residual,
    assemble_operator,
    positive_time_sites,
    reflection_commutation_residual,
    rp_gram,
)
from .studies import action_study, boxed_lattice, dirac_boundary_study, gaussian_source

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_SPACINGS = [0.25, 0.125, 0.0625]


class ConfigError(ValueError):
    pass


def _schema(name: str) -> dict:
    return json.loads(resources.files("rplab").joinpath("schemas", name).read_text(encoding="utf-8"))


def validate_config(cfg) -> dict:
    """Schema check plus the cross-field rules the schema cannot express."""
    validator = jsonschema.Draft202012Validator(_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "(top level)"
        raise ConfigError(f"invalid config at '{where}': {e.message}")
    exp = cfg["experiment"]
    needs_lattice = exp in {"scalar-rp", "dn-compare", "dirac-rp", "quantize"}
    if needs_lattice and "lattice" not in cfg:
        raise ConfigError(f"experiment {exp!r} needs a 'lattice' section")
    if needs_lattice and "mass" not in cfg:
        raise ConfigError(f"experiment {exp!r} needs 'mass'")
    if "lattice" in cfg:
        lat = cfg["lattice"]
        try:
            LatticeSpec(lat["dims"], tuple(lat["extent"]), lat.get("spacing", 1.0),
                        tuple(lat["periodic"]) if "periodic" in lat else None)
        except ValueError as exc:
            raise ConfigError(f"invalid config at 'lattice': {exc}") from exc
    return cfg


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(cfg)


# --- report -------------------------------------------------------------------------------


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


class Report:
    def __init__(self, experiment: str, config: dict):
        self.experiment = experiment
        self.config = config
        self.checks = []
        self.spectra = {}
        self.residuals = {}
        self.diagnostics = {}
        self.timings = {}
        self.error = None

    def check(self, name: str, value, tolerance: float, comparison: str = "<=") -> bool:
        v = _num(value)
        if v is None:
            ok = False
        elif comparison == "<=":
            ok = v <= tolerance
        else:
            ok = v >= tolerance
        self.checks.append({"name": name, "value": v, "tolerance": float(tolerance),
                            "comparison": comparison, "passed": bool(ok)})
        return ok

    def spectrum(self, name: str, values) -> None:
        self.spectra[name] = [float(v) for v in np.sort(np.real(np.asarray(values)))]

    @contextmanager
    def timed(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - t0

    @property
    def passed(self) -> bool:
        return self.error is None and all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        doc = {
            "version": __version__,
            "experiment": self.experiment,
            "config": self.config,
            "passed": self.passed,
            "checks": self.checks,
            "spectra": self.spectra,
            "residuals": self.residuals,
            "diagnostics": self.diagnostics,
            "timings": self.timings,
        }
        if self.error is not None:
            doc["error"] = self.error
        return doc


def report_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def report_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "tolerance", "comparison", "passed"])
    for c in doc["checks"]:
        w.writerow([c["name"], "" if c["value"] is None else repr(c["value"]), repr(c["tolerance"]),
                    c["comparison"], "pass" if c["passed"] else "fail"])
    return buf.getvalue()


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, _schema("report.schema.json"))


def export_report(doc: dict, fmt: str, path=None) -> str:
    text = report_json(doc) if fmt == "json" else report_csv(doc)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# --- config -> library objects ------------------------------------------------------------


def _geometry(cfg: dict):
    lat = cfg["lattice"]
    spec = LatticeSpec(lat["dims"], tuple(lat["extent"]), lat.get("spacing", 1.0),
                       tuple(lat["periodic"]) if "periodic" in lat else None)
    return build_lattice(spec)


def _metric(cfg: dict, geom) -> StaticMetric:
    m = cfg.get("metric", {})
    profile = m.get("profile", "flat")
    try:
        if profile == "flat":
            metric = StaticMetric.flat(geom, m.get("lapse", 1.0))
        elif profile == "cosine-lapse":
            metric = StaticMetric.cosine_lapse(geom, m.get("amplitude", 0.5))
        else:
            F = np.asarray(m["F"], dtype=float)
            G = np.asarray(m.get("G", np.ones((geom.dims - 1,) + geom.spatial_shape)), dtype=float)
            metric = StaticMetric(F=F, G=G)
        metric.check(geom)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config at 'metric': {exc}") from exc
    return metric


def _potential(cfg: dict, geom) -> PotentialField:
    m = cfg.get("metric", {})
    R = None
    if "R" in m:
        R = np.asarray(m["R"], dtype=float)
    elif "R_amplitude" in m:
        if geom.dims < 2:
            raise ConfigError("invalid config at 'metric/R_amplitude': needs a spatial axis")
        n = geom.shape[1]
        x = np.arange(n).reshape([-1] + [1] * (geom.dims - 2))
        R = np.broadcast_to(m["R_amplitude"] * np.cos(2 * np.pi * x / n), geom.spatial_shape)
    try:
        return PotentialField.from_curvature(geom, cfg["mass"], cfg.get("xi", 0.0), R)
    except ValueError as exc:
        raise ConfigError(f"invalid config at 'mass'/'xi': {exc}") from exc


def _solver(cfg: dict) -> SolverConfig:
    s = cfg.get("solver", {})
    return SolverConfig.from_env(tolerance=s.get("tolerance", 1e-12), max_iter=s.get("max_iter"))


def _scalar_setup(cfg: dict):
    geom = _geometry(cfg)
    refl = build_reflection(geom)
    part = partition_regions(geom, refl)
    op = assemble_operator(geom, _metric(cfg, geom), _potential(cfg, geom))
    return geom, refl, part, op


# --- experiments --------------------------------------------------------------------------


def _scalar_gram(cfg, rep, scfg):
    geom, refl, part, op = _scalar_setup(cfg)
    basis = cfg.get("basis", {})
    sites = positive_time_sites(part, basis.get("t_max"), geom)
    scale = max(1.0, float(np.max(np.abs(op.matrix.data))))
    rep.check("reflection_commutation", reflection_commutation_residual(op, refl), 1e-13 * scale)
    with rep.timed("gram"):
        gram = rp_gram(op, refl, sites, scfg, part)
    rep.residuals["solver_max"] = float(np.max(gram.solver_residuals, initial=0.0))
    rep.diagnostics["basis_size"] = int(sites.size)
    return gram


def run_scalar_rp(cfg, rep, scfg, rng):
    gram = _scalar_gram(cfg, rep, scfg)
    rep.check("gram_hermiticity", gram.hermiticity, 1e-10)
    rep.check("gram_min_eig", gram.min_eig, -1e-8, ">=")
    rep.check("solver_residual", rep.residuals["solver_max"], scfg.tolerance)
    rep.spectrum("gram", gram.eigenvalues)


def run_dn_compare(cfg, rep, scfg, rng):
    geom, refl, part, op = _scalar_setup(cfg)
    region = half_region(op, refl, part)
    with rep.timed("image"):
        img = image_covariances(op, refl, region, scfg)
    with rep.timed("quotient"):
        quo = quotient_covariances(op, refl, region, scfg)
    diff = max(float(np.max(np.abs(img.CD - quo.CD))), float(np.max(np.abs(img.CN - quo.CN))))
    rep.check("image_vs_quotient", diff, 1e-8)
    rep.check("half_difference", half_difference_residual(op, refl, region, img, scfg), 1e-10)
    mono = dn_monotonicity(img)
    rep.check("dn_min_eig", mono.min_eig, -1e-8, ">=")
    rep.spectrum("CN_minus_CD", mono.eigenvalues)
    rep.diagnostics["half_region_size"] = int(region.size)


def _momentum_checks(rep, rng, d, modes, n_times, h, m, k):
    cl = gamma_matrices(d)
    grid = build_momentum_grid((modes,) * (d - 1), h, m, n_times)
    s = cl.spinor_dim
    shape = (k, n_times) + grid.spatial_shape + (s,)
    F = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    gram = dirac_gram_momentum(grid, cl, m, spatial_dft(grid, F))
    rep.check(f"momentum_gram_min_eig_d{d}", gram.min_eig, -1e-12, ">=")
    rep.check(f"momentum_gram_hermiticity_d{d}", gram.hermiticity, 1e-10 * max(1.0, np.max(np.abs(gram.matrix))))
    coeff = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    combo = np.tensordot(coeff, F, axes=(0, 0))
    direct = square_form_value(grid, cl, m, combo)
    via_gram = float(np.real(np.vdot(coeff, gram.matrix @ coeff)))
    diag = max(abs(gram.matrix[a, a].real - square_form_value(grid, cl, m, F[a])) / abs(gram.matrix[a, a].real)
               for a in range(k))
    rep.check(f"momentum_vs_square_form_d{d}", max(diag, abs(via_gram - direct) / abs(direct)), 1e-10)
    rep.spectrum(f"momentum_gram_d{d}", gram.eigenvalues)


def run_dirac_rp(cfg, rep, scfg, rng):
    geom = _geometry(cfg)
    m = cfg["mass"]
    d = geom.dims
    refl = build_reflection(geom)
    part = partition_regions(geom, refl)
    cl = gamma_matrices(d)
    D = assemble_dirac(geom, cl, cfg.get("metric", {}).get("lapse", 1.0))
    theta = theta_map(geom, refl, cl)
    rep.check("theta_anticommutation", anticommutation_residual(D, theta), 1e-14)

    basis = cfg.get("basis", {})
    dofs = positive_time_dofs(D, part, basis.get("t_max"))
    limit = basis.get("max_functions")
    if limit is not None and dofs.size > limit:
        dofs = np.sort(rng.choice(dofs, size=limit, replace=False))
    with rep.timed("lattice_gram"):
        lat = dirac_gram_lattice(D, m, theta, dofs, scfg, part)
    rep.check("lattice_gram_hermiticity", lat.hermiticity, 1e-10)
    rep.residuals["lattice_solver_max"] = float(np.max(lat.solver_residuals, initial=0.0))
    # finite-spacing doublers make this indefinite; reported only
    rep.diagnostics["lattice_gram_min_eig"] = lat.min_eig
    rep.spectrum("lattice_gram", lat.eigenvalues)

    study = cfg.get("study", {})
    dims = study.get("dims", [d])
    with rep.timed("momentum"):
        for dd in dims:
            if dd < 2:
                continue
            modes = study.get("modes", geom.shape[1] if d > 1 else 4)
            _momentum_checks(rep, rng, dd, modes, study.get("n_times", 3), geom.spacing, m,
                             basis.get("max_functions", 8))

    spacings = study.get("spacings", DEFAULT_SPACINGS)
    factor = study.get("min_factor", 1.5)
    kw = dict(mass=m, dims=max(d, 2), time_extent=study.get("time_extent", 12.0),
              space_extent=study.get("space_extent", 4.0), cfg=scfg)
    for F in study.get("lapses", [1.0, 4.0]):
        with rep.timed(f"boundary_study_F{F:g}"):
            res = dirac_boundary_study(spacings, lapse=F, **kw)
        rep.diagnostics[f"boundary_gaps_F{F:g}"] = [float(g) for g in res.gaps]
        for i, fac in enumerate(res.factors):
            rep.check(f"boundary_gap_factor_F{F:g}_{i}", fac, factor, ">=")
    _lapse_scaling(rep, study.get("lapses", [1.0, 4.0]), m, max(d, 2), spacings[0], scfg)


def _lapse_scaling(rep, lapses, m, d, h, scfg):
    """Boundary flux of one fixed ``u`` under ``F``: ``sqrt(F) |gamma^0 u|^2 = |u|^2 / sqrt(F)``."""
    geom = boxed_lattice(d, h, 12.0, 4.0)
    cl = gamma_matrices(d)
    D = assemble_dirac(geom, cl)
    f = np.repeat(gaussian_source(geom, 1.5, 0.3), cl.spinor_dim)
    u, _ = propagator_apply(D, m, f, scfg)
    base = boundary_value(D, u, lapse=1.0)
    for F in lapses:
        ratio = boundary_value(D, u, lapse=F) / base
        rep.check(f"lapse_scaling_F{F:g}", abs(ratio - 1.0 / np.sqrt(F)), 1e-14)


def run_clifford_check(cfg, rep, scfg, rng):
    study = cfg.get("study", {})
    if "dims" in study:
        dims = study["dims"]
    elif "lattice" in cfg:
        dims = [cfg["lattice"]["dims"]]
    else:
        dims = list(range(1, 9))
    samples = study.get("samples", 100)
    for d in dims:
        cl = gamma_matrices(d)
        rep.check(f"clifford_residual_d{d}", clifford_residual(cl), 1e-13)
        if d < 2:
            continue
        level, sq, mult = 0.0, 0.0, 0
        half = cl.spinor_dim // 2
        for _ in range(samples):
            p = rng.standard_normal(d - 1)
            m = rng.uniform(0.1, 3.0)
            a = a_matrix(cl, p, m)
            level = max(level, a.level_error)
            sq = max(sq, a.omega_sq_residual / a.omega**2)
            mult = max(mult, abs(a.n_zero - half), abs(a.n_upper - half))
        rep.check(f"a_matrix_levels_d{d}", level, 1e-9)
        rep.check(f"a_matrix_omega_sq_d{d}", sq, 1e-12)
        rep.check(f"a_matrix_multiplicity_d{d}", mult, 0)


def run_action_identity(cfg, rep, scfg, rng):
    study = cfg.get("study", {})
    spacings = study.get("spacings", DEFAULT_SPACINGS)
    d = cfg["lattice"]["dims"] if "lattice" in cfg else 2
    kw = dict(mass=cfg.get("mass", 1.0), dims=d, time_extent=study.get("time_extent", 8.0),
              space_extent=study.get("space_extent", 4.0), cfg=scfg)
    with rep.timed("edge_study"):
        res = action_study(spacings, convention="edge", **kw)
    rep.diagnostics["edge_gaps"] = [float(g) for g in res.gaps]
    for i, fac in enumerate(res.factors):
        rep.check(f"action_gap_factor_{i}", fac, study.get("min_factor", 1.5), ">=")
    with rep.timed("trapezoid_study"):
        exact = action_study(spacings[:1], convention="trapezoid", **kw)
    rep.check("action_trapezoid_exact", exact.gaps[0], 1e-10)


def run_quantize(cfg, rep, scfg, rng):
    gram = _scalar_gram(cfg, rep, scfg)
    rep.check("gram_hermiticity", gram.hermiticity, 1e-8)
    try:
        h = os_quotient(gram)
    except ReflectionPositivityError as exc:
        rep.diagnostics["refusal"] = str(exc)
        rep.check("rp_holds", exc.eigenvalue, -exc.rank_tol, ">=")
        return
    G = quotient_gram(gram, h)
    rep.check("quotient_identity", float(np.max(np.abs(G - np.eye(h.rank)), initial=0.0)), 1e-10)
    P = h.projector
    rep.check("projector_idempotent", float(np.max(np.abs(P @ P - P), initial=0.0)), 1e-12)
    rep.diagnostics.update(rank=h.rank, null_dim=h.null_dim, rank_tol=h.rank_tol)
    rep.spectrum("gram", h.spectrum)


def run_contour_check(cfg, rep, scfg, rng):
    study = cfg.get("study", {})
    e0 = e1 = 0.0
    for t in study.get("times", [0.0, 0.3, 1.0]):
        for w in study.get("omegas", [0.5, 1.0, 2.0]):
            c0, c1 = contour_kernel(t, w)
            q0, q1 = contour_quadrature(t, w)
            e0 = max(e0, abs(c0 - q0) / abs(c0))
            e1 = max(e1, abs(c1 - q1) / abs(c1) if c1 != 0 else abs(q1))
    rep.check("contour_I0_rel_err", e0, 1e-6)
    rep.check("contour_I1_rel_err", e1, 1e-6)


EXPERIMENTS = {
    "scalar-rp": run_scalar_rp,
    "dn-compare": run_dn_compare,
    "dirac-rp": run_dirac_rp,
    "clifford-check": run_clifford_check,
    "action-identity": run_action_identity,
    "quantize": run_quantize,
    "contour-check": run_contour_check,
}


def run_experiment(cfg: dict) -> tuple:
    """Execute a validated config; returns ``(exit_code, report_dict)``."""
    exp = cfg["experiment"]
    rep = Report(exp, cfg)
    rng = np.random.default_rng(cfg.get("seed", 0))
    code = EXIT_PASS
    with rep.timed("total"):
        try:
            EXPERIMENTS[exp](cfg, rep, _solver(cfg), rng)
        except NonConvergenceError as exc:
            rep.error = str(exc)
            rep.check("solver_converged", exc.residual, _solver(cfg).tolerance)
            code = EXIT_SOLVER
    if code == EXIT_PASS and not rep.passed:
        code = EXIT_FAIL
    return code, rep.to_dict()


def _summary(doc: dict, stream) -> None:
    for c in doc["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"{mark} {c['name']}: {c['value']!r} {c['comparison']} {c['tolerance']!r}", file=stream)
    print(f"{doc['experiment']}: {'PASS' if doc['passed'] else 'FAIL'}", file=stream)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rp-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"rp-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--output", "-o", help="report path (default: config 'output', else stdout)")
    run.add_argument("--format", choices=["json", "csv"], default="json")
    val = sub.add_parser("validate", help="check a config file against the schema")
    val.add_argument("config")
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{args.config}: valid {cfg['experiment']} config")
        return EXIT_PASS

    try:
        code, doc = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output or cfg.get("output")
    try:
        text = export_report(doc, args.format, out)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if out is None:
        sys.stdout.write(text)
        _summary(doc, sys.stderr)
    else:
        _summary(doc, sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())

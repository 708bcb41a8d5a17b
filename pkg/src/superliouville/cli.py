"""Batch command-line front end.

Every subcommand reads a strict JSON config (``--config``), writes JSON/CSV
into ``--out`` and exits with 0 (all gates pass), 1 (a quantitative gate or
convergence failure) or 2 (usage or configuration error).
"""
import argparse
import logging
import math
import os
import sys

import numpy as np

from . import _backend, config as cfg
from .blowup import SequenceSpec, detect_concentration, generate_sequence
from .clifford2d import norm2
from .diagnostics import compute_T, run_diagnostics
from .errors import (ConfigError, InvalidThreshold, LinearSolveFailure, NoConvergence,
                     SuperLiouvilleError)
from .geometry import SolutionPair, flat_metric, kelvin_transform, metric_by_name
from .io import ensure_dir, read_field_csv, write_field_csv, write_json
from .operators import exp_guarded
from .solutions import family
from .solver import SolverConfig, asymptotic_boundary, newton_solve

log = logging.getLogger("superliouville")

EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 1, 2

FIELDS = ("u", "psi_norm2", "T_re", "T_im", "e2u", "f_re", "f_im", "g_re", "g_im")
SPINOR_FILES = ("f_re", "f_im", "g_re", "g_im")


class GateFailure(Exception):
    pass


def field_values(pair, name):
    """Node values of an exportable field."""
    if name == "u":
        return pair.u
    if name == "psi_norm2":
        return norm2(pair.psi)
    if name == "e2u":
        return exp_guarded(pair.u, 2.0)
    if name in ("T_re", "T_im"):
        T = compute_T(pair)
        return T.real if name == "T_re" else T.imag
    if name in SPINOR_FILES:
        c = pair.psi[0] if name[0] == "f" else pair.psi[1]
        return c.real if name.endswith("re") else c.imag
    raise ConfigError(f"unknown field {name!r}; expected one of {', '.join(FIELDS)}")


def _check_fields(names):
    for n in names:
        if n not in FIELDS:
            raise ConfigError(f"unknown field {n!r}; expected one of {', '.join(FIELDS)}")
    return names


def write_fields(pair, names, out):
    for n in names:
        write_field_csv(os.path.join(out, f"{n}.csv"), pair.grid, field_values(pair, n))


def _perturb(pair, block):
    if not block:
        return pair
    u, psi = pair.u, pair.psi
    if "psi_sign" in block:
        psi = psi * np.asarray(block["psi_sign"], dtype=float).reshape(2, 1, 1)
    if block.get("noise_u", 0.0) > 0:
        rng = np.random.default_rng(block.get("seed", 0))
        noise = rng.standard_normal(pair.grid.shape) * pair.grid.interior()
        u = u * (1.0 + block["noise_u"] * noise)
    return pair.replace(u=u, psi=psi)


def _solution(conf, grid):
    s = conf["solution"]
    spin = cfg.to_complex(s.get("spin_direction"))
    pair = family(s["family"], grid, center=tuple(s.get("center", (0.0, 0.0))),
                  scale=s.get("scale", 1.0), spin_direction=spin)
    if "metric" in conf and conf["metric"] != pair.metric.name:
        raise ConfigError(f"metric {conf['metric']!r} does not match family {s['family']!r}")
    return _perturb(pair, conf.get("perturbation"))


def _diagnose(pair, conf):
    d = conf.get("diagnostics", {})
    ann = tuple(d["annulus"]) if "annulus" in d else None
    return run_diagnostics(pair, tail=d.get("tail", "fitted"), annulus=ann).to_dict()


def metrics_of(report):
    """Flatten a report into scalar gate metrics (``u_fit.slope``, ``xi0_abs``...)."""
    out = {}
    for k, v in report.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                if isinstance(vv, (int, float)):
                    out[f"{k}.{kk}"] = float(vv)
        elif isinstance(v, bool):
            out[k] = float(v)
        elif isinstance(v, (int, float)) and v is not None:
            out[k] = float(v)
    if "xi0" in report:
        out["xi0_abs"] = float(np.sqrt(sum(a * a + b * b for a, b in report["xi0"])))
    return out


def evaluate_gates(metrics, gates):
    """Apply ``{"max"|"min"|"target"+"rel_tol"/"abs_tol"}`` gates; NaN fails."""
    results = {}
    for name, g in sorted(gates.items()):
        if name not in metrics:
            raise ConfigError(f"gate on unknown metric {name!r}; available: {', '.join(sorted(metrics))}")
        v = metrics[name]
        ok = math.isfinite(v)
        if "max" in g:
            ok &= v <= g["max"]
        if "min" in g:
            ok &= v >= g["min"]
        if "target" in g:
            err = abs(v - g["target"])
            if "rel_tol" in g:
                ok &= err <= g["rel_tol"] * abs(g["target"])
            if "abs_tol" in g:
                ok &= err <= g["abs_tol"]
            if "rel_tol" not in g and "abs_tol" not in g:
                raise ConfigError(f"gate {name!r}: target needs rel_tol or abs_tol")
        results[name] = {"value": v, "pass": bool(ok), **g}
    return results


def _finish_gates(metrics, conf, out):
    results = evaluate_gates(metrics, conf.get("gates", {}))
    write_json(os.path.join(out, "gates.json"), results)
    failed = [k for k, r in results.items() if not r["pass"]]
    if failed:
        raise GateFailure(f"gates failed: {', '.join(failed)}")


def cmd_verify(conf, out):
    fields = _check_fields(conf.get("diagnostics", {}).get("fields", ["u", "psi_norm2"]))
    pair = _solution(conf, cfg.build_grid(conf["grid"]))
    report = _diagnose(pair, conf)
    write_json(os.path.join(out, "diagnostics.json"), report)
    write_fields(pair, fields, out)
    _finish_gates(metrics_of(report), conf, out)


def _initial(conf, grid):
    init = conf.get("initial", {"kind": "library"})
    kind = init["kind"]
    if kind == "library":
        if "solution" not in conf:
            raise ConfigError("initial.kind 'library' needs a solution block")
        return _solution(conf, grid)
    metric = metric_by_name(conf.get("metric", "flat"), grid)
    if kind == "constant":
        u = np.full(grid.shape, float(init.get("u", 0.0)))
        if metric.is_flat:
            u = asymptotic_boundary(u, grid, C=init.get("boundary_C", 0.0))
        psi = np.zeros((2,) + grid.shape, dtype=np.complex128)
        if "psi" in init:
            psi[:] = cfg.to_complex(init["psi"]).reshape(2, 1, 1)
            psi[:, ~grid.interior()] = 0.0
        return _perturb(SolutionPair(grid, metric, u, psi), conf.get("perturbation"))
    d = init.get("dir")
    if not d:
        raise ConfigError("initial.kind 'file' needs 'dir'")
    try:
        u = read_field_csv(os.path.join(d, "u.csv"), grid)
        parts = {}
        for n in SPINOR_FILES:
            p = os.path.join(d, f"{n}.csv")
            parts[n] = read_field_csv(p, grid) if os.path.exists(p) else np.zeros(grid.shape)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load initial data: {exc}") from None
    psi = np.stack([parts["f_re"] + 1j * parts["f_im"], parts["g_re"] + 1j * parts["g_im"]])
    return _perturb(SolutionPair(grid, metric, u, psi), conf.get("perturbation"))


def cmd_solve(conf, out):
    grid = cfg.build_grid(conf["grid"])
    pair = _initial(conf, grid)
    s = dict(conf.get("solver", {}))
    if "pin_index" in s:
        s["pin_index"] = tuple(s["pin_index"])
    try:
        sconf = SolverConfig(**s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    fields = _check_fields(conf.get("diagnostics", {}).get("fields", ["u"] + list(SPINOR_FILES)))
    try:
        rep = newton_solve(pair, sconf)
    except NoConvergence as exc:
        if exc.report is not None:
            write_json(os.path.join(out, "solve_report.json"), exc.report.to_dict())
        raise
    write_json(os.path.join(out, "solve_report.json"), rep.to_dict())
    report = _diagnose(rep.final_pair, conf)
    write_json(os.path.join(out, "diagnostics.json"), report)
    write_fields(rep.final_pair, fields, out)
    _finish_gates(metrics_of(report), conf, out)


def cmd_blowup(conf, out, workers=1):
    grid = cfg.build_grid(conf["grid"])
    s = conf["sequence"]
    spec = SequenceSpec.geometric(s["family"], grid, s["count"], base=s.get("base", 2.0),
                                  center=tuple(s.get("center", (0.0, 0.0))),
                                  spin_direction=cfg.to_complex(s.get("spin_direction")))
    b = conf.get("blowup", {})
    pairs = generate_sequence(spec, workers=workers)
    rep = detect_concentration(pairs, epsilon0=b.get("epsilon0", np.pi / 2),
                               delta=b.get("delta", 0.5), window=b.get("window", 3),
                               floor=b.get("floor", -10.0))
    report = rep.to_dict()
    write_json(os.path.join(out, "blowup_report.json"), report)
    tol = b.get("mass_tolerance", 0.05 * np.pi)
    metrics = {
        "n_sigma1": float(len(rep.sigma1)),
        "n_sigma2": float(len(rep.sigma2)),
        "min_mass": float(min(rep.masses)) if rep.masses else math.nan,
        "blowup": float(rep.classification.startswith("blowup")),
    }
    h = grid.h * (1 + 1e-9)
    sub = all(any(max(abs(a - c), abs(b_ - d)) <= h for c, d in rep.sigma1) for a, b_ in rep.sigma2)
    bad_mass = [m for m in rep.masses if m < np.pi - tol]
    _finish_gates(metrics, conf, out)
    if not sub:
        raise GateFailure("sigma2 is not contained in sigma1")
    if rep.classification.startswith("blowup") and bad_mass:
        raise GateFailure(f"concentration masses below pi: {bad_mass}")


def cmd_export(conf, out):
    names = conf["diagnostics"].get("fields", [])
    if not names:
        raise ConfigError("export needs a non-empty diagnostics.fields list")
    _check_fields(names)
    pair = _solution(conf, cfg.build_grid(conf["grid"]))
    write_fields(pair, names, out)


def cmd_kelvin(conf, out):
    grid = cfg.build_grid(conf["grid"])
    pair = _solution(conf, grid)
    k = conf.get("kelvin", {})
    target = cfg.build_grid(k["grid"]) if "grid" in k else grid
    kp = kelvin_transform(pair.as_flat() if not pair.metric.is_flat else pair, grid=target,
                          r_min=k.get("r_min"), r_max=k.get("r_max"),
                          spinor_law=k.get("spinor_law", "inverse_radius"))
    kp = SolutionPair(kp.grid, flat_metric(kp.grid), kp.u, kp.psi)
    report = _diagnose(kp, conf)
    write_json(os.path.join(out, "diagnostics.json"), report)
    write_fields(kp, _check_fields(conf.get("diagnostics", {}).get("fields", ["u", "psi_norm2"])), out)
    _finish_gates(metrics_of(report), conf, out)


COMMANDS = {
    "verify": cmd_verify,
    "solve": cmd_solve,
    "blowup": cmd_blowup,
    "export": cmd_export,
    "kelvin": cmd_kelvin,
}

HELP = {
    "verify": "diagnose a library solution and apply gates",
    "solve": "run the Newton solver, then diagnostics",
    "blowup": "build a sequence and detect concentration",
    "export": "write fields of a library solution as CSV",
    "kelvin": "Kelvin-transform a library solution and diagnose it",
}


def build_parser():
    p = argparse.ArgumentParser(prog="superliouville", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--serial", action="store_true",
                        help="single-threaded, deterministic execution")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.serial:
        _backend.set_threads(1)
    try:
        conf = cfg.load(args.config, args.command)
        out = ensure_dir(args.out)
        if args.command == "blowup":
            cmd_blowup(conf, out, workers=1 if args.serial else min(4, os.cpu_count() or 1))
        else:
            COMMANDS[args.command](conf, out)
    except (ConfigError, InvalidThreshold) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateFailure, NoConvergence, LinearSolveFailure) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    except SuperLiouvilleError as exc:
        # invalid parameters (spin direction, grid size, domain) are input errors
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

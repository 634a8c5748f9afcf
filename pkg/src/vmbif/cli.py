"""Command-line front end.

Three subcommands share one configuration format:

  check   validate the parameter set (compatibility relations, current
          proportionality, trivial-set membership along the curve, kernel
          multiplicity at the requested eigenvalue, structural conditions)
  scan    sweep the lambda grid, locate and certify criticality roots,
          write scan.csv, summary.json and the scan figure
  branch  trace the nontrivial branches through a located root, write the
          branch tables, field dumps, figures and the branch summary

Exit codes: 0 on success, 1 when a check or numerical run fails, 2 for
configuration or usage problems.  All delimited artifacts are
byte-deterministic across re-runs; figures and the summary (which carries
timings) are not part of that guarantee.

The scan root-finder works with the eigenvalue of the computational grid:
the requested analytic eigenvalue is matched to its discrete cluster and
the criticality function uses the cluster value, so located roots are
exactly where the discrete kernel opens (the analytic value is echoed in
the summary for reference).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bifurcate, fields, linearize, pde, plots, spectral
from .ansatz import beta_of, validate_condition_A
from .config import RunConfig, derived_summary, load_config
from .errors import ConfigError, VmbifError
from .omega import check_condition_C
from .output import read_summary, update_summary, write_csv, \
    write_field_dump

SCAN_HEADER = ["lambda", "chi_minus_exact", "chi_minus_asym", "g",
               "condition_I", "condition_II", "is_root"]
BRANCH_HEADER = ["lambda", "xi", "u_l2", "residual", "iterations"]

_BETA_SAMPLES = ((0.0, 0.0), (0.3, -0.2), (-0.1, 0.25))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmbif",
        description="bifurcation analysis of planar two-potential plasma "
                    "equilibria")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", required=True, help="run configuration")
        p.add_argument("--out", help="run directory for artifacts")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for the lambda sweep")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; recorded in the summary")
        p.add_argument("--mu0-index", type=int, default=None,
                       help="override the eigenvalue cluster selector")
        p.add_argument("--tol-omega", type=float, default=None)
        p.add_argument("--tol-root", type=float, default=None)
        p.add_argument("--tol-newton", type=float, default=None)
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p_check = sub.add_parser("check", help="validate the configuration")
    common(p_check)
    p_check.set_defaults(func=_cmd_check)

    p_scan = sub.add_parser("scan", help="locate criticality roots")
    common(p_scan)
    p_scan.set_defaults(func=_cmd_scan)

    p_branch = sub.add_parser("branch", help="trace nontrivial branches")
    common(p_branch)
    p_branch.add_argument("--point", type=int, default=1,
                          help="1-based root id from the scan")
    p_branch.add_argument("--xi-step", type=float, default=None)
    p_branch.add_argument("--max-points", type=int, default=None)
    p_branch.add_argument("--sides", choices=("both", "plus", "minus"),
                          default=None)
    p_branch.set_defaults(func=_cmd_branch)
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    updates = {}
    if args.mu0_index is not None:
        if args.mu0_index < 1:
            raise ConfigError("--mu0-index is 1-based")
        updates["mu0_index"] = args.mu0_index
        updates["mu0_value"] = None
    if args.tol_omega is not None:
        updates["tol_omega"] = args.tol_omega
    if args.tol_root is not None:
        updates["tol_root"] = args.tol_root
    if args.tol_newton is not None:
        updates["tol_newton"] = args.tol_newton
    if getattr(args, "xi_step", None) is not None:
        updates["xi_step"] = args.xi_step
    if getattr(args, "max_points", None) is not None:
        updates["max_points"] = args.max_points
    if getattr(args, "sides", None) is not None:
        updates["sides"] = {"both": (+1, -1), "plus": (+1,),
                            "minus": (-1,)}[args.sides]
    for name in ("tol_omega", "tol_root", "tol_newton", "xi_step"):
        if name in updates and updates[name] is not None \
                and updates[name] <= 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    return replace(cfg, **updates) if updates else cfg


# ---------------------------------------------------------------------------
# shared analysis


def _distinct_clusters(spectrum) -> list[tuple[float, int]]:
    seen = {}
    for pair in spectrum:
        if pair.group not in seen:
            seen[pair.group] = (pair.value, pair.multiplicity)
    return [seen[g] for g in sorted(seen)]


def _spectral_context(cfg: RunConfig) -> dict:
    analytic = spectral.analytic_rectangle_spectrum(cfg.dom,
                                                    cfg.spectral_count)
    clusters = _distinct_clusters(analytic)
    if cfg.mu0_index is not None:
        if cfg.mu0_index > len(clusters):
            raise ConfigError(
                f"mu0.index {cfg.mu0_index} exceeds the {len(clusters)} "
                "available clusters (raise spectral.count)")
        mu0_analytic, multiplicity = clusters[cfg.mu0_index - 1]
    else:
        mu0_analytic = float(cfg.mu0_value)
        n, _ = spectral.multiplicity_of(
            analytic, mu0_analytic, 1e-6 * max(1.0, abs(mu0_analytic)))
        multiplicity = n

    discrete = spectral.discrete_spectrum(cfg.dom, cfg.spectral_count)
    tol_h = 10.0 * cfg.dom.h ** 2 * max(1.0, abs(mu0_analytic))
    cluster = spectral.cluster_of(discrete, mu0_analytic, tol_h)
    mu_h = float(np.mean([p.value for p in cluster]))
    return {
        "analytic": analytic,
        "discrete": discrete,
        "clusters": clusters,
        "mu0_analytic": float(mu0_analytic),
        "multiplicity": int(multiplicity),
        "odd": multiplicity % 2 == 1,
        "mu_h": mu_h,
        "mu_h_tol": tol_h,
        "kernel_size": len(cluster),
    }


def _assemble_at(cfg: RunConfig, lam: float):
    return linearize.assemble(cfg.curve.eval_direction(lam),
                              cfg.curve.species_at(lam, cfg.family),
                              cfg.family, cfg.curve.c_light)


def _scan_rows(cfg: RunConfig, mu_h: float, threads: int) -> list[tuple]:
    def row(lam: float) -> tuple:
        data = _assemble_at(cfg, lam)
        cond_i, cond_ii = linearize.check_conditions(data)
        chi_asym = linearize.eigen_asymptotic(data)[1]
        g = cfg.curve.a_of(lam) * data.chi_minus + mu_h
        return (float(lam), data.chi_minus, chi_asym, g,
                int(cond_i), int(cond_ii), 0)

    lams = [float(v) for v in cfg.lam_grid]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(row, lams))
    return [row(lam) for lam in lams]


def _check_payload(cfg: RunConfig) -> tuple[dict, bool]:
    """Run every configuration audit; returns (payload, all_passed)."""
    lam_ref = float(cfg.lam_grid[0])
    species = cfg.curve.species_at(lam_ref, cfg.family)

    cond_a = validate_condition_A(species)

    beta_rows = []
    beta_ok = True
    for s in species:
        try:
            beta_vec = beta_of(s, cfg.family, _BETA_SAMPLES)
            resid = 0.0
            if s.beta is not None:
                resid = float(np.max(np.abs(beta_vec - s.beta)))
            beta_rows.append({"index": s.index, "beta": list(beta_vec),
                              "closed_form_gap": resid, "ok": resid <= 1e-8})
            beta_ok = beta_ok and resid <= 1e-8
        except VmbifError as exc:
            beta_rows.append({"index": s.index, "error": str(exc),
                              "ok": False})
            beta_ok = False

    cond_c = check_condition_C(cfg.curve, cfg.family, cfg.lam_grid,
                               tol=cfg.tol_omega)
    trivial = pde.verify_trivial(cfg.curve, cfg.family, cfg.dom,
                                 cfg.lam_grid, tol=cfg.tol_newton)

    data = _assemble_at(cfg, lam_ref)
    cond_i, cond_ii = linearize.check_conditions(data)

    payload = {
        "lambda_ref": lam_ref,
        "condition_A": {
            "passed": cond_a.passed,
            "rows": [{"name": r.name, "passed": r.passed,
                      "residual": r.residual, "detail": r.detail}
                     for r in cond_a.rows],
        },
        "condition_B": {"passed": beta_ok, "rows": beta_rows},
        "condition_C": {
            "passed": cond_c.passed,
            "worst": list(cond_c.worst()),
            "tol": cond_c.tol,
        },
        "trivial_solution": {
            "passed": trivial.passed,
            "worst": trivial.worst(),
            "tol": trivial.tol,
        },
        "structural": {
            "condition_I": bool(cond_i),
            "condition_II": bool(cond_ii),
            "real_spectrum": bool(data.real_spectrum),
            "chi_minus": data.chi_minus,
            "chi_plus": data.chi_plus,
        },
    }
    ok = (cond_a.passed and beta_ok and cond_c.passed and trivial.passed
          and cond_i and cond_ii and data.real_spectrum)
    return payload, ok


def _echo_section(cfg: RunConfig, args) -> dict:
    return {
        "path": cfg.path,
        "raw": cfg.raw_text,
        "derived": derived_summary(cfg),
        "seed": args.seed,
        "threads": args.threads,
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check(args) -> int:
    cfg = _load(args)
    t0 = time.perf_counter()
    payload, ok = _check_payload(cfg)
    spec_ctx = _spectral_context(cfg)
    payload["spectral"] = {
        "mu0_analytic": spec_ctx["mu0_analytic"],
        "mu0_discrete": spec_ctx["mu_h"],
        "multiplicity": spec_ctx["multiplicity"],
        "odd_multiplicity": spec_ctx["odd"],
        "kernel_size_discrete": spec_ctx["kernel_size"],
        "potential_family": cfg.family.potential,
    }
    payload["elapsed_s"] = time.perf_counter() - t0

    for name in ("condition_A", "condition_B", "condition_C",
                 "trivial_solution"):
        state = "pass" if payload[name]["passed"] else "FAIL"
        print(f"{name}: {state}")
    st = payload["structural"]
    print(f"structural: I={st['condition_I']} II={st['condition_II']} "
          f"real_spectrum={st['real_spectrum']}")
    sp = payload["spectral"]
    print(f"spectral: mu0={sp['mu0_analytic']:.12g} "
          f"(discrete {sp['mu0_discrete']:.12g}), "
          f"multiplicity {sp['multiplicity']} "
          f"({'odd' if sp['odd_multiplicity'] else 'even'})")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        update_summary(out / "summary.json", "config",
                       _echo_section(cfg, args))
        update_summary(out / "summary.json", "check", payload)
    if not ok:
        print("configuration checks failed", file=sys.stderr)
        return 1
    return 0


def _point_payload(pt: bifurcate.BifurcationPoint, pid: int,
                   mu0_analytic: float) -> dict:
    return {
        "id": pid,
        "lambda0": pt.lambda0,
        "mu0": pt.mu0,
        "mu0_analytic": mu0_analytic,
        "g_residual": pt.g_residual,
        "monotone": pt.monotone,
        "direction": pt.direction,
        "multiplicity": pt.multiplicity,
        "odd_multiplicity": pt.odd_multiplicity,
        "certified": pt.certified,
        "chi_minus": pt.chi_minus,
        "condition_I": None if pt.conditions is None else pt.conditions[0],
        "condition_II": None if pt.conditions is None else pt.conditions[1],
        "c_vec": None if pt.c_vec is None else list(pt.c_vec),
        "c_star": None if pt.c_star is None else list(pt.c_star),
    }


def _run_scan(cfg: RunConfig, args):
    """Shared by scan and branch: rows, spectral context and roots."""
    spec_ctx = _spectral_context(cfg)
    rows = _scan_rows(cfg, spec_ctx["mu_h"], args.threads)
    roots = bifurcate.scan_roots(
        cfg.curve, cfg.family, spec_ctx["mu_h"], cfg.lam_grid,
        tol_root=cfg.tol_root, spectrum=spec_ctx["discrete"],
        spectrum_tol=spec_ctx["mu_h_tol"])
    return spec_ctx, rows, roots


def _cmd_scan(args) -> int:
    if not args.out:
        raise ConfigError("scan requires --out")
    cfg = _load(args)
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    check_payload, check_ok = _check_payload(cfg)
    spec_ctx, rows, roots = _run_scan(cfg, args)

    table = list(rows)
    for pt in roots:
        data = _assemble_at(cfg, pt.lambda0)
        cond_i, cond_ii = linearize.check_conditions(data)
        chi_asym = linearize.eigen_asymptotic(data)[1]
        g = cfg.curve.a_of(pt.lambda0) * data.chi_minus + pt.mu0
        table.append((pt.lambda0, data.chi_minus, chi_asym, g,
                      int(cond_i), int(cond_ii), 1))
    table.sort(key=lambda r: (r[0], r[6]))
    write_csv(out / "scan.csv", SCAN_HEADER, table)

    payload = {
        "mu0_analytic": spec_ctx["mu0_analytic"],
        "mu0_discrete": spec_ctx["mu_h"],
        "multiplicity": spec_ctx["multiplicity"],
        "odd_multiplicity": spec_ctx["odd"],
        "kernel_size_discrete": spec_ctx["kernel_size"],
        "analytic_clusters": [{"value": v, "multiplicity": m}
                              for v, m in spec_ctx["clusters"]],
        "grid_points": len(rows),
        "roots": [_point_payload(pt, i + 1, spec_ctx["mu0_analytic"])
                  for i, pt in enumerate(roots)],
        "elapsed_s": time.perf_counter() - t0,
    }
    update_summary(out / "summary.json", "config", _echo_section(cfg, args))
    update_summary(out / "summary.json", "check", check_payload)
    update_summary(out / "summary.json", "scan", payload)

    if not args.no_figures:
        plots.save_scan_figure(out / "scan.png", rows,
                               [pt.lambda0 for pt in roots])

    print(f"scan: {len(rows)} grid points, {len(roots)} root(s)")
    if not roots:
        print("no sign change of the criticality function on the grid")
    for entry in payload["roots"]:
        tag = "certified" if entry["certified"] else "candidate"
        print(f"  root {entry['id']}: lambda0 = {entry['lambda0']:.12g} "
              f"({tag}, multiplicity {entry['multiplicity']})")
    if not check_ok:
        print("configuration checks failed", file=sys.stderr)
        return 1
    return 0


def _side_name(side: int) -> str:
    return "plus" if side > 0 else "minus"


def _cmd_branch(args) -> int:
    if not args.out:
        raise ConfigError("branch requires --out")
    cfg = _load(args)
    out = Path(args.out)
    summary_path = out / "summary.json"
    if not summary_path.exists():
        raise ConfigError(
            f"no scan artifacts in {out}; run the scan subcommand first")
    summary = read_summary(summary_path)
    if "scan" not in summary:
        raise ConfigError(
            f"{summary_path} carries no scan section; run scan first")

    t0 = time.perf_counter()
    spec_ctx, _, roots = _run_scan(cfg, args)
    if not roots:
        print("no roots found; nothing to trace", file=sys.stderr)
        return 1
    if not 1 <= args.point <= len(roots):
        raise ConfigError(
            f"--point {args.point} out of range (scan found "
            f"{len(roots)} root(s))")
    pt = roots[args.point - 1]
    stored = summary["scan"]["roots"][args.point - 1]["lambda0"]
    if abs(stored - pt.lambda0) > 1e-9 * max(1.0, abs(stored)):
        raise ConfigError(
            "scan artifacts disagree with the configuration; re-run scan")

    ccfg = pde.ContinuationConfig(xi_step=cfg.xi_step,
                                  max_points=cfg.max_points,
                                  newton_tol=cfg.tol_newton)
    results = []
    side_payload = {}
    for side in cfg.sides:
        res = pde.continue_branch(pt, cfg.curve, cfg.family, cfg.dom,
                                  ccfg, side=side)
        results.append(res)
        name = _side_name(side)
        write_csv(out / f"branch_{args.point}_{name}.csv", BRANCH_HEADER,
                  [(p.lam, p.xi, p.u_norm, p.residual_sup, p.iterations)
                   for p in res.points])

        entry: dict = {"status": res.status,
                       "points": [{"lambda": p.lam, "xi": p.xi,
                                   "u_l2": p.u_norm,
                                   "residual": p.residual_sup,
                                   "iterations": p.iterations}
                                  for p in res.points]}
        if res.points:
            first = res.points[0]
            entry["tangent_deg"] = float(np.degrees(np.arccos(
                min(1.0, abs(first.xi) / first.u_norm))))
            lam_gaps = [abs(p.lam - pt.lambda0) for p in res.points]
            if len(res.points) >= 3 and min(lam_gaps) > 0:
                fit = np.polyfit(np.log([abs(p.xi) for p in res.points]),
                                 np.log(lam_gaps), 1)
                entry["amplitude_slope"] = float(fit[0])

            dumps = []
            for k, p in enumerate(res.points, start=1):
                stem = f"branch_{args.point}_{name}_{k}"
                write_field_dump(out / "fields" / f"{stem}_phi.bin",
                                 p.state.phi, cfg.dom.h, p.lam)
                write_field_dump(out / "fields" / f"{stem}_psi.bin",
                                 p.state.psi, cfg.dom.h, p.lam)
                dumps.append(stem)
            entry["field_dumps"] = dumps

            last = res.points[-1]
            sol = fields.reconstruct(last.state, cfg.curve, cfg.family,
                                     last.lam, beta_const=cfg.beta)
            report = fields.maxwell_residuals(sol, cfg.curve.c_light)
            rho_b, j_b = fields.boundary_density_check(sol)
            species = cfg.curve.species_at(last.lam, cfg.family)
            sub = fields.subspace_check(last.state, species)
            entry["maxwell"] = report.as_dict()
            entry["boundary_rho"] = rho_b
            entry["boundary_j"] = j_b
            entry["subspace_max"] = float(np.max(sub))
            if not args.no_figures:
                plots.save_fields_figure(
                    out / f"fields_{args.point}_{name}.png", sol)
        side_payload[name] = entry

    if not args.no_figures:
        plots.save_branch_figure(out / f"branch_{args.point}.png", results)

    update_summary(summary_path, f"branch_{args.point}", {
        "point": _point_payload(pt, args.point, spec_ctx["mu0_analytic"]),
        "sides": side_payload,
        "xi_step": cfg.xi_step,
        "max_points": cfg.max_points,
        "elapsed_s": time.perf_counter() - t0,
    })

    for res in results:
        print(f"branch {args.point} {_side_name(res.side)}: "
              f"{len(res.points)} point(s), status {res.status}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except VmbifError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``chexpand {profile,sweep1d,expand2d,fixtures} [config]``.

Exit status: 0 all checks pass, 1 a check failed, 2 configuration error,
3 solver failure.  Outputs go to ``<output.dir>/<command>/``; the
``CHEXPAND_OUTPUT_DIR`` environment variable overrides ``output.dir``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from chexpand.config import RunConfig
from chexpand.errors import (CertificationError, ConfigurationError, DomainError, GeometryError,
                             SolverError, UsageError)

log = logging.getLogger("chexpand")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    return str(v)


def write_csv(path: Path, columns, rows) -> Path:
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([_fmt(r[c]) for c in columns])
    return path


def write_kv(path: Path, items) -> Path:
    with path.open("w") as fh:
        for k, v in items:
            fh.write(f"{k} = {_fmt(v)}\n")
    return path


def _prepare(cfg: RunConfig, command: str) -> Path:
    out = cfg.output_dir(command)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.yaml").write_text(cfg.dump())
    return out


# -- profile ------------------------------------------------------------------

def cmd_profile(cfg: RunConfig) -> int:
    from chexpand.fixtures import is_canonical, load_fixtures
    from chexpand.plotting import plot_profile
    from chexpand.potential import certify_growth
    from chexpand.profile import build_profile, tail_integral, tail_integral_time

    well = cfg.well()
    p = cfg.section("profile")
    alpha = float(p["alpha"])
    if not well.a <= alpha <= well.b:
        raise ConfigurationError(f"profile.alpha={alpha} outside [{well.a}, {well.b}]")
    prof = build_profile(well, alpha, int(p["resolution"]))
    out = _prepare(cfg, "profile")
    prof.to_csv(out / "profile.csv", int(p["points"]))
    tail = tail_integral(well, alpha)
    tail_t = tail_integral_time(prof)
    items = [("alpha", alpha), ("hitting_time", prof.hitting_time), ("tail_integral", tail),
             ("tail_integral_time", tail_t), ("c_w", well.c_w)]
    try:
        cert = certify_growth(well)
        items += [(f"growth_{k}", v) for k, v in cert.as_dict().items()]
    except CertificationError as exc:
        items.append(("growth_certificate", f"failed: {exc}"))
    status = EXIT_OK
    if is_canonical(well):
        fx = load_fixtures()["values"]
        tol = float(p["fixture_tolerance"])
        comparisons = [("geodesic_distance_a_b", fx["geodesic_distance_a_b"], well.c_w)]
        for key in fx["hitting_time"]:
            if abs(float(key) - alpha) < 1e-15:
                comparisons.append((f"hitting_time[{key}]", fx["hitting_time"][key], prof.hitting_time))
        for key in fx["tail_integral"]:
            if abs(float(key) - alpha) < 1e-15:
                comparisons.append((f"tail_integral[{key}]", fx["tail_integral"][key], tail))
        for name, expected, actual in comparisons:
            err = abs(actual - expected)
            ok = err <= tol * max(1.0, abs(expected))
            items += [(f"fixture_{name}_expected", expected), (f"fixture_{name}_actual", actual),
                      (f"fixture_{name}_error", err), (f"fixture_{name}_status", "PASS" if ok else "FAIL")]
            if not ok:
                log.error("fixture mismatch %s: %r vs %r", name, actual, expected)
                status = EXIT_CHECK
    write_kv(out / "summary.txt", items)
    plot_profile(prof, out / "profile.png")
    print(f"hitting_time = {prof.hitting_time!r}\ntail_integral = {tail!r}")
    return status


# -- sweep1d ------------------------------------------------------------------

def cmd_sweep1d(cfg: RunConfig) -> int:
    from chexpand.plotting import plot_minimizers, plot_sweep
    from chexpand.sweep import DECOMPOSITION_COLUMNS, SWEEP_COLUMNS, run_sweep1d

    scenario = cfg.scenario1d()
    scenario.data(scenario.eps_list[0]).check(scenario.well, scenario.weight)
    out = _prepare(cfg, "sweep1d")
    result = run_sweep1d(scenario, lambda e, r: log.info("eps=%g residual=%.3g", e, r.el_residual))
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, result.rows)
    write_csv(out / "decomposition.csv", DECOMPOSITION_COLUMNS, result.decomposition)
    items = [("predicted_g2", result.predicted_g2), ("extrapolated_g2", result.extrapolated_g2)]
    items += [(f"check_{c.name}", f"{c.status}: {c.detail}") for c in result.checks]
    items += [(f"warning_{i}", w) for i, w in enumerate(result.warnings)]
    write_kv(out / "checks.txt", items)
    plot_sweep(result.rows, result.predicted_g2, out / "sweep.png")
    plot_minimizers(result.results, out / "minimizers.png")
    for c in result.checks:
        print(f"{c.status} {c.name}: {c.detail}")
    for w in result.warnings:
        print(f"WARNING {w}")
    if not result.passed:
        print("failing invariants: " + ", ".join(result.failing()), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# -- expand2d -----------------------------------------------------------------

SLICE_COLUMNS = ("component", "eps", "theta", "kappa", "g", "slice_g2", "s_eps_over_eps")
TABLE_COLUMNS = ("eps", "numeric_f2", "recovery_f2", "predicted_f2")

PLOT_SCRIPT = """\
# Plot description for expand2d outputs (columns refer to the CSV headers).
figure convergence
  file expansion_table.csv
  x eps (log scale)
  series numeric_f2 markers
  series recovery_f2 dashed
  series predicted_f2 horizontal reference
  reference extrapolated_f2 from fit_report.txt
figure slices
  file slices.csv
  group eps
  x theta
  y slice_g2
figure transition
  file slices.csv
  x eps (log scale)
  y s_eps_over_eps
"""


def cmd_expand2d(cfg: RunConfig) -> int:
    from chexpand.expansion import expansion_table, interior_closeness
    from chexpand.geometry2d import check_admissibility
    from chexpand.plotting import plot_expansion, plot_slices

    well = cfg.well()
    domain = cfg.domain()
    datum = cfg.datum(domain)
    ex = cfg.section("expansion")
    report = check_admissibility(domain, datum, max(64, int(ex["boundary_resolution"])), well)
    out = _prepare(cfg, "expand2d")
    if not report.passed:
        rows = [(f"violation_{i}", f"{c} theta={t:.6f} g={g:.6g} kappa={k:.6g}")
                for i, (c, t, g, k) in enumerate(report.violations)]
        write_kv(out / "admissibility.txt", [("status", "FAIL"), ("summary", report.summary())] + rows)
        print(report.summary(), file=sys.stderr)
        return EXIT_CHECK
    rep = expansion_table(domain, datum, well, cfg.eps_list(),
                          slice_resolution=int(cfg.section("sweep")["cells_per_eps"]),
                          boundary_resolution=int(ex["boundary_resolution"]), beta=cfg.beta(),
                          assumed_order=ex["assumed_order"], refine=bool(cfg.section("sweep")["refine"]))
    table = [{"eps": e, "numeric_f2": n, "recovery_f2": r, "predicted_f2": rep.predicted_f2}
             for (e, n), (_, r) in zip(rep.per_eps_numeric_f2, rep.per_eps_recovery_f2)]
    write_csv(out / "expansion_table.csv", TABLE_COLUMNS, table)
    records = sorted((r for s in rep.samples for r in s.slices),
                     key=lambda r: (-r.eps, r.component, r.theta))
    write_csv(out / "slices.csv", SLICE_COLUMNS, [vars(r) for r in records])
    tol = float(ex["tolerance"])
    rel = rep.relative_error()
    ok = rel <= (tol if rep.predicted_f2 != 0 else 1e-6)
    items = [("predicted_f2", rep.predicted_f2), ("extrapolated_f2", rep.extrapolated_f2),
             ("extrapolated_recovery_f2", rep.extrapolated_recovery_f2),
             ("order_used", rep.extrapolation.order_used), ("fitted_order", rep.extrapolation.fitted_order),
             ("relative_error", rel), ("tolerance", tol), ("m0", rep.m0), ("m1", rep.m1), ("m2", rep.m2),
             ("residual_order", rep.residual_order)]
    items += [(f"m_eps[{e!r}]", m) for (e, _), m in zip(rep.per_eps_numeric_f2, rep.m_eps)]
    items += [(f"residual[{e!r}]", r) for (e, _), r in zip(rep.per_eps_numeric_f2, rep.residuals)]
    # interior closeness for the first slice of every component
    for name in domain.names:
        chain = [next(r for r in s.slices if r.component == name) for s in rep.samples]
        probe = 0.5 * chain[0].result.grid.length
        fit = interior_closeness([r.result for r in chain], probe, [r.eps for r in chain])
        items += [(f"interior_{name}_slope", fit.slope), (f"interior_{name}_r_squared", fit.r_squared),
                  (f"interior_{name}_status", "PASS" if fit.passed else f"FAIL: {fit.reason}")]
    items += [(f"warning_{i}", w) for i, w in enumerate(rep.warnings)]
    items.append(("status", "PASS" if ok else "FAIL"))
    write_kv(out / "fit_report.txt", items)
    (out / "plot_script.txt").write_text(PLOT_SCRIPT)
    plot_expansion(rep, out / "expansion.png")
    plot_slices(records, out / "slices.png")
    print(f"predicted_f2 = {rep.predicted_f2!r}\nextrapolated_f2 = {rep.extrapolated_f2!r}\n"
          f"relative_error = {rel:.4g} ({'PASS' if ok else 'FAIL'} at {tol:g})")
    return EXIT_OK if ok else EXIT_CHECK


# -- fixtures -----------------------------------------------------------------

def cmd_fixtures(cfg: RunConfig) -> int:
    from chexpand.fixtures import regenerate, write_fixtures

    data = regenerate()
    out = _prepare(cfg, "fixtures")
    write_fixtures(data, out / "fixtures.json")
    print(f"wrote {out / 'fixtures.json'}")
    return EXIT_OK


COMMANDS = {"profile": cmd_profile, "sweep1d": cmd_sweep1d, "expand2d": cmd_expand2d,
            "fixtures": cmd_fixtures}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chexpand", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__name__.replace("cmd_", "run "))
        p.add_argument("config", nargs="?", help="YAML config file (defaults if omitted)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return COMMANDS[args.command](cfg)
    except (ConfigurationError, UsageError, DomainError, GeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

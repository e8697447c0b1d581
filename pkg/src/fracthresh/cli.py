"""Command-line entry points.

    fracthresh simulate  --config cfg.json --out run/
    fracthresh converge  --config cfg.json --out study/ --threads 3 --plot
    fracthresh constants --set alphas=[0.5,1,1.5] --out consts/
    fracthresh validate  --out reports/

Every command takes an optional JSON config, ``--set key=value`` overrides
(dotted keys, JSON values) and ``--emit-config`` to print the resolved
config instead of running.  Exit codes: 0 success, 1 runtime failure or
failed check, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from .config import ConfigError, load_config

__all__ = ["main", "cmd_simulate", "cmd_converge", "cmd_constants", "cmd_validate"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _dump_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if hasattr(v, "value"):
        return v.value
    raise TypeError(f"not serializable: {type(v).__name__}")


def cmd_simulate(cfg, out, log=print):
    """Run the scheme; write the manifest, field dumps and front point lists."""
    from .grid import make_grid, save_field
    from .harness import extract_front
    from .scheme import SchemeParams, initialize, run

    grid = make_grid(cfg.dim, cfg.extent, cfg.points)
    params = SchemeParams(cfg.alpha, cfg.h, cfg.steps, cfg.convention)
    u0 = initialize(grid, cfg.shape.indicator(cfg.dim))
    fronts = {}
    latest = {}

    def observe(n, t, field, smoothed):
        if not cfg.fronts or grid.dim == 1:
            return
        snap = extract_front(smoothed if smoothed is not None else field, t)
        latest["n"], latest["snap"] = n, snap
        if n % cfg.snapshot_every == 0:
            fronts[n] = snap

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = run(params, u0, snapshot_every=cfg.snapshot_every, callback=observe,
                   wrap_tolerance=cfg.wrap_tolerance)
    if latest:
        fronts[latest["n"]] = latest["snap"]

    os.makedirs(os.path.join(out, "fields"), exist_ok=True)
    names = []
    for n, f in zip(traj.field_steps, traj.fields):
        name = f"fields/step_{n:06d}.raw"
        save_field(os.path.join(out, name), f)
        names.append(name)
    front_names = []
    if fronts:
        os.makedirs(os.path.join(out, "fronts"), exist_ok=True)
        for n in sorted(fronts):
            name = f"fronts/step_{n:06d}.csv"
            _write(os.path.join(out, name), fronts[n].to_csv())
            front_names.append(name)
    manifest = {
        "config": cfg.to_dict(),
        "params": params.to_dict(),
        "grid": grid.to_dict(),
        "steps_taken": traj.steps_taken,
        "field_steps": traj.field_steps,
        "times": traj.times,
        "volumes": traj.volumes,
        "extinction_time": traj.extinction_time,
        "fields": names,
        "fronts": front_names,
        "kernel": {k: v for k, v in traj.kernel_metadata.items()},
    }
    _dump_json(os.path.join(out, "manifest.json"), manifest)
    log(f"simulate: {traj.steps_taken} steps, {len(names)} field files in {out}")
    return EXIT_OK


def cmd_converge(cfg, out, threads=1, plot=False, log=print):
    """Convergence study; writes the table as CSV, text and JSON."""
    from .harness import convergence_study, write_plots

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        table = convergence_study(cfg, threads=threads)
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "convergence.csv"), table.to_csv())
    _write(os.path.join(out, "convergence.txt"), table.to_text())
    _dump_json(os.path.join(out, "convergence.json"), table.to_dict())
    if cfg.write_fronts:
        fdir = os.path.join(out, "fronts")
        os.makedirs(fdir, exist_ok=True)
        for i, row in enumerate(table.rows):
            for j, snap in enumerate(row.fronts):
                _write(os.path.join(fdir, f"rung{i}_step{j + 1:06d}.csv"), snap.to_csv())
    if plot:
        try:
            write_plots(table, out)
        except ImportError:
            log("converge: matplotlib not installed, plots skipped")
    log(table.to_text().rstrip())
    failed = [r for r in table.rows if r.status != "ok"]
    for r in failed:
        log(f"converge: rung h={r.h:g} {r.status}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_constants(cfg, out=None, log=print):
    """Table of limit constants (CSV)."""
    from .limits import limit_constant

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "dim", "convention", "regime", "C_alpha", "error_estimate"])
    for a in cfg.alphas:
        c = limit_constant(a, cfg.dim, cfg.convention, regime=cfg.regime)
        r = c.to_row()
        w.writerow([repr(float(a)), r["dim"], r["convention"], r["regime"], repr(float(r["C_alpha"])),
                    repr(float(r["error_estimate"]))])
    text = buf.getvalue()
    if out:
        os.makedirs(out, exist_ok=True)
        _write(os.path.join(out, "constants.csv"), text)
    log(text.rstrip())
    return EXIT_OK


def validation_checks(cfg):
    """Kernel validators and identity checks as ``(name, passed, record)`` triples."""
    from .grid import make_grid
    from .kernel import build_kernel, poisson_deviation, validate_small_time_limit, validate_tail_bound
    from .limits import QuadraticFamily, verify_level_set_identity

    grid = make_grid(2, cfg.extent, cfg.points)
    for a in cfg.alphas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            k = build_kernel(grid, a, 1.0)
        dev = abs(k.metadata["mass"] - 1.0)
        yield f"mass alpha={a:g}", dev <= cfg.mass_tolerance, {
            "check": "mass", "alpha": a, "deviation": dev, "tolerance": cfg.mass_tolerance}
        rep = validate_tail_bound(k, growth_tolerance=cfg.growth_tolerance)
        yield f"tail bound alpha={a:g}", rep.passed, rep.to_dict()
        if a == 1.0:
            dev = poisson_deviation(k)
            yield "poisson kernel", dev <= cfg.poisson_tolerance, {
                "check": "poisson", "deviation": dev, "tolerance": cfg.poisson_tolerance}
    st_grid = make_grid(2, cfg.small_time_extent, cfg.small_time_points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = validate_small_time_limit(st_grid, cfg.small_time_alpha, cfg.small_time_convention,
                                        cfg.small_time_times, constant_tolerance=cfg.constant_tolerance)
    yield f"small-time limit alpha={cfg.small_time_alpha:g}", rep.passed, rep.to_dict()
    if cfg.lemma:
        settings = [((0.0, 0.0), (0.0, 0.0), 1.0),
                    ((1.0, 0.3), (0.3, -0.5), 0.5),
                    ((-0.5, 0.2), (0.2, 1.5), 0.25)]
        for m, shift in [((s[0], s[1]), s[2]) for s in settings]:
            fam = QuadraticFamily(0.5, m, shift)
            rep = verify_level_set_identity(fam, cfg.lemma_sigma, cfg.lemma_epsilons)
            yield f"level-set identity A={list(map(list, m))} a={shift:g}", rep.passed, rep.to_dict()


def cmd_validate(cfg, out=None, log=print):
    """Run every validator; print one line per check and write a JSON report."""
    records, ok = [], True
    for name, passed, rec in validation_checks(cfg):
        log(f"{'PASS' if passed else 'FAIL'}  {name}")
        records.append(dict(rec, name=name, passed=bool(passed)))
        ok &= bool(passed)
    if out:
        os.makedirs(out, exist_ok=True)
        _dump_json(os.path.join(out, "validation.json"),
                   {"config": cfg.to_dict(), "checks": records, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="fracthresh",
                                description="Threshold dynamics for fractional front propagation.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "run the scheme and dump fields"),
                           ("converge", "convergence study on a ball"),
                           ("constants", "table of limit constants"),
                           ("validate", "kernel validators and identity checks")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--threads", type=int, default=1, help="worker count")
        s.add_argument("--plot", action="store_true", help="write plots (needs matplotlib)")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value (JSON-parsed)")
        s.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.emit_config:
        print(cfg.to_json())
        return EXIT_OK
    if args.threads < 1:
        print("config error: threads: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    from .grid import set_fft_workers
    set_fft_workers(args.threads)
    out = args.out
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, out or "fracthresh-run")
        if args.command == "converge":
            return cmd_converge(cfg, out or "fracthresh-converge", args.threads, args.plot)
        if args.command == "constants":
            return cmd_constants(cfg, out)
        return cmd_validate(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # refusals from the numerical layer (regime mismatch, resolution)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

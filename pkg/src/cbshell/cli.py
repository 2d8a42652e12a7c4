"""Command-line entry point: ``run`` a scenario or ``verify`` it against its oracle.

The default output directory is ``$CBSHELL_OUTPUT_DIR`` (or ``./results``).
"""

import argparse
import sys
import time
from pathlib import Path

from . import io
from .acceptance import oracle_tables, verify_scenario


def _dt(text):
    if text == "auto":
        return "auto"
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a time step in seconds") from None
    if not val > 0:
        raise argparse.ArgumentTypeError("time step must be positive")
    return val


def _set_threads(n):
    if n is None:
        return 1
    import numba
    numba.set_num_threads(n)
    return n


def cmd_run(args):
    from .scenarios import run_case
    sc = io.parse_scenario(args.scenario)
    if args.technique:
        sc.technique = args.technique
    out = Path(args.out) if args.out else io.default_output_dir() / sc.name
    out.mkdir(parents=True, exist_ok=True)
    threads = _set_threads(args.threads)
    solver_cfg = dict(io.scenario_to_dict(sc)["solver"], dt=args.dt or sc.solver.dt)
    man = io.RunManifest(sc.name, io.config_hash(sc), solver_cfg, sc.technique, threads)
    t0 = time.perf_counter()
    status = 1
    try:
        if args.oracle_only:
            for name, (header, rows) in oracle_tables(sc).items():
                io.write_table(out / f"oracle_{name}.csv", header, rows)
        else:
            for k, lc in enumerate(sc.load_cases):
                prefix = f"{lc.name}_" if len(sc.load_cases) > 1 else ""
                res = run_case(sc, k, dt=args.dt, raise_on_failure=False)
                man.steps += res.solver.state.steps
                io.write_probes(res.columns, sc.experiment, out, prefix)
                io.write_mesh_snapshot(res.solver, out / f"{prefix}final.vtk")
                prof = res.events.get("profile")
                if prof is not None:
                    rows = [(z, *s) for z, s in zip(prof["zeta"], prof["sigma"])]
                    io.write_table(out / f"{prefix}wall_profile.csv",
                                   ("zeta", "s11_Pa", "s22_Pa", "s33_Pa", "s12_Pa", "s23_Pa", "s13_Pa"), rows)
                if "failure" in res.events:
                    raise RuntimeError(f"load case {lc.name}: {res.events['failure']}")
        status = 0
        man.exit_status = "ok"
    except Exception as exc:
        man.exit_status = "failed"
        man.message = str(exc)
        print(f"error: {exc}", file=sys.stderr)
    finally:
        man.wall_time_s = time.perf_counter() - t0
        man.write(out)
    print(f"{sc.name}: {man.exit_status}, {man.steps} steps, {man.wall_time_s:.1f} s -> {out}")
    return status


def cmd_verify(args):
    sc = io.parse_scenario(args.scenario)
    _set_threads(args.threads)
    report = verify_scenario(sc)
    print(report.text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_csv(out / "verify.csv")
    return 0 if report.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="cbshell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write probe CSVs, a snapshot and a manifest")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (default: $CBSHELL_OUTPUT_DIR/<name>)")
    r.add_argument("--technique", type=int, choices=(1, 2, 3))
    r.add_argument("--dt", type=_dt, help="'auto' or a fixed step in seconds")
    r.add_argument("--threads", type=int)
    r.add_argument("--oracle-only", action="store_true", help="evaluate only the analytical reference")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", help="run FE and oracle and print a pass/fail comparison")
    v.add_argument("scenario")
    v.add_argument("--out", help="also write the report as CSV here")
    v.add_argument("--threads", type=int)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.ConfigError, io.DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

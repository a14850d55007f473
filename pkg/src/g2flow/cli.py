"""Command-line entry point: ``g2flow <command> ...``."""
import argparse
import json
import sys

import numpy as np

from . import algebra, flow, io, soliton
from .errors import (ConfigInvalid, G2FlowError, NotClosed, NotPositive, SnapshotError,
                     SpecMismatch)
from .state import FlowState, perturbed_phi

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_LAMBDA_ABORT = 2
EXIT_POSITIVITY = 3
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_IOERR = 74

FLOW_EXIT = {"t_max_reached": EXIT_OK, "max_steps_reached": EXIT_OK,
             "lambda_abort": EXIT_LAMBDA_ABORT, "left_positive_cone": EXIT_POSITIVITY}


def _err(msg):
    print(f"g2flow: {msg}", file=sys.stderr)


def cmd_verify_identities(args):
    rng = np.random.default_rng(args.seed)
    failed = None
    for n in range(args.count):
        phi = algebra.random_positive_phi(rng, args.cond_max)
        psi = None
        if args.corrupt_psi:
            psi = algebra.psi_from_phi(phi).copy()
            psi[0] = -psi[0]
        res = algebra.fiber_identity_suite(phi, rng, psi)
        worst = max(res, key=res.get)
        print(json.dumps({"fiber": n, "max_residual": res[worst], "residuals": res}))
        bad = [k for k, v in res.items() if not v < args.threshold]
        if bad and failed is None:
            failed = (n, bad[0], res[bad[0]])
    if failed:
        n, name, val = failed
        _err(f"identity {name} failed on fiber {n}: residual {val:.3e} >= {args.threshold:.1e}")
        return EXIT_FAIL
    return EXIT_OK


def _initial_state(cfg):
    if cfg.initial_snapshot is not None:
        fld = io.read_snapshot(cfg.initial_snapshot, cfg.spec.order)
        if fld.spec.dims != cfg.spec.dims or not np.allclose(fld.spec.spacing, cfg.spec.spacing):
            raise SpecMismatch("initial snapshot lattice differs from [grid]")
        return FlowState.from_field(fld)
    return FlowState(cfg.spec, perturbed_phi(cfg.spec, cfg.modes))


def cmd_flow(args):
    try:
        cfg = io.load_run_config(args.config)
    except ConfigInvalid as exc:
        _err(f"invalid config: {exc}")
        return EXIT_USAGE
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    try:
        state = _initial_state(cfg)
    except NotPositive as exc:
        _err(str(exc))
        return EXIT_POSITIVITY
    except SpecMismatch as exc:
        _err(str(exc))
        return EXIT_DATAERR
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR

    snap_dir = cfg.snapshot_dir
    try:
        if snap_dir is not None:
            snap_dir.mkdir(parents=True, exist_ok=True)
        writer = io.MetricsWriter(cfg.csv_path)
    except (OSError, SnapshotError) as exc:
        _err(str(exc))
        return EXIT_IOERR

    def on_step(st, n):
        if snap_dir is not None and cfg.snapshot_every and n % cfg.snapshot_every == 0:
            io.write_snapshot(snap_dir / f"phi_{n:06d}.g2f", st.field())

    try:
        result = flow.run(state, cfg.flow, on_record=writer, on_step=on_step)
        if snap_dir is not None:
            io.write_snapshot(snap_dir / "phi_final.g2f", result.state.field())
        if cfg.figure_path is not None:
            from .plotting import plot_diagnostics
            plot_diagnostics(result.records, cfg.figure_path, title=result.termination)
    except (OSError, SnapshotError) as exc:
        _err(str(exc))
        return EXIT_IOERR
    finally:
        writer.close()

    last = result.records[-1]
    line = (f"termination={result.termination} steps={result.steps} t={last.t:.6g} "
            f"closed_residual={last.closed_residual:.3e} scalar_residual={last.scalar_residual:.3e} "
            f"trace_h_residual={last.trace_h_residual:.3e}")
    if result.failure_site is not None:
        line += f" site={result.failure_site}"
    if result.c_obs is not None:
        line += f" c_obs={result.c_obs:.4g}"
    print(line)
    return FLOW_EXIT[result.termination]


def cmd_soliton_check(args):
    try:
        phi = io.read_snapshot(args.phi)
        X = io.read_snapshot(args.X)
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    try:
        phi.same_lattice(X)
        if phi.kind != "form3" or X.kind != "vector":
            raise SpecMismatch(f"expected form3 and vector snapshots, got {phi.kind} and {X.kind}")
        cand = soliton.SolitonCandidate(FlowState.from_field(phi), X.flat, args.lam)
        report = soliton.soliton_residual(cand)
    except SpecMismatch as exc:
        _err(str(exc))
        return EXIT_DATAERR
    except (NotClosed, NotPositive) as exc:
        _err(str(exc))
        return EXIT_DATAERR
    print(report.summary())
    print("lambda,classification,residual_sup,metric_residual_sup,trace_residual_sup")
    print(",".join([io.format_value(report.lam), report.classification,
                    io.format_value(report.residual_sup),
                    io.format_value(report.metric_residual_sup),
                    io.format_value(report.trace_residual_sup)]))
    return EXIT_OK


def cmd_make_initial(args):
    try:
        cfg = io.load_run_config(args.config)
    except ConfigInvalid as exc:
        _err(f"invalid config: {exc}")
        return EXIT_USAGE
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    try:
        phi = perturbed_phi(cfg.spec, cfg.modes)
    except NotPositive as exc:
        _err(f"{exc} (site {exc.site}, margin {exc.margin:.3e})")
        return EXIT_POSITIVITY
    st = FlowState(cfg.spec, phi)
    try:
        io.write_snapshot(args.output, st.field())
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    margin = float(algebra.positivity_margin(phi).min())
    from .curvature import closedness_residual
    print(f"wrote {args.output}: min positivity margin {margin:.6e}, "
          f"closedness residual {closedness_residual(phi, cfg.spec):.3e}")
    return EXIT_OK


def cmd_rescale(args):
    try:
        fld = io.read_snapshot(args.input)
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    try:
        st = FlowState.from_field(fld)
        lam = st.lam
        site = lam.argmax if args.site is None else args.site
        K = float(lam.values[site]) if args.K is None else args.K
        new = flow.rescale(st, site, K)
        new_lam = float(new.lam.values[site])
    except (ValueError, IndexError, G2FlowError) as exc:
        _err(str(exc))
        return EXIT_DATAERR
    try:
        io.write_snapshot(args.output, new.field())
    except SnapshotError as exc:
        _err(str(exc))
        return EXIT_IOERR
    print(f"site={site} K={K:.6g} lambda_before={lam.values[site]:.6g} lambda_after={new_lam:.6g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="g2flow", description="Laplacian flow of closed G2 structures on periodic lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-identities", help="pointwise identity suite on random positive fibers")
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--count", type=int, default=100)
    v.add_argument("--threshold", type=float, default=1e-9)
    v.add_argument("--cond-max", type=float, default=10.0)
    v.add_argument("--corrupt-psi", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify_identities)

    f = sub.add_parser("flow", help="run the flow described by an INI config")
    f.add_argument("config")
    f.set_defaults(func=cmd_flow)

    s = sub.add_parser("soliton-check", help="soliton residuals of (phi, X, lambda)")
    s.add_argument("phi")
    s.add_argument("X")
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.set_defaults(func=cmd_soliton_check)

    m = sub.add_parser("make-initial", help="write a closed perturbed initial 3-form")
    m.add_argument("config")
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_make_initial)

    r = sub.add_parser("rescale", help="parabolic dilation of a snapshot")
    r.add_argument("input")
    r.add_argument("output")
    r.add_argument("--K", type=float, default=None, help="scale factor (default: Lambda at the site)")
    r.add_argument("--site", type=int, default=None, help="base site (default: argmax of Lambda)")
    r.set_defaults(func=cmd_rescale)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

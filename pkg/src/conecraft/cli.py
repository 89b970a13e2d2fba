"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 verification or
convergence failure.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class CliError(Exception):
    def __init__(self, msg, code=EXIT_USAGE):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_USAGE)


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True))


def cmd_convert(args):
    from .polyhedra import dd_convert, read_hrep, verify_vrep, write_vrep

    h = read_hrep(args.hrep)
    t0 = time.perf_counter()
    v = dd_convert(h, order=args.order)
    elapsed = time.perf_counter() - t0
    write_vrep(args.out, v)
    print(f"m={h.m} d={h.d} n_pointed={v.n_pointed} n_lin={v.n_lin} n_r={v.n_r} "
          f"seconds={elapsed:.3f}")
    for w in v.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.no_verify:
        return EXIT_OK
    seed = args.seed if args.seed is not None else 0
    rep = verify_vrep(h, v, n_samples=args.samples, seed=seed)
    print(f"verify: {'passed' if rep.passed else 'FAILED'} soundness={rep.soundness_max:.2e} "
          f"completeness={rep.completeness_max:.2e} samples={rep.n_samples} ({rep.sampling})")
    if not rep.passed:
        for f in rep.failures:
            print(f"verify: {f}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_gen_constraints(args):
    from .polyhedra import box_cone_hrep, checkerboard_hrep, write_hrep

    if args.kind == "checkerboard":
        if args.side is None or args.tiles is None:
            raise CliError("checkerboard needs --side and --tiles")
        h = checkerboard_hrep(args.side, args.tiles)
    else:
        if args.dim is None:
            raise CliError("box needs --dim")
        h = box_cone_hrep(args.dim)
    write_hrep(args.out, h)
    print(f"wrote {h.m}x{h.d} H-rep to {args.out}")
    return EXIT_OK


def _load_task_config(args):
    from .experiments import ProjectionExperimentConfig, VAEConfig, load_config

    cls = ProjectionExperimentConfig if args.task == "projection" else VAEConfig
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(cls, args.config, overrides)


def cmd_train(args):
    from .experiments import run_projection_experiment, run_vae_experiment, to_dict

    cfg = _load_task_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", {"task": args.task, **to_dict(cfg)})

    def progress(r):
        if not args.quiet:
            print(json.dumps(r), flush=True)

    run = run_projection_experiment if args.task == "projection" else run_vae_experiment
    log = run(cfg, out_dir=out, progress=progress)
    print(json.dumps(log.summary))
    return EXIT_OK


def _save_matrix(prefix: Path, arr):
    np.savetxt(prefix.with_suffix(".txt"), arr, fmt="%.17g")
    prefix.with_suffix(".bin").write_bytes(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def cmd_sample(args):
    from .experiments import sample_vae

    images, report = sample_vae(args.ckpt, args.n, args.seed if args.seed is not None else 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save_matrix(out / "samples", images)
    _write_json(out / "report.json", report)
    ok = report["feasible"] and report["in_box"]
    print(f"samples={report['n']} feasible={report['feasible']} in_box={report['in_box']}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_project(args):
    from .polyhedra import read_hrep
    from .projector import NotConverged, project_batch

    h = read_hrep(args.hrep)
    try:
        ys = np.loadtxt(args.inp, ndmin=2)
    except ValueError as exc:
        raise CliError(f"{args.inp}: {exc}") from exc
    if ys.size == 0:
        ys = np.zeros((0, h.d))
    try:
        z = project_batch(h, args.box, ys, tol=args.tol, max_iter=args.max_iter, strict=True)
    except NotConverged as exc:
        np.savetxt(args.out, exc.z, fmt="%.17g")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    np.savetxt(args.out, z, fmt="%.17g")
    print(f"projected {z.shape[0]} row(s)")
    return EXIT_OK


def cmd_bench(args):
    from .experiments import BenchConfig, bench_inference, load_config

    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = load_config(BenchConfig, args.config, overrides)
    rep = bench_inference(cfg.constrained_ckpt, cfg.unconstrained_ckpt, n_runs=cfg.n_runs,
                          batch=cfg.batch, warmup=cfg.warmup, box=cfg.box, seed=cfg.seed)
    print(json.dumps(rep))
    if args.out:
        _write_json(args.out, rep)
    return EXIT_OK


def cmd_gradcheck(args):
    from .netkit import run_gradcheck_suite

    results = run_gradcheck_suite(seed=args.seed if args.seed is not None else 0)
    worst = 0.0
    for name, err in results.items():
        flag = "ok" if err < args.tol else "FAIL"
        print(f"{name:32s} {err:.3e} {flag}")
        worst = max(worst, err)
    return EXIT_OK if worst < args.tol else EXIT_FAILED


def build_parser():
    # --seed and --threads are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="cap BLAS threads")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p = _Parser(prog="conecraft", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convert", parents=[common],
                       help="H-rep to V-rep via double description")
    c.add_argument("--hrep", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--order", choices=("input", "greedy"), default="greedy")
    c.add_argument("--samples", type=int, default=100, help="verification sample count")
    c.add_argument("--no-verify", action="store_true")
    c.set_defaults(func=cmd_convert)

    g = sub.add_parser("gen-constraints", parents=[common], help="write a standard H-rep")
    g.add_argument("--kind", choices=("checkerboard", "box"), default="checkerboard")
    g.add_argument("--side", type=int)
    g.add_argument("--tiles", type=int, help="tiles per side")
    g.add_argument("--dim", type=int, help="dimension of the box cone")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_constraints)

    t = sub.add_parser("train", parents=[common], help="run an experiment")
    t.add_argument("--task", choices=("projection", "vae"), required=True)
    t.add_argument("--config")
    t.add_argument("--override", action="append", metavar="KEY=VALUE")
    t.add_argument("--out", required=True)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", parents=[common],
                       help="decode prior samples from a VAE checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    pr = sub.add_parser("project", parents=[common],
                        help="project rows of a text matrix onto the cone")
    pr.add_argument("--hrep", required=True)
    pr.add_argument("--in", dest="inp", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--box", action="store_true")
    pr.add_argument("--tol", type=float, default=1e-8)
    pr.add_argument("--max-iter", type=int, default=10000)
    pr.set_defaults(func=cmd_project)

    b = sub.add_parser("bench", parents=[common],
                       help="time constrained inference against projection")
    b.add_argument("--config")
    b.add_argument("--override", action="append", metavar="KEY=VALUE")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every op")
    gc.add_argument("--tol", type=float, default=1e-5)
    gc.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    from .datakit import BadMagic, TruncatedFile
    from .experiments import ConfigError
    from .netkit import CheckpointCorrupt
    from .polyhedra import DimensionMismatch, FormatError, InvalidGrid

    try:
        args = build_parser().parse_args(argv)
        args.seed = getattr(args, "seed", None)
        args.threads = getattr(args, "threads", None)
        limit = (threadpool_limits(limits=args.threads) if args.threads
                 else contextlib.nullcontext())
        with limit:
            return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FormatError, DimensionMismatch, InvalidGrid, ConfigError, BadMagic,
            TruncatedFile, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointCorrupt as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

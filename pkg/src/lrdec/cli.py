"""Command-line driver.

Four subcommands cover the experiment workflows end to end:

* ``synth``       - emit a seeded dictionary, activations and composed signal
* ``reconstruct`` - sweep regularizer weights and ranks, emit metric CSV rows
* ``inpaint``     - complete a partially observed signal
* ``metrics``     - compare two tensors (and optionally rate activations)

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All outputs are
deterministic for a fixed seed; the CSV ``seconds`` column is zeroed unless
``--timing`` is passed, so repeated runs are byte-identical.
"""

import argparse
import re
import sys
from pathlib import Path

from .convmodel import forward_model
from .io import (FormatError, generate_mask, read_dictionary, read_image,
                 read_mask, read_tensor, write_dictionary, write_image,
                 write_mask, write_tensor)
from .metrics import compression_ratio, mse, psnr
from .solver import SolverConfig, lrd_fit, lrd_fit_masked
from .synth import make_problem
from .tensor import KruskalTensor

CSV_HEADER = "reg,rank,psnr_db,cr,nnz,iters,seconds"
_ACTIVATION_RE = re.compile(r"_m(\d+)_mode(\d+)\.lrt$")


def _fmt(x):
    if x == float("inf"):
        return "inf"
    return f"{x:.12g}"


def _float_list(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty value list")
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty value list")
    try:
        return [int(s) for s in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _read_signal(path):
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm"):
        return read_image(path)
    return read_tensor(path)


def _write_activations(out_dir, prefix, activations):
    for m, act in enumerate(activations):
        for n, factor in enumerate(act.factors):
            write_tensor(out_dir / f"{prefix}_m{m}_mode{n}.lrt", factor)


def _load_activations(directory):
    directory = Path(directory)
    found = {}
    for path in sorted(directory.iterdir()):
        match = _ACTIVATION_RE.search(path.name)
        if match:
            m, n = int(match.group(1)), int(match.group(2))
            found.setdefault(m, {})[n] = read_tensor(path)
    if not found:
        raise FormatError(f"{directory}: no activation factor files "
                          f"(*_m<i>_mode<n>.lrt)")
    acts = []
    for m in sorted(found):
        modes = found[m]
        factors = [modes[n] for n in sorted(modes)]
        acts.append(KruskalTensor(factors))
    return acts


def cmd_synth(args):
    shape = tuple(args.shape)
    if args.support is None:
        support = tuple(min(5, s - 1) if s > 1 else 1 for s in shape)
    else:
        support = tuple(args.support)
        if len(support) != len(shape):
            raise ValueError(f"support {support} has wrong order for shape "
                             f"{shape}")
    dictionary, activations, signal = make_problem(
        shape, support, args.num_filters, args.rank, args.seed,
        channels=args.channels, style=args.filter_style)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dictionary(out / "dictionary.lrd", dictionary)
    write_tensor(out / "signal.lrt", signal)
    _write_activations(out, "activation", activations)
    print(f"wrote dictionary.lrd, signal.lrt and "
          f"{args.num_filters * len(shape)} activation factors to {out}")
    return 0


def _solver_config(args, reg, weight, rank):
    return SolverConfig(
        reg=reg,
        lam=weight if reg == "l1" else 0.1,
        alpha=weight if reg == "l2" else 1e-4,
        rank=rank,
        rho_init=args.rho,
        admm_iters=args.admm_iters,
        outer_iters=args.max_outer,
        tol_outer=args.tol,
        cg_tol=args.cg_tol,
        cg_max_iters=args.cg_iters,
        seed=args.seed,
    )


def cmd_reconstruct(args):
    signal = _read_signal(args.signal)
    dictionary = read_dictionary(args.filters)
    weights = args.lam if args.reg == "l1" else args.alpha
    out_dir = Path(args.out) if args.out else None
    if args.save_activations and out_dir is None:
        raise ValueError("--save-activations requires --out")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    rows = [CSV_HEADER]
    point = 0
    for weight in weights:
        for rank in args.rank:
            cfg = _solver_config(args, args.reg, weight, rank)
            activations, report = lrd_fit(signal, dictionary, cfg)
            recon = forward_model(dictionary, activations)
            quality = psnr(signal, recon, peak=args.peak)
            stats = compression_ratio(activations, activations[0].shape,
                                      eps_rel=args.eps_rel)
            seconds = report.seconds if args.timing else 0.0
            rows.append(",".join([
                _fmt(weight), str(rank), _fmt(quality), _fmt(stats.cr),
                str(stats.nnz), str(report.sweeps), _fmt(seconds)]))
            if args.save_activations:
                _write_activations(out_dir, f"point{point}", activations)
            point += 1

    csv = "\n".join(rows) + "\n"
    if out_dir is not None:
        (out_dir / "results.csv").write_text(csv)
    else:
        sys.stdout.write(csv)
    return 0


def cmd_inpaint(args):
    signal = _read_signal(args.signal)
    dictionary = read_dictionary(args.filters)
    if (args.missing is None) == (args.mask is None):
        raise ValueError("exactly one of --missing or --mask is required")
    if args.missing is not None:
        if not 0.0 <= args.missing < 1.0:
            raise ValueError(f"--missing must be in [0, 1), got "
                             f"{args.missing}")
        mask = generate_mask(signal.shape, args.missing, args.seed)
        truth = signal  # the input is pristine; hiding happens here
    else:
        mask = read_mask(args.mask)
        truth = None
    if args.truth:
        truth = _read_signal(args.truth)

    cfg = _solver_config(args, "l2", args.alpha, args.rank)
    _, completed, report = lrd_fit_masked(signal, mask, dictionary, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(out / "completed.lrt", completed)
    write_mask(out / "mask.lrt", mask)
    if Path(args.signal).suffix.lower() in (".pgm", ".ppm"):
        name = "completed.pgm" if completed.ndim == 2 else "completed.ppm"
        write_image(out / name, completed)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if truth is not None:
        print(f"psnr_db={_fmt(psnr(truth, completed, peak=args.peak))}")
    return 0


def cmd_metrics(args):
    reference = _read_signal(args.ref)
    estimate = _read_signal(args.est)
    fields = [_fmt(psnr(reference, estimate, peak=args.peak)),
              _fmt(mse(reference, estimate))]
    if args.activations:
        acts = _load_activations(args.activations)
        stats = compression_ratio(acts, acts[0].shape, eps_rel=args.eps_rel)
        fields += [_fmt(stats.cr), str(stats.nnz)]
    print(",".join(fields))
    return 0


def _add_solver_flags(parser):
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")
    parser.add_argument("--max-outer", type=_positive_int, default=100,
                        help="outer sweep budget")
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="relative objective-change stopping tolerance")
    parser.add_argument("--rho", type=float, default=1.0,
                        help="initial ADMM penalty")
    parser.add_argument("--admm-iters", type=_positive_int, default=50,
                        help="inner ADMM budget per mode visit")
    parser.add_argument("--cg-tol", type=float, default=1e-8,
                        help="CG relative tolerance (masked solves)")
    parser.add_argument("--cg-iters", type=_positive_int, default=500,
                        help="CG budget per masked mode solve")
    parser.add_argument("--peak", type=float, default=1.0,
                        help="peak value for PSNR")
    parser.add_argument("--eps-rel", type=float, default=1e-6,
                        help="relative nonzero threshold for CR")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrd",
        description="Low-rank deconvolution: decomposition, reconstruction "
                    "sweeps, in-painting and metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emit a seeded synthetic problem")
    p.add_argument("--shape", type=_int_list, required=True,
                   help="signal shape, comma separated")
    p.add_argument("--support", type=_int_list, default=None,
                   help="filter support (default: min(5, I-1) per mode)")
    p.add_argument("-M", "--num-filters", type=_positive_int, default=15)
    p.add_argument("--rank", type=_positive_int, default=3)
    p.add_argument("--channels", type=_positive_int, default=1)
    p.add_argument("--filter-style", choices=("noise", "smooth"),
                   default="noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct",
                       help="fit a signal and emit a metrics CSV sweep")
    p.add_argument("--signal", required=True)
    p.add_argument("--filters", required=True)
    p.add_argument("--reg", choices=("l1", "l2"), default="l2")
    p.add_argument("--lambda", dest="lam", type=_float_list, default=[0.1],
                   help="l1 weight sweep, comma separated")
    p.add_argument("--alpha", type=_float_list, default=[1e-4],
                   help="l2 weight sweep, comma separated")
    p.add_argument("--rank", type=_int_list, default=[3],
                   help="rank sweep, comma separated")
    p.add_argument("--out", default=None,
                   help="directory for results.csv (default: stdout)")
    p.add_argument("--save-activations", action="store_true")
    p.add_argument("--timing", action="store_true",
                   help="report wall time in the seconds column")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("inpaint", help="complete a partially observed signal")
    p.add_argument("--signal", required=True)
    p.add_argument("--filters", required=True)
    p.add_argument("--alpha", type=float, default=1e-4)
    p.add_argument("--rank", type=_positive_int, default=3)
    p.add_argument("--missing", type=float, default=None,
                   help="fraction of entries to hide (mask is generated)")
    p.add_argument("--mask", default=None, help="mask tensor file")
    p.add_argument("--truth", default=None,
                   help="ground-truth tensor for PSNR")
    p.add_argument("--out", required=True, help="output directory")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("metrics", help="compare two tensors")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--activations", default=None,
                   help="directory of *_m<i>_mode<n>.lrt factor files")
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--eps-rel", type=float, default=1e-6)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()

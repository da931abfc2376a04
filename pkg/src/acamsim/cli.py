"""``acamsim`` command line.

Exit status: 0 on success, 1 on runtime failure, 2 on usage or input errors.
Tables go to stdout unless ``--out DIR`` is given, in which case each table is
written as ``DIR/<name>.csv`` next to a ``DIR/<name>.json`` config sidecar.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analysis, fewshot, kernel, search
from .core import NoiseSpec, load_array_csv
from .device import load_device_config
from .errors import ParseError


class UsageError(Exception):
    pass


def bundled(name: str) -> Path:
    return Path(str(resources.files("acamsim") / "data" / name))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bits(text: str) -> list[int]:
    """``1-6`` or ``2,4,5``."""
    try:
        if "-" in text:
            lo, hi = (int(v) for v in text.split("-", 1))
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a bit range like 1-6, got {text!r}") from None


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _run_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return json.loads(json.dumps(cfg, default=str))


def emit(args, name: str, text: str, extra: dict | None = None) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    sidecar = {"command": args.command, "version": __version__, "args": _run_config(args)}
    if extra:
        sidecar.update(extra)
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def _device(args):
    return load_device_config(args.config) if args.config else None


# -- subcommands ---------------------------------------------------------------


def cmd_search(args) -> int:
    array = load_array_csv(args.array)
    text = Path(args.queries).read_text() if args.queries != "-" else sys.stdin.read()
    queries = search.parse_query_lines(text, path=args.queries)
    lines = []
    for n, q in enumerate(queries, start=1):
        if q.shape[0] != array.d:
            raise UsageError(f"query {n} has {q.shape[0]} elements, expected d={array.d}")
        lines.append(search.analog_hamming(array, q).to_json())
    emit(args, "search.jsonl", "".join(line + "\n" for line in lines))
    return 0


def cmd_kernel(args) -> int:
    train_x, train_y = kernel.load_xy_csv(args.train)
    test_x, test_y = kernel.load_xy_csv(args.test)
    spec = kernel.KernelSpec(gamma=args.gamma)
    model = kernel.fit(train_x, train_y, spec, args.lam)
    noise = NoiseSpec(args.noise_std, seed=args.seed)
    pred = kernel.predict_acam(model, test_x, quant_bits=args.bits or None, noise=noise)
    exact = kernel.predict_exact(model, test_x)
    summary = {
        "gamma": args.gamma, "lambda": args.lam, "bits": args.bits,
        "noise_std": args.noise_std, "seed": args.seed,
        "m": model.m, "n_test": int(test_x.size),
        "mse": float(np.mean((pred - test_y) ** 2)),
        "mse_exact": float(np.mean((exact - test_y) ** 2)),
    }
    table = _table(["x", "y", "y_acam", "y_exact"],
                   zip(test_x.tolist(), test_y.tolist(), pred.tolist(), exact.tolist()))
    if args.out is not None:
        emit(args, "kernel_predictions.csv", table, {"summary": summary})
        Path(args.out, "kernel_model.json").write_text(model.to_json() + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_fewshot(args) -> int:
    if args.synthetic:
        table = fewshot.synth_embeddings(args.classes, args.per_class, args.dim,
                                         args.cluster_std, args.seed)
    else:
        table = fewshot.load_embeddings(args.embeddings)
    cells = fewshot.sweep_accuracy(table, args.n_way, args.k_shot, args.episodes,
                                   args.window_sizes, args.noise_stds, args.seed,
                                   quant_bits=args.bits or None, centroid=args.centroid,
                                   threads=args.threads)
    baseline = fewshot.cosine_accuracy(table, args.n_way, args.k_shot, args.episodes,
                                       args.seed, args.centroid)
    emit(args, "fewshot.csv", fewshot.dump_accuracy_csv(cells), {"cosine_accuracy": baseline})
    print(f"cosine baseline accuracy: {baseline:.4f}", file=sys.stderr)
    return 0


def cmd_density(args) -> int:
    config = _device(args) or analysis.calibration_config()
    points = analysis.density_sweep(args.bits, config=config)
    rows = [(p.bits, p.window_width, p.sense_margin, p.log10_margin, int(p.degenerate))
            for p in points]
    text = _table(["bits", "window_width", "sense_margin", "log10_margin", "degenerate"], rows)
    emit(args, "density.csv", text, {"device": config.to_dict()})
    return 0


def cmd_scaling(args) -> int:
    pairs = analysis.gamma_scaling_check(seed=args.seed, lam=args.lam)
    r2 = analysis.r2_identity(pairs)
    rows = [(p.freq, p.k, p.gamma_opt, p.mse_unscaled, p.mse_scaled) for p in pairs]
    text = _table(["freq", "k", "gamma_opt", "mse_unscaled", "mse_scaled"], rows)
    emit(args, "scaling.csv", text, {"r2_identity": r2})
    print(f"R^2 against y = x: {r2:.6f}", file=sys.stderr)
    return 0


def cmd_residuals(args) -> int:
    stats = analysis.residual_stats(analysis.DatasetSpec(), args.noise_stds, args.seed,
                                    gamma=args.gamma, lam=args.lam,
                                    quant_bits=args.bits or None, repeats=args.repeats)
    text = _table(["noise_std", "mean", "variance", "n"],
                  [(s.noise_std, s.mean, s.variance, s.n) for s in stats])
    hist = _table(["noise_std", "bin_lo", "bin_hi", "count"],
                  [(s.noise_std, float(lo), float(hi), int(c))
                   for s in stats for lo, hi, c in zip(s.edges[:-1], s.edges[1:], s.counts)])
    emit(args, "residuals.csv", text)
    if args.out is not None:
        emit(args, "residual_hist.csv", hist)
    return 0


def cmd_opcount(args) -> int:
    result = analysis.op_count(args.m, args.d, analysis.OpMode(args.mode))
    print(json.dumps({"m": result.m, "d": result.d, "mode": result.mode.value,
                      "count": result.count, "formula": result.formula}))
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--config", help="device parameter file (key = value)")
    common.add_argument("--out", help="directory for CSV outputs and JSON sidecars")
    common.add_argument("--threads", type=int, default=1, help="worker cap for sweeps")

    parser = argparse.ArgumentParser(prog="acamsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", parents=[common], help="generalized Hamming search")
    p.add_argument("array", help="array CSV")
    p.add_argument("queries", help="query CSV, one vector per line ('-' for stdin)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("kernel", parents=[common], help="kernel regression on the ACAM")
    p.add_argument("--train", default=str(bundled("sin5x_train.csv")))
    p.add_argument("--test", default=str(bundled("sin5x_test.csv")))
    p.add_argument("--gamma", type=float, default=kernel.DEFAULT_GAMMA)
    p.add_argument("--lambda", dest="lam", type=float, default=kernel.DEFAULT_LAMBDA)
    p.add_argument("--bits", type=int, default=4, help="center quantization bits (0 = off)")
    p.add_argument("--noise-std", type=float, default=0.0)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("fewshot", parents=[common], help="few-shot accuracy sweep")
    p.add_argument("--embeddings", default=str(bundled("embeddings.csv")))
    p.add_argument("--synthetic", action="store_true", help="generate clustered embeddings")
    p.add_argument("--classes", type=int, default=20)
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--dim", type=int, default=fewshot.EMBED_DIM)
    p.add_argument("--cluster-std", type=float, default=0.02)
    p.add_argument("--n-way", type=int, default=5)
    p.add_argument("--k-shot", type=int, default=5)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--window-sizes", type=_floats, default=[0.4])
    p.add_argument("--noise-stds", type=_floats, default=[0.0])
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--centroid", action="store_true", help="store class centroids")
    p.set_defaults(func=cmd_fewshot)

    p = sub.add_parser("density", parents=[common], help="bit density vs sense margin")
    p.add_argument("--bits", type=_bits, default=list(range(1, 7)))
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("scaling", parents=[common], help="gamma scaling law check")
    p.add_argument("--lambda", dest="lam", type=float, default=kernel.DEFAULT_LAMBDA)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("residuals", parents=[common], help="residual statistics under window noise")
    p.add_argument("--noise-stds", type=_floats, default=[0.01, 0.02, 0.04, 0.08])
    p.add_argument("--gamma", type=float, default=kernel.DEFAULT_GAMMA)
    p.add_argument("--lambda", dest="lam", type=float, default=kernel.DEFAULT_LAMBDA)
    p.add_argument("--bits", type=int, default=0)
    p.add_argument("--repeats", type=int, default=10)
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("opcount", parents=[common], help="operations per prediction")
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--mode", choices=[m.value for m in analysis.OpMode], default="exact")
    p.set_defaults(func=cmd_opcount)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError) as exc:
        print(f"acamsim: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"acamsim: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

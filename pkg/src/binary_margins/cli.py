"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 infeasible margins, 3 I/O or format
error.  Everything written outside the ``timing`` block depends only on the
inputs and the seed, not on the thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import oracle
from .estimator import AlphaPermanentRequest, alpha_permanent, estimate
from .margins import InfeasibleMarginsError, Margins, MarginsError
from .proposal import ProblemSpec, default_threads, sample_batch

EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class FormatError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def _ints(text: str) -> list[int]:
    parts = [p for p in _SPLIT.split(text.strip()) if p]
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise FormatError(f"expected integers, got {text.strip()!r}") from exc


def read_margins(path: str) -> Margins:
    """Two lines, ``r: ...`` and ``c: ...`` (prefixes optional, in that order)."""
    try:
        lines = [ln for ln in Path(path).read_text().splitlines()
                 if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    found = {}
    plain = []
    for ln in lines:
        key, sep, rest = ln.partition(":")
        if sep and key.strip().lower() in ("r", "c"):
            found[key.strip().lower()] = _ints(rest)
        else:
            plain.append(_ints(ln))
    if "r" not in found and plain:
        found["r"] = plain.pop(0)
    if "c" not in found and plain:
        found["c"] = plain.pop(0)
    if "r" not in found or "c" not in found or plain:
        raise FormatError(f"{path}: expected an 'r:' line and a 'c:' line")
    try:
        return Margins(found["r"], found["c"])
    except MarginsError as exc:
        raise FormatError(str(exc)) from exc


def read_weights(path: str, fmt: str, shape: tuple[int, int]) -> np.ndarray:
    """Dense CSV/whitespace matrix, or ``i,j,w`` triplets (0-based, rest zero)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    rows = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            rows.append([float(p) for p in _SPLIT.split(ln) if p])
        except ValueError as exc:
            if fmt == "triplet" and not rows and ln.lower().replace(" ", "") == "i,j,w":
                continue
            raise FormatError(f"{path}: cannot parse {ln!r}") from exc
    if fmt == "dense":
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise FormatError(f"{path}: ragged or empty weight matrix")
        W = np.array(rows)
    else:
        W = np.zeros(shape)
        for rec in rows:
            if len(rec) != 3:
                raise FormatError(f"{path}: triplet lines need 3 fields")
            i, j, v = int(rec[0]), int(rec[1]), rec[2]
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise FormatError(f"{path}: index ({i}, {j}) out of range")
            W[i, j] = v
    if W.shape != shape:
        raise FormatError(f"{path}: weight shape {W.shape} does not match {shape}")
    if np.any(~np.isfinite(W)) or np.any(W < 0):
        raise FormatError(f"{path}: weights must be finite and nonnegative")
    return W


def read_square(path: str) -> np.ndarray:
    try:
        lines = [ln for ln in Path(path).read_text().splitlines()
                 if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return read_weights(path, "dense", (len(lines), len(lines)))


def _load_problem(args):
    margins = read_margins(args.margins)
    W = None
    if args.weights and args.weight_class:
        raise UsageError("give either --weights or --weight-class, not both")
    if args.weights:
        W = read_weights(args.weights, args.weights_format, (margins.m, margins.n))
    elif args.weight_class:
        W = oracle.weight_class(oracle.minstd_canonical(margins.m, margins.n),
                                args.weight_class)
    if args.transpose:
        margins = margins.transpose()
        W = None if W is None else W.T.copy()
    spec = ProblemSpec(margins, weights=W, approx=args.approx,
                       column_order=args.column_order,
                       canonical=not args.no_canonicalize)
    return spec


def _config(args, drop=()) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func",) and k not in drop}
    return cfg


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _emit(obj, path: str | None):
    text = json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"
    _write(text, path)


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc


def _check_T(T: int):
    if T < 1:
        raise UsageError("T must be a positive integer")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    _check_T(args.T)
    spec = _load_problem(args)
    batch = sample_batch(spec, args.T, args.seed, keep=True, threads=args.threads)
    prep = spec.prepared
    lines = [json.dumps({"config": _clean(_config(args, drop=("threads",)))},
                        sort_keys=True)]
    log_f = batch.log_f
    for t in range(args.T):
        ok = batch.rows[t] >= 0
        rows = batch.rows[t][ok]
        cols = prep.col_perm[batch.cols[t][ok]]
        if args.transpose:
            rows, cols = cols, rows
        order = np.lexsort((cols, rows))
        ones = [[int(rows[k]), int(cols[k])] for k in order]
        rec = {"t": t, "alive": bool(batch.alive[t]), "log_q": float(batch.log_q[t]),
               "log_f": float(log_f[t]), "ones": ones}
        lines.append(json.dumps(_clean(rec), sort_keys=True))
    _write("\n".join(lines) + "\n", args.output)
    return 0


def _summary_json(summary, args, elapsed: float) -> dict:
    out = summary.to_dict()
    out["log10_kappa_hat"] = summary.kappa_hat.log10
    out["seed"] = args.seed
    out["approx"] = args.approx
    out["timing"] = {"seconds": elapsed, "threads": args.threads}
    out["config"] = _config(args, drop=("threads",))
    return out


def cmd_estimate(args) -> int:
    _check_T(args.T)
    spec = _load_problem(args)
    t0 = time.perf_counter()
    batch = sample_batch(spec, args.T, args.seed, threads=args.threads)
    summary = estimate(batch.log_f)
    _emit(_summary_json(summary, args, time.perf_counter() - t0), args.output)
    return 0


def cmd_alpha_permanent(args) -> int:
    _check_T(args.T)
    if args.weights is None and args.constant is None:
        raise UsageError("give --weights FILE or --constant N")
    if args.weights is not None and args.constant is not None:
        raise UsageError("give either --weights or --constant, not both")
    if not args.alpha > 0:
        raise UsageError("alpha must be positive")
    if args.constant is not None:
        if args.constant < 1:
            raise UsageError("--constant needs a positive size")
        W = np.full((args.constant, args.constant), args.value)
    else:
        W = read_square(args.weights)
    t0 = time.perf_counter()
    summary = alpha_permanent(AlphaPermanentRequest(W, args.alpha, args.T),
                              seed=args.seed, threads=args.threads, approx=args.approx)
    out = summary.to_dict()
    out["per_hat"] = out.pop("product_hat")
    out["se_per"] = out.pop("se_product")
    out["log10_per_hat"] = summary.product_hat.log10
    out["alpha"] = args.alpha
    out["seed"] = args.seed
    out["approx"] = args.approx
    out["timing"] = {"seconds": time.perf_counter() - t0, "threads": args.threads}
    out["config"] = _config(args, drop=("threads",))
    _emit(out, args.output)
    return 0


def cmd_oracle(args) -> int:
    kind = args.kind
    if kind == "two-regular":
        if args.n is None or args.n < 1:
            raise UsageError("two-regular needs a positive size")
        res = oracle.two_regular_count(args.n)
    elif kind == "finch":
        res = oracle.finch_count()
    elif kind in ("enumerate", "count"):
        if not args.margins:
            raise UsageError(f"{kind} needs --margins")
        margins = read_margins(args.margins)
        if kind == "count":
            res = oracle.count_matrices(margins)
        else:
            mats = oracle.enumerate_omega(margins, cap=args.cap)
            res = oracle.ExactCount(len(mats), "enumeration")
    elif kind == "permanent":
        if not args.weights:
            raise UsageError("permanent needs --weights")
        W = read_square(args.weights)
        res = oracle.exact_permanent(W)
    elif kind == "const-alpha":
        if args.n is None or args.n < 1:
            raise UsageError("const-alpha needs a positive size")
        res = oracle.const_alpha_permanent(args.n, _num(args.value), _num(args.alpha))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown oracle {kind}")
    value = res.value
    text = str(value)
    out = {"kind": kind, "value": text, "method": res.method, "log10": res.log10}
    if args.json:
        _emit(out, args.output)
    else:
        _write(text + "\n", args.output)
    return 0


def _num(x: str):
    from fractions import Fraction
    try:
        return Fraction(x)
    except ValueError as exc:
        raise UsageError(f"not a number: {x!r}") from exc


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _problem_args(p):
    p.add_argument("--margins", required=True, help="file with 'r:' and 'c:' lines")
    p.add_argument("--weights", help="weight matrix file")
    p.add_argument("--weights-format", choices=("dense", "triplet"), default="dense")
    p.add_argument("--weight-class", choices=("I", "II", "III", "IV"),
                   help="weights from the MINSTD canonical matrix")
    p.add_argument("--approx", choices=("canfield", "greenhill"), default="canfield")
    p.add_argument("--no-canonicalize", action="store_true",
                   help="use raw weights for the v factors")
    p.add_argument("--column-order", choices=("auto", "none", "descend"), default="auto")
    p.add_argument("--transpose", action="store_true",
                   help="sample the transposed problem")


def _run_args(p):
    p.add_argument("-T", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $BINARY_MARGINS_THREADS or 1)")
    p.add_argument("-o", "--output", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="binary-margins",
                     description="Importance sampling of binary matrices with fixed margins.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="write sampled matrices as JSON lines")
    _problem_args(p)
    _run_args(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate the normalizing constant")
    _problem_args(p)
    _run_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("alpha-permanent", help="estimate an alpha-permanent")
    p.add_argument("--weights", help="dense square weight matrix")
    p.add_argument("--constant", type=int, help="use the N x N constant matrix")
    p.add_argument("--value", type=float, default=1.0, help="entry of the constant matrix")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--approx", choices=("canfield", "greenhill"), default="canfield")
    _run_args(p)
    p.set_defaults(func=cmd_alpha_permanent)

    p = sub.add_parser("oracle", help="exact values for verification")
    p.add_argument("kind", choices=("two-regular", "finch", "enumerate", "count",
                                    "permanent", "const-alpha"))
    p.add_argument("n", nargs="?", type=int)
    p.add_argument("--margins")
    p.add_argument("--weights")
    p.add_argument("--value", default="1")
    p.add_argument("--alpha", default="1")
    p.add_argument("--cap", type=int, default=10**7)
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"binary-margins: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleMarginsError as exc:
        print(f"binary-margins: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FormatError, OSError, ValueError) as exc:
        print(f"binary-margins: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``divflow <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error (including bad
argument values), 2 unreadable or malformed data, 3 infeasible instance,
4 any other failure.
"""

import argparse
import json
import sys

import numpy as np

from . import harness
from .constructions import (
    binary_cdg,
    category_network,
    construction_network,
    full_cdg,
    max_aggdiv,
    min_discrepancy,
    two_pass,
    two_slope_network,
    weighted,
)
from .errors import DataError, InfeasibleError
from .graph import clamp_display, read_graph, read_solution, validate_feasible, write_graph, write_solution
from .greedy import DEFAULT_GRID, GreedyConfig, greedy_sweep
from .mcf import write_dimacs
from .metrics import discrepancy_at, evaluate
from .ratings import DELIMITERS, RatingDataset, make_folds, parse_ratings, prefilter, write_ratings
from .recommenders import (
    NeighborhoodModel,
    score_item_based,
    score_random_walk,
    score_user_based,
    top_k_candidates,
    write_scores,
)
from .rerankers import SeenModel, rerank_bayes, rerank_fd, rerank_pc, rerank_top
from .targets import blend_target, proportional_target, read_target, uniform_target

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3, 4

DIVERSIFY_MODES = ("TOP", "PC", "FD", "AB", "AGG", "GOL", "MIN", "WGT", "GRD",
                   "CDG-bin", "CDG-full", "CAT", "2SLOPE")
EXPORT_MODES = {"MIN": "discrepancy", "GOL": "two-pass", "AGG": "aggdiv", "WGT": "weighted",
                "CDG-bin": "binary-cdg", "CDG-full": "full-cdg", "CAT": "category", "2SLOPE": "two-slope"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


def _write(path, text):
    fh = _open_out(path)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _read(path, fn, *args):
    with open(path, encoding="utf-8") as fh:
        return fn(fh, *args)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _load_ratings(args):
    with open(args.input, encoding="utf-8", errors="replace") as fh:
        ds = parse_ratings(fh, args.format, header=args.header)
    return prefilter(ds, args.min_user, args.min_item)


def _load_graph(args):
    g = _read(args.graph, read_graph)
    if getattr(args, "clamp_display", False):
        return clamp_display(g)
    bad = validate_feasible(g)
    if bad:
        raise InfeasibleError(f"{len(bad)} users have fewer candidates than display slots "
                              "(use --clamp-display)", bad)
    return g


def _load_target(spec, g):
    if spec == "uniform":
        return uniform_target(g)
    if spec == "proportional":
        return proportional_target(g)
    if spec.startswith("blend:"):
        return blend_target(uniform_target(g), proportional_target(g), float(spec[6:]))
    t = _read(spec, read_target)
    if t.a.shape[0] != g.n_items:
        raise DataError(f"target covers {t.a.shape[0]} items, graph has {g.n_items}")
    if t.total != g.total_display:
        raise DataError(f"target total {t.total} differs from display total {g.total_display}")
    return t


def _load_categories(path, g):
    labels = np.full(g.n_items, -1, dtype=np.int64)
    names = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                j, name = line.rstrip("\n").split("\t")
                labels[int(j)] = names.setdefault(name.strip(), len(names))
            except (ValueError, IndexError):
                raise DataError(f"expected item<TAB>category, got {line.strip()!r}", lineno) from None
    if (labels < 0).any():
        raise DataError(f"{int((labels < 0).sum())} items have no category")
    return labels


def _common_ratings(p):
    p.add_argument("--input", required=True, help="rating file")
    p.add_argument("--format", choices=sorted(DELIMITERS), default="double-colon")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--min-user", type=int, default=20, help="prefilter: ratings per user")
    p.add_argument("--min-item", type=int, default=10, help="prefilter: ratings per item")


def _common_graph(p):
    p.add_argument("--graph", required=True, help="candidate graph TSV")
    p.add_argument("--target", default="uniform",
                   help="uniform, proportional, blend:ALPHA or a target file")
    p.add_argument("--clamp-display", action="store_true",
                   help="lower each display constraint to the user's candidate count")


def _mode_params(p):
    p.add_argument("--mu", type=float, default=1.0, help="WGT relevance weight")
    p.add_argument("--categories", help="CAT: item<TAB>category file (dense item ids)")
    p.add_argument("--cat-fraction", type=float, default=0.5,
                   help="CAT: minimum per category as a fraction of its targets")
    p.add_argument("--slope-threshold", type=int, default=20)
    p.add_argument("--slopes", type=_ints, default=(1, 2), help="two integer slopes, e.g. 1,2")
    p.add_argument("--method", choices=("auto", "cost-scaling", "capacity-scaling", "ssp"), default="auto")


def build_parser():
    parser = _Parser(prog="divflow", description="Diversify top-k recommendations with min-cost flow.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse, prefilter and re-index a rating file")
    _common_ratings(p)
    p.add_argument("--out", help="canonical TSV with dense ids (default stdout)")

    p = sub.add_parser("score", help="score unrated pairs and extract top-k candidates")
    _common_ratings(p)
    p.add_argument("--recommender", choices=("IB", "UB", "RW"), default="IB")
    p.add_argument("--neighborhood", type=int, default=100)
    p.add_argument("--forward", action="store_true", help="forward instead of inverted neighbourhoods")
    p.add_argument("--rw-alpha", type=float, default=1.5)
    p.add_argument("--fold", type=int, help="score the training part of this fold")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="dense score TSV (default stdout)")
    p.add_argument("--k", type=int, help="also write a top-k candidate graph")
    p.add_argument("--c", type=int, default=10, help="display size of the candidate graph")
    p.add_argument("--graph-out", help="where to write the candidate graph")
    p.add_argument("--relevant-out", help="write the fold's relevant test pairs here")

    p = sub.add_parser("diversify", help="pick the displayed subgraph of a candidate graph")
    _common_graph(p)
    p.add_argument("--mode", choices=DIVERSIFY_MODES, default="GOL")
    _mode_params(p)
    p.add_argument("--ratings", help="PC/FD: canonical training TSV from ingest")
    p.add_argument("--bayes-alpha", type=float, default=0.5)
    p.add_argument("--greedy-q", type=_floats, default=DEFAULT_GRID)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="solution TSV (default stdout)")
    p.add_argument("--summary", help="write a JSON summary here")

    p = sub.add_parser("evaluate", help="metrics of a solution")
    _common_graph(p)
    p.add_argument("--solution", required=True)
    p.add_argument("--relevant", help="user<TAB>item relevant test pairs (dense ids)")
    p.add_argument("--out", help="metrics JSON (default stdout)")

    p = sub.add_parser("sweep", help="run a configured experiment")
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--clamp-display", action="store_true")
    p.add_argument("--workers", type=int, help=f"fold workers (default ${harness.WORKERS_ENV} or 1)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("export-dimacs", help="write the flow network of a mode in DIMACS format")
    _common_graph(p)
    p.add_argument("--mode", choices=sorted(EXPORT_MODES), default="MIN")
    _mode_params(p)
    p.add_argument("--out", help="DIMACS file (default stdout)")
    return parser


def cmd_ingest(args):
    ds = _load_ratings(args)
    _write(args.out, write_ratings(ds))
    print(json.dumps({"users": ds.n_users, "items": ds.n_items, "ratings": len(ds),
                      "duplicates": ds.duplicates}), file=sys.stderr)


def cmd_score(args):
    ds = _load_ratings(args)
    train, relevant = ds, None
    if args.fold is not None:
        splits = make_folds(ds, args.folds, args.threshold, args.seed)
        if not 0 <= args.fold < args.folds:
            raise UsageError(f"--fold must lie in 0..{args.folds - 1}")
        train, relevant = splits[args.fold].train, splits[args.fold].test_relevant
    model = NeighborhoodModel(args.neighborhood, not args.forward)
    if args.recommender == "IB":
        rel = score_item_based(train, model)
    elif args.recommender == "UB":
        rel = score_user_based(train, model)
    else:
        rel = score_random_walk(train, args.rw_alpha)
    _write(args.out, write_scores(rel))
    if args.k is not None:
        if args.k < args.c:
            raise UsageError("--k must be at least --c")
        if not args.graph_out:
            raise UsageError("--k needs --graph-out")
        _write(args.graph_out, write_graph(top_k_candidates(rel, args.k, args.c)))
    if args.relevant_out and relevant is not None:
        _write(args.relevant_out, "".join(f"{u}\t{i}\n" for u, i in sorted(relevant)))


def _seen(args):
    if not args.ratings:
        raise UsageError(f"mode {args.mode} needs --ratings")
    ds = _read(args.ratings, parse_ratings, "tab")
    # canonical files carry dense ids already; keep that index space
    users = np.array([int(x) for x in ds.user_ids])[ds.users]
    items = np.array([int(x) for x in ds.item_ids])[ds.items]
    n = int(users.max()) + 1
    r = int(items.max()) + 1
    dense = RatingDataset(users, items, ds.ratings, range(n), range(r))
    return SeenModel.from_ratings(dense)


def _solve(args, g, t):
    mode, kw = args.mode, {"method": args.method}
    if mode == "TOP":
        return rerank_top(g), {}
    if mode in ("PC", "FD"):
        seen = _seen(args)
        if seen.p_seen.shape[0] < g.n_items:
            raise DataError("training ratings cover fewer items than the graph")
        return (rerank_pc if mode == "PC" else rerank_fd)(g, seen), {}
    if mode == "AB":
        return rerank_bayes(g, args.bayes_alpha), {}
    if mode == "GRD":
        return greedy_sweep(g, t, GreedyConfig(args.greedy_q, args.seed)), {}
    if mode == "AGG":
        res = max_aggdiv(g, **kw)
    elif mode == "MIN":
        res = min_discrepancy(g, t, **kw)
    elif mode == "GOL":
        res = two_pass(g, t, **kw)
    elif mode == "WGT":
        res = weighted(g, t, args.mu, **kw)
    elif mode == "CDG-bin":
        res = binary_cdg(g, t, **kw)
    elif mode == "CDG-full":
        res = full_cdg(g, t, **kw)
    elif mode == "CAT":
        res = category_network(g, t, _categories(args, g, t), **kw)
    else:
        res = two_slope_network(g, t, args.slope_threshold, args.slopes, **kw)
    return res.subgraph, res.summary()


def _categories(args, g, t):
    if not args.categories:
        raise UsageError("mode CAT needs --categories")
    return harness.category_spec(_load_categories(args.categories, g), t.a, args.cat_fraction)


def cmd_diversify(args):
    g = _load_graph(args)
    t = _load_target(args.target, g)
    h, info = _solve(args, g, t)
    _write(args.out, write_solution(h))
    summary = {"mode": args.mode, "users": g.n_users, "items": g.n_items, "edges": g.n_edges,
               "normalized_discrepancy": discrepancy_at(h, t), "relevance": h.total_relevance(), **info}
    summary["mode"] = args.mode  # keep the CLI name over the construction's
    text = json.dumps(summary, indent=1) + "\n"
    if args.summary:
        _write(args.summary, text)
    else:
        print(text, end="", file=sys.stderr)


def cmd_evaluate(args):
    g = _load_graph(args)
    t = _load_target(args.target, g)
    h = _read(args.solution, read_solution, g)
    relevant = None
    if args.relevant:
        with open(args.relevant, encoding="utf-8") as fh:
            try:
                relevant = {tuple(int(x) for x in line.split("\t")) for line in fh if line.strip()}
            except ValueError:
                raise DataError("relevant pairs must be user<TAB>item integers") from None
    _write(args.out, json.dumps(evaluate(h, t, relevant).as_dict(), indent=1) + "\n")


def cmd_sweep(args):
    overrides = list(args.set)
    if args.clamp_display:
        overrides.append("clamp_display=true")
    cfg = harness.load_config(args.config, overrides)
    if not cfg.dataset:
        raise harness.ConfigError("no dataset configured")
    rec = harness.run_experiment(cfg, args.out, args.workers)
    written = harness.emit_outputs(rec, args.out)
    print(json.dumps({"fingerprint": rec.fingerprint, "rows": len(rec.rows),
                      "files": [str(p) for p in written]}), file=sys.stderr)


def cmd_export_dimacs(args):
    g = _load_graph(args)
    t = _load_target(args.target, g)
    mode = EXPORT_MODES[args.mode]
    params = {}
    if mode == "weighted":
        params["mu"] = args.mu
    elif mode == "category":
        params["categories"] = _categories(args, g, t)
    elif mode == "two-slope":
        params.update(threshold=args.slope_threshold, slopes=args.slopes)
    net = construction_network(mode, g, t, **params)
    _write(args.out, write_dimacs(net, comment=f"divflow {args.mode} l={g.n_users} r={g.n_items}"))


COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "diversify": cmd_diversify,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "export-dimacs": cmd_export_dimacs,
}


def _exit_code(exc):
    if isinstance(exc, harness.StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, (UsageError, harness.ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (DataError, OSError, UnicodeDecodeError)):
        return EXIT_DATA
    if isinstance(exc, ValueError):
        return EXIT_USAGE  # bad argument values surface as ValueError
    return EXIT_INTERNAL


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except SystemExit as exc:  # --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except Exception as exc:
        code = _exit_code(exc)
        print(f"divflow: error: {exc}", file=sys.stderr)
        if code == EXIT_USAGE and isinstance(exc, UsageError):
            print("run 'divflow <command> --help' for usage", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

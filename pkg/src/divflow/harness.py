"""End-to-end experiment sweeps: ingest, score, diversify and evaluate per fold.

A sweep is described by an :class:`ExperimentConfig`, usually read from a
``key = value`` file. :func:`run_experiment` produces a :class:`RunRecord`
and :func:`emit_outputs` writes it as ``metrics.csv``, ``summary.json`` and
``tradeoff.csv``.
"""

from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
import csv
from dataclasses import asdict, dataclass, field, fields
import hashlib
import io
import json
import os
from pathlib import Path
import time
import typing

import numpy as np

from .constructions import (
    CategorySpec,
    binary_cdg,
    category_network,
    construction_network,
    full_cdg,
    max_aggdiv,
    two_pass,
    two_slope_network,
    weighted,
)
from .errors import DataError, DivflowError, InfeasibleError
from .graph import CandidateGraph, SolutionSubgraph, clamp_display, indegree_vector, validate_feasible
from .greedy import DEFAULT_GRID, GreedyConfig, greedy_sweep
from .mcf import write_dimacs
from .metrics import MetricsReport, evaluate, signed_rank
from .ratings import make_folds, parse_ratings, prefilter
from .recommenders import (
    NeighborhoodModel,
    RelevanceFunction,
    score_item_based,
    score_random_walk,
    score_user_based,
    top_k_candidates,
)
from .rerankers import SeenModel, rerank_bayes, rerank_fd, rerank_pc, rerank_top
from .targets import blend_target, proportional_target, scale_target, uniform_target

MODE_NAMES = ("TOP", "AGG", "PC", "FD", "AB", "GOL", "WGT", "GRD", "CDG-bin", "CDG-full", "CAT", "2SLOPE")
RECOMMENDERS = ("IB", "UB", "RW", "imported")
TARGETS = ("uniform", "proportional", "blend")
# modes solved per user batch when batching is on
BATCHED = {"AGG", "GOL", "WGT", "CDG-bin", "CDG-full", "2SLOPE"}
KEY_COLUMNS = ("target", "mode", "k", "fold")
COLUMNS = KEY_COLUMNS + tuple(MetricsReport.fields())
WORKERS_ENV = "DIVFLOW_WORKERS"


class ConfigError(DivflowError, ValueError):
    """Invalid experiment configuration."""


class StageError(DivflowError):
    """A failure inside one pipeline stage, tagged with where it happened."""

    def __init__(self, stage, where, cause):
        loc = ", ".join(f"{k} {v}" for k, v in where.items())
        super().__init__(f"stage {stage}{f' ({loc})' if loc else ''}: {cause}")
        self.stage = stage
        self.where = dict(where)
        self.cause = cause


class OptimalityError(AssertionError):
    """A runtime optimality check failed."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    format: str = "double-colon"
    header: bool = False
    min_user_ratings: int = 20
    min_item_ratings: int = 10
    threshold: float = 3.0
    recommender: str = "IB"
    scores: str = ""
    neighborhood: int = 100
    inverted: bool = True
    rw_alpha: float = 1.5
    rw_renormalize: bool = False
    k_grid: tuple[int, ...] = (50, 100, 200, 300, 400, 500)
    c: int = 10
    clamp_display: bool = False
    target: tuple[str, ...] = ("uniform",)
    alphas: tuple[float, ...] = (0.5,)
    modes: tuple[str, ...] = ("TOP", "GOL")
    mu: tuple[float, ...] = (1.0,)
    greedy_q: tuple[float, ...] = DEFAULT_GRID
    greedy_slack: float = 0.10
    bayes_alpha: float = 0.5
    categories: str = ""
    cat_bins: int = 3
    cat_fraction: float = 0.5
    slope_threshold: int = 20
    slopes: tuple[int, ...] = (1, 2)
    folds: int = 10
    run_folds: int = 0
    seed: int = 0
    user_batches: int = 1
    dimacs: bool = False
    method: str = "auto"

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if not 0 <= self.run_folds <= self.folds:
            raise ConfigError("run_folds must lie in 0..folds")
        if self.c < 1:
            raise ConfigError("c must be positive")
        if not self.k_grid:
            raise ConfigError("k_grid is empty")
        short = [k for k in self.k_grid if k < self.c]
        if short:
            raise ConfigError(f"k_grid entries below c={self.c}: {short}")
        if self.recommender not in RECOMMENDERS:
            raise ConfigError(f"unknown recommender {self.recommender!r}; expected one of {RECOMMENDERS}")
        if self.recommender == "imported" and not self.scores:
            raise ConfigError("recommender 'imported' needs a scores file")
        bad = [t for t in self.target if t not in TARGETS]
        if bad or not self.target:
            raise ConfigError(f"unknown target {bad}; expected some of {TARGETS}")
        if any(not 0 <= a <= 1 for a in self.alphas):
            raise ConfigError("blend alphas must lie in [0, 1]")
        bad = [m for m in self.modes if m not in MODE_NAMES]
        if bad:
            raise ConfigError(f"unknown modes {bad}; expected some of {MODE_NAMES}")
        if len(set(self.modes)) != len(self.modes):
            raise ConfigError("modes repeat")
        if self.user_batches < 1:
            raise ConfigError("user_batches must be positive")
        if "WGT" in self.modes and not self.mu:
            raise ConfigError("WGT needs at least one mu")
        if len(self.slopes) != 2:
            raise ConfigError("slopes takes two values")
        if self.cat_bins < 1 or not 0 <= self.cat_fraction <= 1:
            raise ConfigError("cat_bins must be positive and cat_fraction in [0, 1]")
        try:
            GreedyConfig(self.greedy_q, self.seed, self.greedy_slack)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def mode_labels(self):
        """Modes as reported, with ``WGT`` expanded per mu."""
        out = []
        for m in self.modes:
            if m == "WGT":
                out.extend(f"WGT({mu:g})" for mu in self.mu)
            else:
                out.append(m)
        return out

    def target_labels(self):
        out = []
        for t in self.target:
            if t == "blend":
                out.extend(f"blend({a:g})" for a in self.alphas)
            else:
                out.append(t)
        return out

    def input_files(self):
        return [p for p in (self.dataset, self.scores, self.categories) if p]

    def fingerprint(self):
        """sha256 over the canonical config and the bytes of every input file."""
        h = hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode())
        for path in self.input_files():
            digest = hashlib.sha256()
            with open(path, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    digest.update(chunk)
            h.update(digest.digest())
        return h.hexdigest()


def _convert(name, hint, text):
    text = text.strip()
    origin = typing.get_origin(hint)
    try:
        if origin is tuple:
            inner = typing.get_args(hint)[0]
            return tuple(_convert(name, inner, x) for x in text.split(",") if x.strip())
        if hint is bool:
            low = text.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError
            return low in ("1", "true", "yes", "on")
        return hint(text)
    except ValueError:
        raise ConfigError(f"bad value {text!r} for {name}") from None


PATH_KEYS = ("dataset", "scores", "categories")


def _parse_entries(entries):
    hints = typing.get_type_hints(ExperimentConfig)
    values = {}
    for where, line in entries:
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{where}: expected key=value, got {line!r}")
        if key not in hints:
            raise ConfigError(f"{where}: unknown key {key!r}")
        values[key] = _convert(key, hints[key], value)
    return values


def _file_entries(text):
    return [(f"line {n}", raw.split("#", 1)[0].strip()) for n, raw in enumerate(text.splitlines(), start=1)]


def _override_entries(overrides):
    return [(f"--set {o}", o.strip()) for o in overrides]


def parse_config(text, overrides=()):
    """Build a config from ``key = value`` lines plus ``key=value`` overrides.

    Blank lines and ``#`` comments are ignored; lists are comma separated.
    """
    values = _parse_entries(_file_entries(text))
    values.update(_parse_entries(_override_entries(overrides)))
    return ExperimentConfig(**values)


def load_config(path=None, overrides=()):
    """Like :func:`parse_config` but reading ``path``.

    Input paths in the file resolve against its directory, override paths
    against the working directory.
    """
    values = {}
    if path:
        values = _parse_entries(_file_entries(Path(path).read_text()))
        base = Path(path).resolve().parent
        for k in PATH_KEYS:
            if values.get(k):
                values[k] = str(base / values[k])
    extra = _parse_entries(_override_entries(overrides))
    for k in PATH_KEYS:
        if extra.get(k):
            extra[k] = os.path.abspath(extra[k])
    values.update(extra)
    return ExperimentConfig(**values)


def dump_config(cfg):
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    return "\n".join(lines) + "\n"


@dataclass(eq=False)
class RunRecord:
    fingerprint: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    status: str = "complete"
    error: str = ""

    def metrics(self, target, mode, k, metric):
        """Per-fold values of one metric, in fold order."""
        return [r[metric] for r in self.rows if (r["target"], r["mode"], r["k"]) == (target, mode, k)]


@contextmanager
def _stage(name, **where):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, where, exc) from exc


def _open_text(path):
    return open(path, encoding="utf-8", errors="replace")


def load_dataset(cfg):
    with _stage("ingest"):
        with _open_text(cfg.dataset) as fh:
            ds = parse_ratings(fh, cfg.format, header=cfg.header)
        return prefilter(ds, cfg.min_user_ratings, cfg.min_item_ratings)


def _read_raw_scores(path, ds):
    uidx = {x: k for k, x in enumerate(ds.user_ids)}
    iidx = {x: k for k, x in enumerate(ds.item_ids)}
    raw = np.full((ds.n_users, ds.n_items), np.nan)
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.strip().split("\t")
            if parts == [""]:
                continue
            if len(parts) != 3:
                raise DataError(f"malformed score line {line.strip()!r}", lineno)
            u, i = uidx.get(parts[0]), iidx.get(parts[1])
            if u is None or i is None:
                continue  # pair dropped by the prefilter
            try:
                raw[u, i] = float(parts[2])
            except ValueError:
                raise DataError(f"score {parts[2]!r} is not a number", lineno) from None
    if not np.isfinite(raw[~np.isnan(raw)]).all():
        raise DataError("scores must be finite")
    return raw


def score(cfg, train, imported=None):
    model = NeighborhoodModel(cfg.neighborhood, cfg.inverted)
    if cfg.recommender == "IB":
        return score_item_based(train, model)
    if cfg.recommender == "UB":
        return score_user_based(train, model)
    if cfg.recommender == "RW":
        return score_random_walk(train, cfg.rw_alpha, cfg.rw_renormalize)
    return RelevanceFunction.from_raw(imported, "imported", train)


def _read_categories(path, ds):
    iidx = {x: k for k, x in enumerate(ds.item_ids)}
    labels = np.full(ds.n_items, -1, dtype=np.int64)
    names = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if parts == [""]:
                continue
            if len(parts) != 2:
                raise DataError("expected item<TAB>category", lineno)
            j = iidx.get(parts[0].strip())
            if j is not None:
                labels[j] = names.setdefault(parts[1].strip(), len(names))
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise DataError(f"{missing.size} items have no category, e.g. {ds.item_ids[int(missing[0])]!r}")
    return labels


def popularity_bins(counts, bins):
    """Label items by popularity rank: bin 0 holds the most rated items."""
    order = np.argsort(-np.asarray(counts), kind="stable")
    labels = np.empty(len(order), dtype=np.int64)
    for b, chunk in enumerate(np.array_split(order, bins)):
        labels[chunk] = b
    return labels


def category_spec(labels, a, fraction):
    """Minimum count per category: ``fraction`` of its summed item targets, floored."""
    k = int(labels.max()) + 1 if labels.size else 0
    per_cat = np.bincount(labels, weights=a, minlength=k).astype(np.int64)
    return CategorySpec(labels, (per_cat * fraction).astype(np.int64))


def batch_slices(n_users, batches):
    """Contiguous user ranges, as ``(lo, hi)`` pairs."""
    bounds = np.linspace(0, n_users, min(batches, max(n_users, 1)) + 1).astype(np.int64)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]


def solve_batched(g, t, batches, solve):
    """Solve ``solve(subgraph, target)`` per user batch and merge the picks.

    Each batch gets the real target rescaled to its own display total.
    """
    if batches <= 1:
        return solve(g, t)
    ptr = g.user_ptr
    chosen, rank = [], []
    for lo, hi in batch_slices(g.n_users, batches):
        e0, e1 = int(ptr[lo]), int(ptr[hi])
        sub = CandidateGraph(hi - lo, g.n_items, g.users[e0:e1] - lo, g.items[e0:e1], None,
                             g.display[lo:hi], weights_fp=g.weights_fp[e0:e1])
        tb = None if t is None else scale_target(t, sub.total_display)
        h = solve(sub, tb)
        chosen.append(h.chosen + e0)
        rank.append(h.rank)
    return SolutionSubgraph(g, np.concatenate(chosen), np.concatenate(rank))


def make_targets(cfg, g):
    f = uniform_target(g)
    out = {}
    for name in cfg.target:
        if name == "uniform":
            out["uniform"] = f
        elif name == "proportional":
            out["proportional"] = proportional_target(g)
        else:
            p = proportional_target(g)
            for alpha in cfg.alphas:
                out[f"blend({alpha:g})"] = blend_target(f, p, alpha)
    return out


def _dimacs_mode(label):
    if label.startswith("WGT("):
        return "weighted", {"mu": float(label[4:-1])}
    return {"GOL": "two-pass", "AGG": "aggdiv", "CDG-bin": "binary-cdg", "CDG-full": "full-cdg",
            "CAT": "category", "2SLOPE": "two-slope"}.get(label), {}


class _Context:
    """Everything a mode needs besides the graph and target."""

    def __init__(self, cfg, rel, seen, labels, fold, k):
        self.cfg, self.rel, self.seen, self.labels = cfg, rel, seen, labels
        self.fold, self.k = fold, k

    def run(self, label, g, t):
        cfg = self.cfg
        kw = {"method": cfg.method}
        if label == "TOP":
            return rerank_top(g)
        if label == "PC":
            return rerank_pc(g, self.seen)
        if label == "FD":
            return rerank_fd(g, self.seen)
        if label == "AB":
            return rerank_bayes(g, cfg.bayes_alpha, self.rel)
        if label == "GRD":
            gc = GreedyConfig(cfg.greedy_q, (cfg.seed, self.fold, self.k), cfg.greedy_slack)
            return greedy_sweep(g, t, gc)
        if label == "CAT":
            return category_network(g, t, category_spec(self.labels, t.a, cfg.cat_fraction), **kw).subgraph
        base = label.split("(")[0]
        batches = cfg.user_batches if base in BATCHED else 1
        if label == "AGG":
            fn = lambda sg, st: max_aggdiv(sg, **kw).subgraph  # noqa: E731
        elif label == "GOL":
            fn = lambda sg, st: two_pass(sg, st, **kw).subgraph  # noqa: E731
        elif base == "WGT":
            mu = float(label[4:-1])
            fn = lambda sg, st: weighted(sg, st, mu, **kw).subgraph  # noqa: E731
        elif label == "CDG-bin":
            fn = lambda sg, st: binary_cdg(sg, st, **kw).subgraph  # noqa: E731
        elif label == "CDG-full":
            fn = lambda sg, st: full_cdg(sg, st, **kw).subgraph  # noqa: E731
        else:
            fn = lambda sg, st: two_slope_network(  # noqa: E731
                sg, st, cfg.slope_threshold, cfg.slopes, **kw).subgraph
        return solve_batched(g, t, batches, fn)

    def network(self, label, g, t):
        mode, params = _dimacs_mode(label)
        if mode is None:
            return None
        if mode == "category":
            params["categories"] = category_spec(self.labels, t.a, self.cfg.cat_fraction)
        if mode == "two-slope":
            params.update(threshold=self.cfg.slope_threshold, slopes=self.cfg.slopes)
        return construction_network(mode, g, t, **params)


def _l1(h, t):
    return int(np.abs(indegree_vector(h) - t.a).sum())


def _fold_job(cfg, ds, split, imported, cat_labels, dimacs_dir, sink):
    fold = split.fold
    with _stage("score", fold=fold):
        rel = score(cfg, split.train, imported)
        seen = SeenModel.from_ratings(split.train)
    labels = cat_labels
    if labels is None and "CAT" in cfg.modes:
        labels = popularity_bins(split.train.item_counts(), cfg.cat_bins)
    previous = {}
    for k in sorted(cfg.k_grid):
        with _stage("candidates", fold=fold, k=k):
            g = _candidates(cfg, rel, k)
            targets = make_targets(cfg, g)
        ctx = _Context(cfg, rel, seen, labels, fold, k)
        for tname, t in targets.items():
            found = {}
            for label in cfg.mode_labels():
                where = {"fold": fold, "k": k, "target": tname, "mode": label}
                with _stage("diversify", **where):
                    t0 = time.perf_counter()
                    h = ctx.run(label, g, t)
                    wall = (time.perf_counter() - t0) * 1e3
                with _stage("evaluate", **where):
                    report = evaluate(h, t, split.test_relevant)
                found[label] = _l1(h, t)
                sink.append(({"target": tname, "mode": label, "k": k, "fold": fold, **report.as_dict()},
                             {**where, "wall_ms": wall}))
                if dimacs_dir is not None:
                    with _stage("dimacs", **where):
                        net = ctx.network(label, g, t)
                        if net is not None:
                            name = f"{tname}_{label}_k{k}_f{fold}.min".replace("(", "-").replace(")", "")
                            with open(dimacs_dir / name, "w") as fh:
                                write_dimacs(net, fh, comment=f"{label} target={tname} k={k} fold={fold}")
            with _stage("check", fold=fold, k=k, target=tname):
                _check_run(cfg, found, previous.get(tname), t, g)
            previous[tname] = (found.get("GOL"), t.a, g.display)


def _candidates(cfg, rel, k):
    g = top_k_candidates(rel, k, cfg.c)
    if cfg.clamp_display:
        return clamp_display(g)
    bad = validate_feasible(g)
    if bad:
        raise InfeasibleError(f"{len(bad)} users have fewer than c={cfg.c} candidates at k={k} "
                              "(use clamp_display)", bad)
    return g


def _check_run(cfg, found, prev, t, g):
    gol = found.get("GOL")
    if gol is None:
        return
    if cfg.user_batches > 1:
        # per-batch optima say nothing about the merged discrepancy
        return
    worse = {m: d for m, d in found.items() if d < gol}
    if worse:
        raise OptimalityError(f"GOL discrepancy {gol} exceeds {worse}")
    if prev is not None and prev[0] is not None:
        same = np.array_equal(prev[1], t.a) and np.array_equal(prev[2], g.display)
        if same and gol > prev[0]:
            raise OptimalityError(f"GOL discrepancy rose from {prev[0]} to {gol} on a larger candidate set")


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None


def run_experiment(cfg, outdir=None, workers=None):
    """Run every selected fold; folds go through a bounded thread pool.

    On failure the completed rows are flushed to ``outdir`` (when given)
    with status ``aborted`` and the :class:`StageError` is re-raised.
    """
    with _stage("ingest"):
        rec = RunRecord(cfg.fingerprint(), cfg)
    dimacs_dir = None
    if outdir is not None and cfg.dimacs:
        dimacs_dir = Path(outdir) / "dimacs"
        dimacs_dir.mkdir(parents=True, exist_ok=True)
    sinks = []
    try:
        ds = load_dataset(cfg)
        with _stage("folds"):
            splits = make_folds(ds, cfg.folds, cfg.threshold, cfg.seed)
        imported = cat_labels = None
        if cfg.recommender == "imported":
            with _stage("score"):
                imported = _read_raw_scores(cfg.scores, ds)
        if cfg.categories:
            with _stage("ingest"):
                cat_labels = _read_categories(cfg.categories, ds)
        if cfg.run_folds:
            splits = splits[:cfg.run_folds]
        sinks = [[] for _ in splits]
        jobs = [(cfg, ds, s, imported, cat_labels, dimacs_dir, sink) for s, sink in zip(splits, sinks)]
        n = worker_count(workers)
        if n > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(min(n, len(jobs))) as pool:
                futures = [pool.submit(_fold_job, *j) for j in jobs]
                errors = [f.exception() for f in futures]
            failed = [e for e in errors if e is not None]
            if failed:
                raise failed[0]
        else:
            for j in jobs:
                _fold_job(*j)
    except (StageError, OptimalityError) as exc:
        rec.status, rec.error = "aborted", str(exc)
        _collect(rec, sinks)
        if outdir is not None:
            emit_outputs(rec, outdir)
        if isinstance(exc, OptimalityError):
            raise StageError("check", {}, exc) from exc
        raise
    _collect(rec, sinks)
    return rec


def _collect(rec, sinks):
    order = {m: i for i, m in enumerate(rec.config.mode_labels())}
    torder = {m: i for i, m in enumerate(rec.config.target_labels())}
    pairs = [p for sink in sinks for p in sink]
    pairs.sort(key=lambda p: (torder[p[0]["target"]], order[p[0]["mode"]], p[0]["k"], p[0]["fold"]))
    rec.rows = [p[0] for p in pairs]
    rec.timings = [p[1] for p in pairs]


def _cell(v):
    return repr(v) if isinstance(v, float) else str(v)


def metrics_csv(rows):
    """CSV text of the metric rows; floats keep their shortest round-trip repr."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in COLUMNS])
    return out.getvalue()


def _groups(rec):
    groups = {}
    for r in rec.rows:
        groups.setdefault((r["target"], r["mode"], r["k"]), []).append(r)
    return groups


def aggregates(rec):
    out = []
    for (tname, mode, k), rows in _groups(rec).items():
        metrics = MetricsReport.fields()
        out.append({
            "target": tname, "mode": mode, "k": k, "folds": [r["fold"] for r in rows],
            "mean": {m: float(np.mean([r[m] for r in rows])) for m in metrics},
            "per_fold": {m: [r[m] for r in rows] for m in metrics},
        })
    return out


def significance(rec, baseline="TOP", metrics=("discrepancy", "precision")):
    """Two-sided signed-rank p-values of each mode against ``baseline`` across folds."""
    groups = _groups(rec)
    out = []
    for (tname, mode, k), rows in groups.items():
        base = groups.get((tname, baseline, k))
        if mode == baseline or base is None or len(rows) < 2:
            continue
        entry = {"target": tname, "mode": mode, "k": k, "baseline": baseline}
        for m in metrics:
            stat, p = signed_rank([r[m] for r in rows], [r[m] for r in base])
            entry[m] = {"statistic": stat, "p_value": p}
        out.append(entry)
    return out


def tradeoff_csv(rec):
    """Mean discrepancy against mean precision per target, mode and k."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["target", "mode", "k", "discrepancy", "precision", "folds"])
    for agg in aggregates(rec):
        w.writerow([agg["target"], agg["mode"], agg["k"], repr(agg["mean"]["discrepancy"]),
                    repr(agg["mean"]["precision"]), len(agg["folds"])])
    return out.getvalue()


def summary_dict(rec):
    return {
        "fingerprint": rec.fingerprint,
        "status": rec.status,
        "error": rec.error,
        "config": asdict(rec.config),
        "columns": list(COLUMNS),
        "rows": [[r[c] for c in COLUMNS] for r in rec.rows],
        "aggregates": aggregates(rec),
        "significance": significance(rec),
        "timings": rec.timings,
    }


def rows_from_summary(data):
    cols = data["columns"]
    return [dict(zip(cols, row)) for row in data["rows"]]


def emit_outputs(rec, outdir):
    """Write metrics.csv, summary.json and tradeoff.csv under ``outdir``."""
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "metrics.csv": metrics_csv(rec.rows),
            "summary.json": json.dumps(summary_dict(rec), indent=1) + "\n",
            "tradeoff.csv": tradeoff_csv(rec),
        }
        for name, text in files.items():
            (out / name).write_text(text)
    except OSError as exc:
        raise StageError("emit", {"outdir": str(out)}, exc) from exc
    return sorted(out / name for name in files)

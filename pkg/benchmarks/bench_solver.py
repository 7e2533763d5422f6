"""Time the min-cost flow kernels: numba vs pure Python, per solver method.

    python benchmarks/bench_solver.py --users 200 400 --items 300 --k 20
    python benchmarks/bench_solver.py --json results.json

Each instance is a random top-k candidate graph with popularity-skewed
items, a uniform target and c display slots per user. The first numba
call of each method is timed separately as compile time. Python runs are
skipped above ``--python-max-edges``.
"""

import argparse
import json
import platform
import statistics
from timeit import default_timer as timer

import numpy as np

from divflow import _jit
from divflow.constructions import build_discrepancy_network, two_pass
from divflow.graph import CandidateGraph
from divflow.mcf import solve_min_cost_flow
from divflow.targets import uniform_target

METHODS = ("cost-scaling", "capacity-scaling", "ssp")


def candidate_graph(n_users, n_items, k, c, seed=0):
    rng = np.random.default_rng(seed)
    pop = 1.0 / np.arange(1, n_items + 1) ** 0.8
    pop /= pop.sum()
    users, items = [], []
    for u in range(n_users):
        users.extend([u] * k)
        items.extend(rng.choice(n_items, size=k, replace=False, p=pop).tolist())
    weights = rng.random(len(users))
    return CandidateGraph(n_users, n_items, users, items, weights, c)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = timer()
        out = fn()
        times.append(timer() - t0)
    return min(times), statistics.median(times), out


def run(args):
    backends = ["numba"] if _jit.USE_NUMBA else []
    backends.append("python")
    rows = []
    compiled = set()
    for n_users in args.users:
        g = candidate_graph(n_users, args.items, args.k, args.c, args.seed)
        t = uniform_target(g)
        net = build_discrepancy_network(g, t)
        costs = {}
        for backend in backends:
            if backend == "python" and g.n_edges > args.python_max_edges:
                continue
            for method in args.methods:
                compile_s = None
                if backend == "numba" and method not in compiled:
                    t0 = timer()
                    solve_min_cost_flow(net, method=method, backend=backend, check=False)
                    compile_s = timer() - t0
                    compiled.add(method)
                best, median, sol = best_of(
                    lambda: solve_min_cost_flow(net, method=method, backend=backend, check=False),
                    args.repeat)
                costs.setdefault(method, set()).add(sol.cost)
                rows.append({"users": n_users, "items": args.items, "edges": g.n_edges, "nodes": net.n_nodes,
                             "arcs": net.n_arcs, "backend": backend, "method": method, "best_s": best,
                             "median_s": median, "compile_s": compile_s, "cost": sol.cost})
        if len({c for s in costs.values() for c in s}) > 1:
            raise SystemExit(f"methods disagree on the optimum for {n_users} users: {costs}")
        if args.two_pass:
            best, median, res = best_of(lambda: two_pass(g, t), args.repeat)
            rows.append({"users": n_users, "items": args.items, "edges": g.n_edges, "nodes": net.n_nodes,
                         "arcs": net.n_arcs, "backend": _jit.backend_name(), "method": "two-pass(auto)",
                         "best_s": best, "median_s": median, "compile_s": None, "cost": res.discrepancy})
    return rows


def print_table(rows):
    print(f"{'users':>6} {'edges':>8} {'backend':>7} {'method':>16} {'best s':>9} {'median s':>9} {'compile s':>9}")
    for r in rows:
        comp = "" if r["compile_s"] is None else f"{r['compile_s']:.2f}"
        print(f"{r['users']:>6} {r['edges']:>8} {r['backend']:>7} {r['method']:>16} "
              f"{r['best_s']:>9.4f} {r['median_s']:>9.4f} {comp:>9}")
    speed = {}
    for r in rows:
        speed.setdefault((r["users"], r["method"]), {})[r["backend"]] = r["best_s"]
    pairs = [(k, v["python"] / v["numba"]) for k, v in speed.items() if {"numba", "python"} <= v.keys()]
    for (users, method), ratio in pairs:
        print(f"speedup {method} @ {users} users: {ratio:.1f}x")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--users", type=int, nargs="+", default=[100, 300, 1000])
    p.add_argument("--items", type=int, default=400)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--c", type=int, default=10)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--python-max-edges", type=int, default=10_000)
    p.add_argument("--two-pass", action="store_true", help="also time the full two-pass solve")
    p.add_argument("--json", help="write raw rows here")
    args = p.parse_args(argv)
    rows = run(args)
    print(f"# {platform.python_version()} numpy {np.__version__} default backend {_jit.backend_name()}")
    print_table(rows)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()

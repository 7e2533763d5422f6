"""Integral minimum-cost flow.

Lower bounds are removed by shifting supplies. The default algorithm finds
a feasible flow by blocking flows and then improves it by push-relabel
cost scaling; a primal-dual successive shortest path solver (optionally
capacity scaled) is kept for cross-checking. Both end with exact node
potentials from a label-correcting pass, so every optimal answer carries a
reduced-cost certificate. All arithmetic is on 64-bit integers.
"""

import numpy as np

from .. import _jit
from . import kernels
from .network import FlowSolution


class CertificateError(AssertionError):
    """A returned flow failed its optimality or feasibility check."""


def _residual(net):
    m = net.n_arcs
    n = net.n_nodes
    excess = net.supply.copy()
    if m:
        np.subtract.at(excess, net.tail, net.lower)
        np.add.at(excess, net.head, net.lower)
    head = np.empty(2 * m, dtype=np.int64)
    head[0::2] = net.head
    head[1::2] = net.tail
    tail = np.empty(2 * m, dtype=np.int64)
    tail[0::2] = net.tail
    tail[1::2] = net.head
    rescap = np.zeros(2 * m, dtype=np.int64)
    rescap[0::2] = net.capacity - net.lower
    cost = np.empty(2 * m, dtype=np.int64)
    cost[0::2] = net.cost
    cost[1::2] = -net.cost
    adj = np.argsort(tail, kind="stable").astype(np.int64)
    start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(tail, minlength=n), out=start[1:])
    return start, adj, head, rescap, cost, excess


def _initial_delta(net, excess):
    biggest = 0
    if excess.size:
        biggest = int(excess.max())
    if net.n_arcs:
        biggest = max(biggest, int((net.capacity - net.lower).max()))
    if biggest <= 1:
        return 1
    return 1 << (biggest.bit_length() - 1)


METHODS = ("auto", "cost-scaling", "capacity-scaling", "ssp")
_ALPHA = 16


def _kernels(backend):
    if backend is None:
        backend = _jit.backend_name()
    if backend == "numba":
        if not _jit.USE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return backend, lambda f: f
    if backend == "python":
        return backend, _jit.pure
    raise ValueError(f"unknown backend {backend!r}")


def _fits_int64(net):
    """Whether scaled costs and the prices they induce stay inside int64."""
    n = net.n_nodes + 1
    big = int(np.abs(net.cost).max()) if net.n_arcs else 0
    return big * n * n * 4 < (1 << 62)


def solve_min_cost_flow(net, method="auto", backend=None, check=True):
    """Minimum-cost integral flow of ``net``.

    Parameters
    ----------
    net : FlowNetwork
        Must be balanced (supplies sum to zero) with finite capacities.
    method : {"auto", "cost-scaling", "capacity-scaling", "ssp"}
        ``cost-scaling`` finds a feasible flow with Dinic blocking flows and
        then runs push-relabel epsilon-scaling; it is robust to wide cost
        ranges. ``capacity-scaling`` is primal-dual successive shortest
        paths inside a capacity-scaling loop and ``ssp`` the same without
        the scaling. ``auto`` picks cost scaling unless the scaled costs
        could overflow 64-bit integers.
    backend : {"numba", "python", None}
        Kernel implementation; None follows ``DIVFLOW_DISABLE_NUMBA``.
    check : bool
        Verify conservation, bounds, integrality and the reduced-cost
        certificate before returning.

    Returns
    -------
    FlowSolution
        ``status`` is ``"optimal"`` or ``"infeasible"``; an infeasible
        solution carries the partial flow reached.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if not net.is_balanced():
        raise ValueError(f"supplies sum to {int(net.supply.sum())}, expected 0")
    backend, pick = _kernels(backend)
    if method == "auto":
        method = "cost-scaling" if _fits_int64(net) else "capacity-scaling"
    elif method == "cost-scaling" and not _fits_int64(net):
        raise ValueError("arc costs too large for cost scaling; use capacity-scaling")

    n = max(net.n_nodes, 1)
    start, adj, head, rescap, cost, excess = _residual(net)
    n_res = head.shape[0]
    as_list = backend == "python"  # list indexing beats numpy scalar access
    conv = (lambda x: x.tolist()) if as_list else (lambda x: x)
    zeros = (lambda k: [0] * k) if as_list else (lambda k: np.zeros(k, np.int64))
    lc = pick(kernels.label_correcting)
    g = [conv(start), conv(adj), conv(head), conv(rescap)]
    exc = conv(excess)

    if method == "cost-scaling":
        augmentations = pick(kernels.max_flow)(
            n, *g, exc, zeros(n), zeros(n), zeros(n), zeros(n + 1), zeros(n + 1))
        feasible = not any(exc) if as_list else not exc.any()
        pot = np.zeros(n, dtype=np.int64)
        big = int(np.abs(net.cost).max()) if net.n_arcs else 0
        if feasible and big:
            pot = conv(pot)
            pick(kernels.cost_scaling)(n, *g, conv(cost * (n + 1)), pot, big * (n + 1), _ALPHA,
                                       exc, zeros(n), zeros(n), zeros(n))
            pot = np.floor_divide(np.asarray(pot, dtype=np.int64), n + 1)
            pot = conv(pot)
            if not lc(n, *g, conv(cost), pot, zeros(n), zeros(n), zeros(n), True):
                raise CertificateError("negative residual cycle after cost scaling")
    else:
        delta = _initial_delta(net, excess) if method == "capacity-scaling" else 1
        pot = zeros(n)
        lc(n, *g, conv(cost), pot, zeros(n), zeros(n), zeros(n), False)
        augmentations = pick(kernels.scaling_ssp)(
            n, *g, conv(cost), exc, pot, delta, zeros(n), zeros(n), zeros(n), zeros(n),
            zeros(n + 1), zeros(n + 1), zeros(n), zeros(n + n_res + 1), zeros(n + n_res + 1))

    rescap = np.asarray(g[3], dtype=np.int64)
    excess = np.asarray(exc, dtype=np.int64)
    pot = np.asarray(pot, dtype=np.int64)[: net.n_nodes]
    flow = net.lower + rescap[1::2]
    status = "optimal" if not excess.any() else "infeasible"
    total = int(np.dot(flow, net.cost)) if flow.size else 0
    sol = FlowSolution(flow=flow, cost=total, status=status, potentials=pot,
                       augmentations=int(augmentations))
    if check:
        problems = verify_solution(net, sol)
        if problems:
            raise CertificateError("; ".join(problems))
    return sol


def verify_solution(net, sol):
    """List violated invariants of ``sol`` (empty when everything holds).

    For an infeasible solution only bounds and integrality are checked.
    """
    problems = []
    flow = np.asarray(sol.flow)
    if not np.issubdtype(flow.dtype, np.integer):
        problems.append("flow is not integral")
        return problems
    if (flow < net.lower).any() or (flow > net.capacity).any():
        problems.append("flow violates arc bounds")
    if not sol.optimal:
        return problems
    balance = net.supply.copy()
    np.subtract.at(balance, net.tail, flow)
    np.add.at(balance, net.head, flow)
    if balance.any():
        problems.append(f"conservation fails at {int(np.count_nonzero(balance))} nodes")
    if int(np.dot(flow, net.cost)) != sol.cost:
        problems.append("reported cost differs from sum of flow * cost")
    pot = sol.potentials
    if pot is not None and net.n_arcs:
        reduced = net.cost + pot[net.tail] - pot[net.head]
        forward = flow < net.capacity
        backward = flow > net.lower
        bad = (forward & (reduced < 0)) | (backward & (reduced > 0))
        if bad.any():
            problems.append(f"reduced-cost certificate fails on {int(bad.sum())} arcs")
    return problems

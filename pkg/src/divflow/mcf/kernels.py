"""Inner loops of the min-cost flow solver.

The residual graph is stored in paired form: residual arc ``2k`` is the
forward copy of network arc ``k`` and ``2k + 1`` its reverse, so the partner
of any residual arc ``a`` is ``a ^ 1`` and its tail is ``head[a ^ 1]``.
Outgoing residual arcs of node ``v`` are ``adj[start[v]:start[v + 1]]``.

Every kernel works in place and only uses indexing, so the same source runs
under numba or as plain Python on lists.
"""

from .._jit import njit

INF = 1 << 62


@njit(cache=True, nogil=True)
def label_correcting(n, start, adj, head, rescap, cost, pot, queue, inq, count, warm=False):
    """Shortest-path labels from a virtual root tied to every node at cost 0.

    Fills ``pot`` so that ``cost[a] + pot[tail] - pot[head] >= 0`` on every
    residual arc with capacity. With ``warm`` the current ``pot`` values act
    as the root arc lengths, which converges fast from near-feasible labels.
    Returns False (leaving ``pot`` zeroed) when a negative cycle blocks
    convergence.
    """
    for v in range(n):
        if not warm:
            pot[v] = 0
        queue[v] = v
        inq[v] = 1
        count[v] = 0
    front = 0
    size = n
    while size > 0:
        u = queue[front]
        front += 1
        if front == n:
            front = 0
        size -= 1
        inq[u] = 0
        pu = pot[u]
        for p in range(start[u], start[u + 1]):
            a = adj[p]
            if rescap[a] > 0:
                v = head[a]
                nd = pu + cost[a]
                if nd < pot[v]:
                    pot[v] = nd
                    if inq[v] == 0:
                        count[v] += 1
                        if count[v] > n:
                            for w in range(n):
                                pot[w] = 0
                            return False
                        back = front + size
                        if back >= n:
                            back -= n
                        queue[back] = v
                        size += 1
                        inq[v] = 1
    return True


@njit(cache=True, nogil=True)
def _heap_push(hkey, hnode, hs, key, node):
    pos = hs
    while pos > 0:
        par = (pos - 1) >> 1
        if hkey[par] > key or (hkey[par] == key and hnode[par] > node):
            hkey[pos] = hkey[par]
            hnode[pos] = hnode[par]
            pos = par
        else:
            break
    hkey[pos] = key
    hnode[pos] = node
    return hs + 1


@njit(cache=True, nogil=True)
def _heap_pop(hkey, hnode, hs):
    """Drop the root; the caller reads it first. Returns the new size."""
    hs -= 1
    if hs > 0:
        lk = hkey[hs]
        ln = hnode[hs]
        pos = 0
        while True:
            c = 2 * pos + 1
            if c >= hs:
                break
            c2 = c + 1
            if c2 < hs and (hkey[c2] < hkey[c] or (hkey[c2] == hkey[c] and hnode[c2] < hnode[c])):
                c = c2
            if hkey[c] < lk or (hkey[c] == lk and hnode[c] < ln):
                hkey[pos] = hkey[c]
                hnode[pos] = hnode[c]
                pos = c
            else:
                break
        hkey[pos] = lk
        hnode[pos] = ln
    return hs


@njit(cache=True, nogil=True)
def _augment_path(head, rescap, excess, stack, parc, depth, delta):
    """Push along the arcs ``parc[1..depth]``; returns the amount sent."""
    s = stack[0]
    t = stack[depth]
    f = excess[s]
    if -excess[t] < f:
        f = -excess[t]
    for j in range(1, depth + 1):
        if rescap[parc[j]] < f:
            f = rescap[parc[j]]
    for j in range(1, depth + 1):
        a = parc[j]
        rescap[a] -= f
        rescap[a ^ 1] += f
    excess[s] -= f
    excess[t] += f
    return f


@njit(cache=True, nogil=True)
def scaling_ssp(n, start, adj, head, rescap, cost, excess, pot, delta,
                dist, pred, mark, cur, stack, parc, touched, hkey, hnode):
    """Capacity-scaling primal-dual successive shortest paths.

    Each phase first saturates residual arcs with capacity >= delta and
    negative reduced cost, so arbitrary starting potentials are accepted.
    A round then runs one Dijkstra on reduced costs from all nodes with
    excess >= delta at once, stopping at the first node with deficit
    >= delta, and advances the potentials of settled nodes. It augments
    along the Dijkstra path, so every round makes progress, then pushes a
    blocking flow by depth-first search over arcs whose reduced cost is
    now zero.

    Returns the number of augmentations. Remaining nonzero ``excess`` after
    the call means the instance is infeasible.
    """
    inf = INF
    n_res = len(head)
    for v in range(n):
        dist[v] = inf
        pred[v] = -1
        mark[v] = 0
    augmentations = 0
    while delta >= 1:
        for a in range(n_res):
            if rescap[a] >= delta:
                t = head[a ^ 1]
                h = head[a]
                if cost[a] + pot[t] - pot[h] < 0:
                    f = rescap[a]
                    rescap[a] = 0
                    rescap[a ^ 1] += f
                    excess[t] -= f
                    excess[h] += f
        while True:
            # multi-source Dijkstra; mark 1 = settled
            hs = 0
            nt = 0
            for v in range(n):
                if excess[v] >= delta:
                    dist[v] = 0
                    touched[nt] = v
                    nt += 1
                    hs = _heap_push(hkey, hnode, hs, 0, v)
            if nt == 0:
                break
            target = -1
            while hs > 0:
                d = hkey[0]
                u = hnode[0]
                hs = _heap_pop(hkey, hnode, hs)
                if mark[u] == 1 or d > dist[u]:
                    continue
                mark[u] = 1
                if excess[u] <= -delta:
                    target = u
                    break
                base = d + pot[u]
                for p in range(start[u], start[u + 1]):
                    a = adj[p]
                    if rescap[a] >= delta:
                        v = head[a]
                        if mark[v] == 1:
                            continue
                        nd = base + cost[a] - pot[v]
                        if nd < dist[v]:
                            if dist[v] == inf:
                                touched[nt] = v
                                nt += 1
                            dist[v] = nd
                            pred[v] = a
                            hs = _heap_push(hkey, hnode, hs, nd, v)
            if target < 0:
                for j in range(nt):
                    v = touched[j]
                    dist[v] = inf
                    pred[v] = -1
                    mark[v] = 0
                break
            far = dist[target]
            for j in range(nt):
                v = touched[j]
                if mark[v] == 1 and dist[v] < far:
                    pot[v] -= far - dist[v]
            # Dijkstra path first: guarantees progress
            depth = 0
            v = target
            while pred[v] >= 0:
                depth += 1
                v = head[pred[v] ^ 1]
            j = depth
            v = target
            while j > 0:
                stack[j] = v
                parc[j] = pred[v]
                v = head[pred[v] ^ 1]
                j -= 1
            stack[0] = v
            _augment_path(head, rescap, excess, stack, parc, depth, delta)
            augmentations += 1
            for j in range(nt):
                v = touched[j]
                dist[v] = inf
                pred[v] = -1
                mark[v] = 0
            # blocking flow on zero reduced-cost arcs; mark 2 = on path, 3 = dead
            for v in range(n):
                cur[v] = start[v]
            for s in range(n):
                if excess[s] < delta or mark[s] == 3:
                    continue
                depth = 0
                stack[0] = s
                mark[s] = 2
                while depth >= 0:
                    u = stack[depth]
                    if depth > 0 and excess[u] <= -delta:
                        _augment_path(head, rescap, excess, stack, parc, depth, delta)
                        augmentations += 1
                        for j in range(1, depth + 1):
                            mark[stack[j]] = 0
                        depth = 0
                        if excess[s] < delta:
                            break
                        continue
                    pu = pot[u]
                    moved = False
                    while cur[u] < start[u + 1]:
                        a = adj[cur[u]]
                        if rescap[a] >= delta:
                            v = head[a]
                            if mark[v] == 0 and cost[a] + pu - pot[v] == 0:
                                depth += 1
                                stack[depth] = v
                                parc[depth] = a
                                mark[v] = 2
                                moved = True
                                break
                        cur[u] += 1
                    if not moved:
                        mark[u] = 3
                        depth -= 1
                        if depth >= 0:
                            cur[stack[depth]] += 1
                if mark[s] == 2:
                    mark[s] = 0
            for v in range(n):
                mark[v] = 0
        delta >>= 1
    return augmentations


@njit(cache=True, nogil=True)
def max_flow(n, start, adj, head, rescap, excess, level, cur, queue, stack, parc):
    """Move excess to deficits with Dinic blocking flows.

    Sources are all nodes with positive excess, sinks all nodes with
    negative excess. Returns the number of augmenting paths; the instance
    is infeasible iff some excess remains afterwards.
    """
    paths = 0
    while True:
        qt = 0
        for v in range(n):
            level[v] = -1
            if excess[v] > 0:
                level[v] = 0
                queue[qt] = v
                qt += 1
        if qt == 0:
            break
        reached = False
        qh = 0
        while qh < qt:
            u = queue[qh]
            qh += 1
            if excess[u] < 0:
                reached = True
                continue
            for p in range(start[u], start[u + 1]):
                a = adj[p]
                if rescap[a] > 0:
                    v = head[a]
                    if level[v] < 0:
                        level[v] = level[u] + 1
                        queue[qt] = v
                        qt += 1
        if not reached:
            break
        for v in range(n):
            cur[v] = start[v]
        for s in range(n):
            if excess[s] <= 0 or level[s] != 0:
                continue
            depth = 0
            stack[0] = s
            while depth >= 0 and excess[s] > 0:
                u = stack[depth]
                if depth > 0 and excess[u] < 0:
                    f = excess[s]
                    if -excess[u] < f:
                        f = -excess[u]
                    for j in range(1, depth + 1):
                        if rescap[parc[j]] < f:
                            f = rescap[parc[j]]
                    for j in range(1, depth + 1):
                        a = parc[j]
                        rescap[a] -= f
                        rescap[a ^ 1] += f
                    excess[s] -= f
                    excess[u] += f
                    paths += 1
                    depth = 0
                    continue
                moved = False
                lu = level[u]
                while cur[u] < start[u + 1]:
                    a = adj[cur[u]]
                    if rescap[a] > 0 and level[head[a]] == lu + 1:
                        depth += 1
                        stack[depth] = head[a]
                        parc[depth] = a
                        moved = True
                        break
                    cur[u] += 1
                if not moved:
                    level[u] = -2
                    depth -= 1
                    if depth >= 0:
                        cur[stack[depth]] += 1
    return paths


@njit(cache=True, nogil=True)
def cost_scaling(n, start, adj, head, rescap, cost, pot, eps, alpha, excess, cur, queue, inq):
    """Push-relabel epsilon-scaling on a feasible flow.

    ``cost`` must already be multiplied by ``n + 1`` so that the final
    1-optimal flow is optimal for the unscaled costs. ``excess`` must be
    all zero on entry (the flow is feasible). Each refine phase divides
    ``eps`` by ``alpha``, saturates arcs of negative reduced cost and
    discharges active nodes in FIFO order. Returns the relabel count.
    """
    n_res = len(head)
    relabels = 0
    while eps > 1:
        eps = eps // alpha
        if eps < 1:
            eps = 1
        for a in range(n_res):
            if rescap[a] > 0:
                t = head[a ^ 1]
                h = head[a]
                if cost[a] + pot[t] - pot[h] < 0:
                    f = rescap[a]
                    rescap[a] = 0
                    rescap[a ^ 1] += f
                    excess[t] -= f
                    excess[h] += f
        front = 0
        size = 0
        for v in range(n):
            cur[v] = start[v]
            inq[v] = 0
            if excess[v] > 0:
                queue[size] = v
                size += 1
                inq[v] = 1
        while size > 0:
            u = queue[front]
            front += 1
            if front == n:
                front = 0
            size -= 1
            inq[u] = 0
            while excess[u] > 0:
                if cur[u] == start[u + 1]:
                    best = -INF
                    for p in range(start[u], start[u + 1]):
                        a = adj[p]
                        if rescap[a] > 0:
                            cand = pot[head[a]] - cost[a]
                            if cand > best:
                                best = cand
                    pot[u] = best - eps
                    cur[u] = start[u]
                    relabels += 1
                    continue
                a = adj[cur[u]]
                if rescap[a] > 0:
                    v = head[a]
                    if cost[a] + pot[u] - pot[v] < 0:
                        f = excess[u]
                        if rescap[a] < f:
                            f = rescap[a]
                        rescap[a] -= f
                        rescap[a ^ 1] += f
                        excess[u] -= f
                        excess[v] += f
                        if excess[v] > 0 and inq[v] == 0:
                            back = front + size
                            if back >= n:
                                back -= n
                            queue[back] = v
                            size += 1
                            inq[v] = 1
                        if rescap[a] > 0:
                            continue
                cur[u] += 1
    return relabels

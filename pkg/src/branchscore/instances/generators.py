"""Random generators for the four standard benchmark families.

All generators are pure functions of their arguments: the same sizes and
seed give the same instance, coefficient for coefficient.
"""

from __future__ import annotations

import networkx as nx
import numpy as np
import scipy.sparse as sp

from ..milp.instance import MilpInstance


def _binary(c, A, b, name) -> MilpInstance:
    n = len(c)
    return MilpInstance(
        np.asarray(c, dtype=float), sp.csr_matrix(A), np.asarray(b, dtype=float),
        np.zeros(n), np.ones(n), np.ones(n, dtype=bool), name=name,
    )


def gen_set_cover(rows: int, cols: int, density: float = 0.05, seed: int = 0) -> MilpInstance:
    """Minimum-cost set cover with Balas-style random incidence.

    Every row draws at least two columns, the remaining nonzeros are spread
    uniformly over rows, and any column left uncovered is added to a random
    row.  Costs are integers in [1, 100].  Cover rows sum(x) >= 1 are stored
    as -sum(x) <= -1.
    """
    if rows < 1 or cols < 2:
        raise ValueError("set cover needs rows >= 1 and cols >= 2")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if density * cols < 2:
        raise ValueError(f"density {density} too low: need density * cols >= 2")
    rng = np.random.default_rng(seed)
    nnz = max(int(round(rows * cols * density)), 2 * rows)
    sizes = np.full(rows, 2)
    extra = rng.multinomial(nnz - 2 * rows, np.full(rows, 1.0 / rows))
    sizes = np.minimum(sizes + extra, cols)
    members = [set(rng.choice(cols, size=s, replace=False).tolist()) for s in sizes]
    covered = np.zeros(cols, dtype=bool)
    for row in members:
        covered[list(row)] = True
    for j in np.flatnonzero(~covered):
        members[int(rng.integers(rows))].add(int(j))
    r_idx = np.concatenate([np.full(len(row), i) for i, row in enumerate(members)])
    c_idx = np.concatenate([sorted(row) for row in members])
    A = sp.csr_matrix((-np.ones(r_idx.size), (r_idx, c_idx)), shape=(rows, cols))
    c = rng.integers(1, 101, size=cols).astype(float)
    return _binary(c, A, -np.ones(rows), f"setcover_{rows}x{cols}_s{seed}")


def gen_comb_auction(items: int, bids: int, seed: int = 0, mean_bundle: float = 3.0) -> MilpInstance:
    """Winner determination for a combinatorial auction.

    Simplified arbitrary-relationships scheme: items carry common values in
    [1, 100], bundle sizes are 1 + geometric with the given mean, and each bid
    prices its bundle at the summed value times a noise factor in [0.8, 1.4]
    (plus a small complementarity bonus per extra item).  Bid ``i < items``
    always contains item ``i`` so no item row is empty.  Maximizing revenue is
    stored as minimizing its negation, one row sum(x) <= 1 per item.
    """
    if items < 1 or bids < items:
        raise ValueError("comb auction needs items >= 1 and bids >= items")
    rng = np.random.default_rng(seed)
    values = rng.uniform(1.0, 100.0, size=items)
    p = 1.0 / max(mean_bundle, 1.0)
    r_idx, c_idx, prices = [], [], np.empty(bids)
    for b in range(bids):
        size = min(int(rng.geometric(p)), items)
        first = b if b < items else int(rng.integers(items))
        others = rng.choice(np.delete(np.arange(items), first), size=size - 1, replace=False)
        bundle = np.sort(np.concatenate([[first], others]).astype(int))
        prices[b] = values[bundle].sum() * rng.uniform(0.8, 1.4) + 5.0 * (size - 1)
        r_idx.extend(bundle.tolist())
        c_idx.extend([b] * size)
    A = sp.csr_matrix((np.ones(len(r_idx)), (r_idx, c_idx)), shape=(items, bids))
    return _binary(-np.round(prices, 2), A, np.ones(items), f"cauctions_{items}x{bids}_s{seed}")


def gen_facility_location(facilities: int, customers: int, seed: int = 0, ratio: float = 5.0) -> MilpInstance:
    """Capacitated facility location, Cornuejols-style data on the unit square.

    Variables: y_i (open, binary) for each facility, then x_ij (share of
    customer j served by i, continuous in [0, 1]) in facility-major order.
    Rows: sum_i x_ij = 1 as two inequalities, sum_j d_j x_ij - u_i y_i <= 0,
    and the aggregate row sum_i u_i y_i >= sum_j d_j.
    """
    if facilities < 1 or customers < 1:
        raise ValueError("facility location needs positive sizes")
    rng = np.random.default_rng(seed)
    cust = rng.random((customers, 2))
    fac = rng.random((facilities, 2))
    demand = rng.integers(5, 36, size=customers).astype(float)
    capacity = rng.integers(10, 161, size=facilities).astype(float)
    fixed = np.round(rng.integers(100, 111, size=facilities) * np.sqrt(capacity) + rng.integers(0, 91, size=facilities))
    capacity = np.round(capacity * ratio * demand.sum() / capacity.sum())
    # guarantee aggregate capacity covers demand even for a single facility
    if capacity.sum() < demand.sum():
        capacity *= demand.sum() / capacity.sum()
    capacity = np.maximum(capacity, 1.0)
    dist = np.sqrt(((fac[:, None, :] - cust[None, :, :]) ** 2).sum(axis=2))
    transport = np.round(dist * 10.0 * demand[None, :], 6)

    F, C = facilities, customers
    n = F + F * C
    xcol = lambda i, j: F + i * C + j  # noqa: E731
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for j in range(C):
        for sign in (1.0, -1.0):
            for i in range(F):
                rows.append(r); cols.append(xcol(i, j)); vals.append(sign)
            rhs.append(sign)
            r += 1
    for i in range(F):
        for j in range(C):
            rows.append(r); cols.append(xcol(i, j)); vals.append(demand[j])
        rows.append(r); cols.append(i); vals.append(-capacity[i])
        rhs.append(0.0)
        r += 1
    for i in range(F):
        rows.append(r); cols.append(i); vals.append(-capacity[i])
    rhs.append(-demand.sum())
    r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, n))
    c = np.concatenate([fixed, transport.ravel()])
    integrality = np.zeros(n, dtype=bool)
    integrality[:F] = True
    return MilpInstance(c, A, np.array(rhs), np.zeros(n), np.ones(n), integrality,
                        name=f"facilities_{F}x{C}_s{seed}")


def greedy_clique_cover(graph: nx.Graph) -> list[list[int]]:
    """Cover every edge by a clique, greedily growing from the node with most uncovered edges.

    Ties break on node index, so the cover is deterministic.
    """
    remaining = {tuple(sorted(e)) for e in graph.edges()}
    deg = dict(graph.degree())
    cliques = []
    while remaining:
        live = {}
        for u, v in remaining:
            live[u] = live.get(u, 0) + 1
            live[v] = live.get(v, 0) + 1
        start = min(live, key=lambda v: (-live[v], v))
        clique = [start]
        # neighbours across an uncovered edge first, so every clique covers something new
        order = sorted(graph.neighbors(start), key=lambda v: (tuple(sorted((start, v))) not in remaining, -deg[v], v))
        for u in order:
            if all(graph.has_edge(u, w) for w in clique):
                clique.append(u)
        clique.sort()
        cliques.append(clique)
        for a in range(len(clique)):
            for b in range(a + 1, len(clique)):
                remaining.discard((clique[a], clique[b]))
    return cliques


def independent_set_from_graph(graph: nx.Graph, name: str = "indset") -> MilpInstance:
    """Maximum independent set with clique inequalities from ``greedy_clique_cover``."""
    n = graph.number_of_nodes()
    cliques = greedy_clique_cover(graph)
    r_idx = np.concatenate([np.full(len(q), i) for i, q in enumerate(cliques)])
    c_idx = np.concatenate(cliques)
    A = sp.csr_matrix((np.ones(r_idx.size), (r_idx, c_idx)), shape=(len(cliques), n))
    return _binary(-np.ones(n), A, np.ones(len(cliques)), name)


def gen_independent_set(nodes: int, affinity: int = 4, seed: int = 0) -> MilpInstance:
    """Maximum independent set on a Barabasi-Albert graph (attachment = affinity)."""
    if not nodes > affinity >= 1:
        raise ValueError("independent set needs nodes > affinity >= 1")
    graph = nx.barabasi_albert_graph(nodes, affinity, seed=seed)
    return independent_set_from_graph(graph, f"indset_{nodes}_a{affinity}_s{seed}")


GENERATORS = {
    "set_cover": gen_set_cover,
    "comb_auction": gen_comb_auction,
    "facility_location": gen_facility_location,
    "independent_set": gen_independent_set,
}

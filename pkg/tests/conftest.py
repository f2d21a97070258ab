import numpy as np

from netdual import (
    DigraphSchedule,
    ReversiblePair,
    StaticTopology,
    UndirectedGraph,
)


def random_digraph_schedule(n: int, period: int, rng, edge_prob: float = 0.5):
    """Random digraphs with all self-loops; no connectivity guarantee."""
    graphs = []
    for _ in range(period):
        edges = {(i, i) for i in range(n)}
        for i in range(n):
            for j in range(n):
                if i != j and rng.random() < edge_prob:
                    edges.add((i, j))
        graphs.append(frozenset(edges))
    return DigraphSchedule(n=n, graphs=tuple(graphs), period=period)


def metropolis_topology(n: int, rng, extra_edges: int = 2) -> StaticTopology:
    """Random connected graph with Metropolis weights: reversible with
    respect to the uniform distribution by construction."""
    edges = {(i, i + 1) for i in range(n - 1)}
    for _ in range(extra_edges):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges.add((min(i, j), max(i, j)))
    g = UndirectedGraph(n=n, edges=frozenset(edges))
    deg = [len(g.neighbors(i)) for i in range(n)]
    M = np.zeros((n, n))
    for a in range(n):
        for b in g.neighbors(a):
            M[a, b] = 1.0 / (max(deg[a], deg[b]) + 1.0)
        M[a, a] = 1.0 - M[a].sum()
    return StaticTopology(graph=g, pair=ReversiblePair(r=np.full(n, 1.0 / n), M=M))


def singleton_topology() -> StaticTopology:
    return StaticTopology(
        graph=UndirectedGraph(n=1, edges=frozenset()),
        pair=ReversiblePair(r=np.array([1.0]), M=np.array([[1.0]])),
    )

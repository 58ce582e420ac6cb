"""State-dependent coupling graphs and the locality sets derived from them.

Subsystems are indexed ``0..n-1`` in code.  An edge ``(j, i)`` means that the
dynamics of subsystem ``i`` read the state of subsystem ``j`` at the query
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import OrderingError

__all__ = [
    "CouplingGraph",
    "ancestors",
    "build_graph",
    "format_edges",
    "info_set",
    "k_hop_in_neighbors",
    "within_hops",
]


@dataclass(frozen=True)
class CouplingGraph:
    n: int
    edges: frozenset = frozenset()
    order: tuple = None
    _parents: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in edges:
            if not (0 <= j < self.n and 0 <= i < self.n) or j == i:
                raise ValueError(f"invalid edge {(j, i)} for {self.n} subsystems")
        object.__setattr__(self, "edges", edges)
        if self.order is None:
            object.__setattr__(self, "order", tuple(range(self.n)))
        elif sorted(self.order) != list(range(self.n)):
            raise ValueError("order must be a permutation of the subsystem indices")
        parents = {i: [] for i in range(self.n)}
        for j, i in sorted(edges):
            parents[i].append(j)
        object.__setattr__(
            self, "_parents", {i: tuple(p) for i, p in parents.items()}
        )

    def parents(self, i):
        """Direct in-neighbours of ``i`` in ascending index order."""
        return self._parents[i]

    def sorted_edges(self):
        return sorted(self.edges)

    def position(self, i):
        return self.order.index(i)

    def check_acyclic_order(self):
        """Raise if an edge runs against the fixed ordering."""
        rank = {v: r for r, v in enumerate(self.order)}
        for j, i in self.sorted_edges():
            if rank[j] >= rank[i]:
                raise OrderingError(
                    f"edge {j}->{i} runs against the fixed subsystem ordering"
                )

    def restricted(self, nodes):
        """Induced subgraph on ``nodes``, keeping original indices."""
        nodes = set(nodes)
        return CouplingGraph(
            self.n,
            frozenset(e for e in self.edges if e[0] in nodes and e[1] in nodes),
            self.order,
        )


def build_graph(state, coupling):
    """Active coupling graph of ``coupling`` at joint ``state``.

    Edges come from the coupling's structural predicate.  Couplings whose
    level-``k`` terms read level ``k+1`` states of other subsystems must respect
    the fixed index ordering; a violation raises :class:`OrderingError`.
    """
    n = len(state)
    g = CouplingGraph(n, frozenset(coupling.active_edges(state)))
    if coupling.kind == "lower":
        g.check_acyclic_order()
    return g


def k_hop_in_neighbors(g, i, k):
    """Nodes with a walk of exactly ``k`` edges into ``i``; ``N^0(i) = {i}``."""
    if not 0 <= i < g.n:
        raise IndexError(i)
    frontier = {i}
    for _ in range(k):
        frontier = {j for v in frontier for j in g.parents(v)}
        if not frontier:
            break
    return frontier


def within_hops(g, i, k):
    """Union of ``N^0(i) .. N^k(i)``."""
    seen = {i}
    frontier = {i}
    for _ in range(k):
        frontier = {j for v in frontier for j in g.parents(v)} - seen
        if not frontier:
            break
        seen |= frontier
    return seen


def ancestors(g, i):
    """All nodes with a directed path to ``i``, including ``i``."""
    return within_hops(g, i, g.n)


def info_set(g, i, k, coupling):
    """Subsystems whose flat outputs are needed to evaluate level map ``k`` of ``i``.

    ``k`` counts from 1 (``k = 1`` is the flat output itself, ``k = r+1`` the
    input map).  Lower-triangular couplings need the ancestor set; strongly
    lower-triangular ones only nodes within ``k-1`` hops.
    """
    kind = coupling if isinstance(coupling, str) else coupling.kind
    if kind == "none":
        return {i}
    if kind == "lower":
        return ancestors(g, i)
    if kind == "strong":
        return within_hops(g, i, k - 1)
    raise ValueError(f"unknown coupling kind {kind!r}")


def format_edges(g):
    """Semicolon-separated edge list with 1-based vehicle numbers, e.g. ``1>2;2>3``."""
    return ";".join(f"{j + 1}>{i + 1}" for j, i in g.sorted_edges())

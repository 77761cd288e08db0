"""DAG representation, layer decomposition, d-separation and SHD."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable


class CycleError(ValueError):
    pass


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes ``0..d-1``.

    ``edges`` holds ``(parent, child)`` pairs. Construction validates
    indices and acyclicity; instances are immutable.
    """

    d: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be non-negative")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.d and 0 <= v < self.d):
                raise ValueError(f"edge ({u}, {v}) out of range for d={self.d}")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
        object.__setattr__(self, "edges", edges)
        pa = [set() for _ in range(self.d)]
        ch = [set() for _ in range(self.d)]
        for u, v in edges:
            pa[v].add(u)
            ch[u].add(v)
        object.__setattr__(self, "_pa", tuple(frozenset(p) for p in pa))
        object.__setattr__(self, "_ch", tuple(frozenset(c) for c in ch))
        object.__setattr__(self, "_topo", self._toposort())

    @classmethod
    def from_parents(cls, parents: dict | list) -> "Dag":
        items = parents.items() if isinstance(parents, dict) else enumerate(parents)
        items = list(items)
        d = len(items) if not isinstance(parents, dict) else (max(parents, default=-1) + 1)
        return cls(d, frozenset((int(p), int(k)) for k, ps in items for p in ps))

    def _toposort(self) -> tuple:
        indeg = [len(p) for p in self._pa]
        ready = [k for k in range(self.d) if indeg[k] == 0]
        order = []
        while ready:
            ready.sort()
            k = ready.pop(0)
            order.append(k)
            for c in sorted(self._ch[k]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != self.d:
            raise CycleError("graph contains a directed cycle")
        return tuple(order)

    def parents(self, k: int) -> frozenset:
        return self._pa[self._check(k)]

    def children(self, k: int) -> frozenset:
        return self._ch[self._check(k)]

    def topological_order(self) -> tuple:
        """Smallest-index-first Kahn ordering."""
        return self._topo

    def _check(self, k: int) -> int:
        if not 0 <= k < self.d:
            raise IndexError(f"node {k} out of range for d={self.d}")
        return k

    def _reach(self, start: Iterable[int], nbrs) -> set:
        seen: set = set()
        stack = list(start)
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def ancestors(self, k: int) -> frozenset:
        return frozenset(self._reach([self._check(k)], self._pa) - {k})

    def descendants(self, k: int) -> frozenset:
        return frozenset(self._reach([self._check(k)], self._ch) - {k})

    def ancestors_of_set(self, nodes: Iterable[int]) -> frozenset:
        nodes = set(nodes)
        return frozenset(self._reach(nodes, self._pa) | nodes)

    def permute(self, perm) -> "Dag":
        """Relabel node ``i`` as ``perm[i]``."""
        return Dag(self.d, frozenset((perm[u], perm[v]) for u, v in self.edges))

    def to_edge_list(self) -> str:
        lines = [f"d={self.d}"] + [f"{u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Dag":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("d="):
            raise ValueError("edge list must start with 'd=<int>'")
        d = int(lines[0][2:])
        edges = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"malformed edge line: {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge in edge list")
        return cls(d, frozenset(edges))

    def __repr__(self) -> str:
        return f"Dag(d={self.d}, edges={sorted(self.edges)})"


@dataclass(frozen=True)
class Relatives:
    parents: frozenset
    ancestors: frozenset
    descendants: frozenset
    nondescendants: frozenset


def relatives(g: Dag, k: int) -> Relatives:
    de = g.descendants(k)
    return Relatives(g.parents(k), g.ancestors(k), de, frozenset(range(g.d)) - de)


@dataclass(frozen=True)
class LayerDecomposition:
    layers: tuple  # tuple of frozensets, layers[0] is L_1

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> tuple:
        return tuple(len(layer) for layer in self.layers)

    def layer_of(self, k: int) -> int:
        """1-based layer index of node ``k``."""
        for j, layer in enumerate(self.layers, start=1):
            if k in layer:
                return j
        raise KeyError(k)

    def ancestral_set(self, j: int) -> frozenset:
        """Union of the first ``j`` layers (``j = 0`` gives the empty set)."""
        out: frozenset = frozenset()
        for layer in self.layers[:j]:
            out |= layer
        return out


def layer_decomposition(g: Dag) -> LayerDecomposition:
    remaining = set(range(g.d))
    layers = []
    while remaining:
        layer = frozenset(k for k in remaining if not (g.parents(k) & remaining))
        layers.append(layer)
        remaining -= layer
    return LayerDecomposition(tuple(layers))


def _as_set(s) -> frozenset:
    if isinstance(s, int):
        return frozenset([s])
    return frozenset(int(x) for x in s)


def d_separated(g: Dag, a, b, c) -> bool:
    """True iff every trail between ``a`` and ``b`` is blocked by ``c``.

    Reachability over (node, direction) states; a collider is open when it
    or one of its descendants is in ``c``.
    """
    a, b, c = _as_set(a), _as_set(b), _as_set(c)
    if a & b or a & c or b & c:
        raise ValueError("a, b, c must be pairwise disjoint")
    if not a or not b:
        return True
    opens = g.ancestors_of_set(c)  # nodes whose descendant set meets c
    # direction: "up" = arrived from a child, "down" = arrived from a parent
    visited = set()
    queue = deque((x, "up") for x in a)
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in b:
            return False
        if direction == "up" and node not in c:
            for p in g.parents(node):
                queue.append((p, "up"))
            for ch in g.children(node):
                queue.append((ch, "down"))
        elif direction == "down":
            if node not in c:
                for ch in g.children(node):
                    queue.append((ch, "down"))
            if node in opens:
                for p in g.parents(node):
                    queue.append((p, "up"))
    return True


def is_polyforest(g: Dag) -> bool:
    """True iff the undirected skeleton has no cycle (union-find)."""
    root = list(range(g.d))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        root[ru] = rv
    return True


def shd(g1: Dag, g2: Dag) -> int:
    """Structural Hamming distance: additions + deletions + reversals."""
    if g1.d != g2.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g2.d}")
    skel1 = {frozenset(e) for e in g1.edges}
    skel2 = {frozenset(e) for e in g2.edges}
    reversed_ = sum(1 for (u, v) in g1.edges if (v, u) in g2.edges)
    return len(skel1 ^ skel2) + reversed_

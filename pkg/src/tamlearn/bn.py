"""Tabular Bayesian networks and the exact (population) joint distribution.

Configurations are mixed-radix encoded with node 0 as the fastest digit.
Cpt rows follow the same rule over the sorted parent list: the row index
of a parent configuration is ``sum(x[p_i] * prod(K[p_0..p_{i-1}]))``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import Dag

DEFAULT_STATE_CAP = 1 << 24
DEFAULT_BOUNDARY_CAP = 20
ZERO_CMI_TOL = 1e-9


class StateSpaceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TabularBN:
    """A Dag plus one conditional probability table per node.

    ``cpts[k]`` has shape ``(prod(supports[p] for p in parents(k)), supports[k])``.
    ``offsets`` records value shifts for variables whose natural values are
    negative (stored value = natural value + offset).
    """

    dag: Dag
    supports: tuple
    cpts: tuple
    offsets: tuple = ()
    name: str = ""

    def __post_init__(self):
        d = self.dag.d
        supports = tuple(int(k) for k in self.supports)
        if len(supports) != d:
            raise ValueError("one support size per node required")
        if any(k < 1 for k in supports):
            raise ValueError("support sizes must be >= 1")
        offsets = tuple(int(o) for o in self.offsets) if self.offsets else (0,) * d
        if len(offsets) != d:
            raise ValueError("one offset per node required")
        if len(self.cpts) != d:
            raise ValueError("one cpt per node required")
        cpts = []
        for k in range(d):
            table = np.array(self.cpts[k], dtype=np.float64)
            rows = int(np.prod([supports[p] for p in self.parent_list(k)], dtype=np.int64))
            if table.shape != (rows, supports[k]):
                raise ValueError(f"cpt of node {k} has shape {table.shape}, expected {(rows, supports[k])}")
            if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError(f"cpt rows of node {k} must be non-negative and sum to 1")
            table.setflags(write=False)
            cpts.append(table)
        object.__setattr__(self, "supports", supports)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "cpts", tuple(cpts))

    @property
    def d(self) -> int:
        return self.dag.d

    def parent_list(self, k: int) -> tuple:
        return tuple(sorted(self.dag.parents(k)))

    @property
    def strictly_positive(self) -> bool:
        return all(bool(np.all(t > 0)) for t in self.cpts)

    def to_text(self) -> str:
        out = ["# tabular bayesian network", f"d={self.d}"]
        if self.name:
            out.append(f"name={self.name}")
        out.append("supports=" + " ".join(map(str, self.supports)))
        if any(self.offsets):
            out.append("offsets=" + " ".join(map(str, self.offsets)))
        out.append("edges")
        out += [f"{u} {v}" for u, v in sorted(self.dag.edges)]
        out.append("cpts")
        for k in range(self.d):
            out.append(f"node {k}")
            for row in self.cpts[k]:
                out.append(" ".join(f"{x:.17g}" for x in row))
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TabularBN":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        header: dict = {}
        i = 0
        while i < len(lines) and lines[i] not in ("edges", "cpts"):
            key, sep, val = lines[i].partition("=")
            if not sep:
                raise ValueError(f"malformed header line: {lines[i]!r}")
            header[key.strip()] = val.strip()
            i += 1
        try:
            d = int(header["d"])
            supports = tuple(int(x) for x in header["supports"].split())
        except KeyError as exc:
            raise ValueError(f"missing header field {exc}") from None
        offsets = tuple(int(x) for x in header["offsets"].split()) if "offsets" in header else ()
        edges = []
        if i < len(lines) and lines[i] == "edges":
            i += 1
            while i < len(lines) and lines[i] != "cpts":
                u, v = lines[i].split()
                edges.append((int(u), int(v)))
                i += 1
        if i >= len(lines) or lines[i] != "cpts":
            raise ValueError("missing 'cpts' section")
        i += 1
        rows: dict = {}
        current = None
        for ln in lines[i:]:
            if ln.startswith("node"):
                current = int(ln.split()[1])
                rows[current] = []
            elif current is None:
                raise ValueError("cpt row before any 'node' line")
            else:
                rows[current].append([float(x) for x in ln.split()])
        dag = Dag(d, frozenset(edges))
        cpts = []
        for k in range(d):
            if k not in rows:
                raise ValueError(f"missing cpt for node {k}")
            cpts.append(np.array(rows[k], dtype=np.float64).reshape(-1, supports[k]))
        return cls(dag, supports, tuple(cpts), offsets, header.get("name", ""))


def _mask(nodes) -> int:
    m = 0
    for x in nodes:
        m |= 1 << int(x)
    return m


class JointDist:
    """Fully enumerated joint probability table (the population oracle).

    ``probs[x]`` is the probability of the configuration whose mixed-radix
    code (node 0 fastest) is ``x``. Marginal entropies are memoised by node
    set; the object is otherwise immutable.
    """

    def __init__(self, supports, probs):
        self.supports = tuple(int(k) for k in supports)
        probs = np.asarray(probs, dtype=np.float64).reshape(-1)
        if probs.size != int(np.prod(self.supports, dtype=np.int64)):
            raise ValueError("probability table size does not match supports")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError("joint table must be non-negative and sum to 1")
        probs.setflags(write=False)
        self.probs = probs
        self._cube = probs.reshape(tuple(reversed(self.supports))) if self.supports else probs
        self._cache: dict = {}

    @property
    def d(self) -> int:
        return len(self.supports)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    def marginal(self, nodes) -> np.ndarray:
        """Marginal table over ``nodes`` with axes in descending node order."""
        keep = set(int(x) for x in nodes)
        axes = tuple(self.d - 1 - k for k in range(self.d) if k not in keep)
        return self._cube.sum(axis=axes) if axes else self._cube

    def entropy_mask(self, mask: int) -> float:
        h = self._cache.get(mask)
        if h is None:
            nodes = [k for k in range(self.d) if mask >> k & 1]
            p = self.marginal(nodes).reshape(-1)
            p = p[p > 0]
            h = float(-np.sum(p * np.log(p))) if nodes else 0.0
            self._cache[mask] = h
        return h


def joint_table(bn: TabularBN, state_cap: int = DEFAULT_STATE_CAP) -> JointDist:
    """Multiply out the factorisation ``P(x) = prod_k P(x_k | x_pa(k))``."""
    d = bn.d
    size = int(np.prod(bn.supports, dtype=np.float64)) if d else 1
    if size > state_cap:
        raise StateSpaceError(f"joint state space {size} exceeds cap {state_cap}")
    shape = tuple(reversed(bn.supports))
    cube = np.ones(shape, dtype=np.float64)
    for k in range(d):
        parents = bn.parent_list(k)
        # cpt rows: first parent fastest -> C-order axes (p_last, ..., p_first, k)
        table = bn.cpts[k].reshape(tuple(bn.supports[p] for p in reversed(parents)) + (bn.supports[k],))
        labels = list(reversed(parents)) + [k]
        # bring axes into descending node order and broadcast into the cube
        order = sorted(range(len(labels)), key=lambda i: -labels[i])
        table = np.transpose(table, order)
        bshape = [1] * d
        for lab in labels:
            bshape[d - 1 - lab] = bn.supports[lab]
        cube = cube * table.reshape(bshape)
    return JointDist(bn.supports, cube.reshape(-1))


def _set(s) -> frozenset:
    if isinstance(s, (int, np.integer)):
        return frozenset([int(s)])
    return frozenset(int(x) for x in s)


def entropy(p: JointDist, s) -> float:
    """Shannon entropy (nats) of the marginal over ``s``."""
    return p.entropy_mask(_mask(_set(s)))


def cond_entropy(p: JointDist, k, a) -> float:
    k, a = _set(k), _set(a)
    if k & a:
        raise ValueError("conditioning set overlaps target")
    return max(0.0, p.entropy_mask(_mask(k | a)) - p.entropy_mask(_mask(a)))


def cmi(p: JointDist, k, l, a) -> float:
    """I(k; l | a) in nats, clamped at zero."""
    k, l, a = _set(k), _set(l), _set(a)
    if k & l or k & a or l & a:
        raise ValueError("sets must be pairwise disjoint")
    h = p.entropy_mask
    # the paired sum first keeps the value exactly symmetric in k and l
    val = (h(_mask(k | a)) + h(_mask(l | a))) - h(_mask(k | l | a)) - h(_mask(a))
    return max(0.0, val)


def markov_boundary_exact(
    p: JointDist,
    k: int,
    s,
    tol: float = ZERO_CMI_TOL,
    cap: int = DEFAULT_BOUNDARY_CAP,
    warn: bool = True,
) -> frozenset:
    """Smallest ``m`` within ``s`` with ``I(k; s - m | m) <= tol``.

    Exhaustive search by subset size, then lexicographic order. Unique under
    strict positivity; otherwise the first minimal blanket is returned.
    """
    s = sorted(_set(s))
    if k in s:
        raise ValueError("target must not be in the candidate set")
    if len(s) > cap:
        raise StateSpaceError(f"candidate set of size {len(s)} exceeds cap {cap}")
    if warn and not p.strictly_positive:
        warnings.warn("joint is not strictly positive; Markov boundary may not be unique", stacklevel=2)
    full = frozenset(s)
    for size in range(len(s) + 1):
        for m in itertools.combinations(s, size):
            rest = full - set(m)
            if not rest or cmi(p, k, rest, m) <= tol:
                return frozenset(m)
    return full  # unreachable: m = s always qualifies


def minimal_imap(p: JointDist, ordering, **kwargs) -> Dag:
    """Parents of each node = its Markov boundary among its predecessors."""
    ordering = [int(x) for x in ordering]
    if sorted(ordering) != list(range(p.d)):
        raise ValueError("ordering must be a permutation of all nodes")
    edges = set()
    for pos, k in enumerate(ordering):
        for q in markov_boundary_exact(p, k, ordering[:pos], **kwargs):
            edges.add((q, k))
    return Dag(p.d, frozenset(edges))


def sample(bn: TabularBN, n: int, seed: int, backend: str | None = None):
    """Ancestral sampling of ``n`` rows; deterministic given ``seed``.

    Uniforms come from a Philox counter-based generator, one block of ``n``
    draws per node in topological order.
    """
    from .estimators import Dataset

    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    values = np.zeros((n, bn.d), dtype=np.int64)
    for k in bn.dag.topological_order():
        parents = bn.parent_list(k)
        u = rng.random(n)
        cum = np.cumsum(bn.cpts[k], axis=1)
        _kernels.forward_sample(values, k, parents, [bn.supports[q] for q in parents], cum, u, backend)
    return Dataset(values, bn.supports)

"""Random graph generators, MOD/ADD models and named fixtures."""

from __future__ import annotations

import enum
import itertools
import math
import warnings
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .bn import TabularBN
from .graph import Dag

ADD_SUPPORT_CAP = 64


def make_rng(seed) -> np.random.Generator:
    """Philox generator; ``seed`` may be an int or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(base: int, *keys) -> int:
    """Independent 63-bit child seed from a base seed and hashable keys."""
    words = [int(base) & 0xFFFFFFFF, (int(base) >> 32) & 0xFFFFFFFF]
    for key in keys:
        words.append(key & 0xFFFFFFFF if isinstance(key, int) else zlib.crc32(str(key).encode()))
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


class GraphKind(str, enum.Enum):
    TREE = "tree"
    ER = "er"
    SF = "sf"


class ModelKind(str, enum.Enum):
    MOD = "mod"
    ADD = "add"


@dataclass(frozen=True)
class GraphSpec:
    kind: GraphKind
    d: int
    expected_edges: float = 0.0  # ER expected edge count, SF attachment count
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", GraphKind(str(self.kind).lower()))
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.expected_edges < 0:
            raise ValueError("edge parameter must be non-negative")

    def generate(self) -> Dag:
        if self.kind is GraphKind.TREE:
            return gen_polytree(self.d, self.seed)
        if self.kind is GraphKind.ER:
            return gen_er(self.d, self.expected_edges, self.seed)
        return gen_sf(self.d, int(self.expected_edges), self.seed)


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    p: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(str(self.kind).lower()))
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")

    def compile(self, dag: Dag) -> TabularBN:
        return compile_mod(dag, self.p) if self.kind is ModelKind.MOD else compile_add(dag, self.p)


def prufer_decode(seq, d: int) -> list:
    """Edges of the labeled tree encoded by a Prufer sequence of length d-2."""
    degree = [1] * d
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(d) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(d) if degree[i] == 1]
    edges.append((u, v))
    return edges


def gen_polytree(d: int, seed) -> Dag:
    """Uniform labeled tree via a random Prufer sequence, each edge oriented by a fair coin."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return Dag(1)
    rng = make_rng(seed)
    if d == 2:
        edges = [(0, 1)]
    else:
        edges = prufer_decode(rng.integers(0, d, size=d - 2), d)
    flips = rng.random(len(edges)) < 0.5
    return Dag(d, frozenset((v, u) if f else (u, v) for (u, v), f in zip(edges, flips)))


def gen_er(d: int, expected_edges: float, seed) -> Dag:
    """Random topological order, then each order-respecting pair independently."""
    rng = make_rng(seed)
    pairs = d * (d - 1) // 2
    prob = expected_edges / pairs if pairs else 0.0
    if prob > 1:
        warnings.warn(f"edge probability {prob:.3g} > 1 clamped to 1", stacklevel=2)
        prob = 1.0
    order = rng.permutation(d)
    coins = rng.random(pairs)
    edges = []
    for c, (i, j) in zip(coins, itertools.combinations(range(d), 2)):
        if c < prob:
            edges.append((int(order[i]), int(order[j])))
    return Dag(d, frozenset(edges))


def gen_sf(d: int, attach: int, seed) -> Dag:
    """Barabasi-Albert preferential attachment over a random arrival order.

    Each arriving node picks ``min(attach, #earlier)`` distinct earlier nodes
    with probability proportional to degree + 1; edges point old -> new.
    """
    if attach < 0:
        raise ValueError("attach must be non-negative")
    rng = make_rng(seed)
    order = rng.permutation(d)
    degree = np.zeros(d, dtype=np.float64)
    edges = []
    for pos in range(1, d):
        new = int(order[pos])
        old = order[:pos]
        m = min(attach, pos)
        if m == 0:
            continue
        w = degree[old] + 1.0
        chosen = rng.choice(old, size=m, replace=False, p=w / w.sum())
        for o in chosen:
            edges.append((int(o), new))
            degree[o] += 1
            degree[new] += 1
    return Dag(d, frozenset(edges))


def _parent_configs(supports, parents):
    """Parent value tuples in cpt row order (first parent fastest)."""
    ranges = [range(supports[p]) for p in parents]
    for combo in itertools.product(*reversed(ranges)):
        yield tuple(reversed(combo))


def compile_mod(dag: Dag, p: float) -> TabularBN:
    """Binary parity model with Bernoulli(p) noise.

    ``X = s`` when the noise bit is 1 and ``X = 1 - s`` otherwise, where ``s``
    is the parity of the parent sum; a root has ``s = 0``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    supports = (2,) * dag.d
    cpts = []
    for k in range(dag.d):
        parents = sorted(dag.parents(k))
        rows = []
        for cfg in _parent_configs(supports, parents):
            s = sum(cfg) % 2
            row = [0.0, 0.0]
            row[s] = p
            row[1 - s] = 1.0 - p
            rows.append(row)
        cpts.append(np.array(rows))
    return TabularBN(dag, supports, tuple(cpts), name=f"MOD(p={p})")


def compile_add(dag: Dag, p: float, cap: int = ADD_SUPPORT_CAP) -> TabularBN:
    """Additive model ``X = sum(parents) + Bernoulli(p)``; supports grow along the order."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    supports = [0] * dag.d
    for k in dag.topological_order():
        supports[k] = sum(supports[q] - 1 for q in dag.parents(k)) + 2
        if supports[k] > cap:
            raise ValueError(f"support of node {k} ({supports[k]}) exceeds cap {cap}")
    cpts = []
    for k in range(dag.d):
        parents = sorted(dag.parents(k))
        rows = []
        for cfg in _parent_configs(supports, parents):
            s = sum(cfg)
            row = np.zeros(supports[k])
            row[s] = 1.0 - p
            row[s + 1] = p
            rows.append(row)
        cpts.append(np.array(rows))
    return TabularBN(dag, tuple(supports), tuple(cpts), name=f"ADD(p={p})")


def random_cpts(dag: Dag, seed, supports=2, alpha: float = 1.0, floor: float = 0.05) -> TabularBN:
    """Dirichlet(alpha) cpt rows shrunk towards uniform so every entry is at least ``floor``.

    The shrink ``floor + (1 - K floor) * row`` is affine, so distinct Dirichlet
    rows stay distinct (clipping would merge rows and create independences).
    """
    rng = make_rng(seed)
    if isinstance(supports, int):
        supports = (supports,) * dag.d
    cpts = []
    for k in range(dag.d):
        kk = supports[k]
        if not 0 <= floor * kk < 1:
            raise ValueError("floor too large for the support size")
        rows = int(np.prod([supports[q] for q in dag.parents(k)], dtype=np.int64))
        table = rng.dirichlet([alpha] * kk, size=rows)
        cpts.append(floor + (1 - kk * floor) * table)
    return TabularBN(dag, tuple(supports), tuple(cpts), name="random")


# ---------------------------------------------------------------- fixtures

_BETA0 = math.log(0.1 / 0.9)


def _bern(q):
    return [1.0 - q, q]


def example_m1(eps: float = 0.01) -> TabularBN:
    """Diamond X1 -> {X2, X3} -> X4 with X4 = X2 + Ber(sigmoid(eps * X3 + beta0)).

    Nodes 0..3 are X1..X4. X2 and X4 take values from -1 and are stored with
    offset 1.
    """
    dag = Dag(4, frozenset({(0, 1), (0, 2), (1, 3), (2, 3)}))
    supports = (2, 3, 3, 4)
    x1 = np.array([_bern(0.2)])
    # X2 = -X1 + Z2, Z2 ~ Ber(0.1); stored value = X2 + 1
    x2 = np.array([[0.0, 0.9, 0.1], [0.9, 0.1, 0.0]])
    # X3 = X1 + Z3, Z3 ~ Ber(0.2)
    x3 = np.array([[0.8, 0.2, 0.0], [0.0, 0.8, 0.2]])
    rows = []
    for s2, x3v in _parent_configs(supports, [1, 2]):
        q = float(expit(eps * x3v + _BETA0))
        row = np.zeros(4)
        row[s2] = 1.0 - q  # stored X4 = stored X2 + B
        row[s2 + 1] = q
        rows.append(row)
    return TabularBN(dag, supports, (x1, x2, x3, np.array(rows)), offsets=(0, 1, 0, 1), name=f"ExampleC3-M1(eps={eps})")


def example_m2() -> TabularBN:
    """Same diamond with X4 = X2 + X3 + Z4, Z4 ~ Ber(0.1); X4 stored with offset 1."""
    base = example_m1()
    supports = (2, 3, 3, 6)
    rows = []
    for s2, x3v in _parent_configs(supports, [1, 2]):
        total = (s2 - 1) + x3v  # natural X2 + X3, in [-1, 3]
        row = np.zeros(6)
        row[total + 1] = 0.9
        row[total + 2] = 0.1
        rows.append(row)
    return TabularBN(
        base.dag, supports, base.cpts[:3] + (np.array(rows),), offsets=(0, 1, 0, 1), name="ExampleC3-M2"
    )


def path_cancel(n_paths: int = 2, prior_z: float = 0.3, beta0: float = 1.5, alpha0: float = -1.0) -> TabularBN:
    """Z -> X_i -> Y for i = 1..n with the Z effects cancelling at Y.

    Logistic links ``P(X_i=1|z) = sigmoid(beta_i z + alpha_i)`` and
    ``P(Y=1|x) = sigmoid(beta0 sum(x) + alpha0)``. Choosing
    ``beta_i + alpha_i = alpha_{i+1}`` (cyclically) makes the multiset of
    success probabilities identical for z = 0 and z = 1, so the law of
    ``sum(x)`` and hence of Y does not depend on Z; the betas sum to zero.
    Node 0 is Z, nodes 1..n are X_i, node n+1 is Y.
    """
    if n_paths < 2:
        raise ValueError("need at least two paths to cancel")
    alphas = np.linspace(-1.0, 1.0, n_paths)
    betas = np.roll(alphas, -1) - alphas
    d = n_paths + 2
    y = n_paths + 1
    edges = {(0, i) for i in range(1, n_paths + 1)} | {(i, y) for i in range(1, n_paths + 1)}
    dag = Dag(d, frozenset(edges))
    supports = (2,) * d
    cpts = [np.array([_bern(prior_z)])]
    for i in range(n_paths):
        cpts.append(np.array([_bern(float(expit(alphas[i]))), _bern(float(expit(betas[i] + alphas[i])))]))
    rows = [_bern(float(expit(beta0 * sum(cfg) + alpha0))) for cfg in _parent_configs(supports, range(1, y))]
    cpts.append(np.array(rows))
    return TabularBN(dag, supports, tuple(cpts), name=f"PathCancel({n_paths})")


def discrete_unfaithful(
    prior_w: float = 0.1, prior_z: float = 0.5, a_w: float = 3.0, a_z: float = 1.5, a_0: float = -1.0,
    g_x: float = 2.5, g_0: float = -1.5,
) -> TabularBN:
    """W -> X <- Z, X -> Y <- Z with the direct Z -> Y effect cancelling Z -> X -> Y.

    ``P(X=1|w,z) = sigmoid(a_w w + a_z z + a_0)`` and
    ``P(Y=1|x,z) = sigmoid(g_x x + g_z z + g_0)``; ``g_z`` is solved so that
    ``P(Y=1|Z=1) = P(Y=1|Z=0)``, i.e. Z and Y are marginally independent.
    Nodes: 0=W, 1=Z, 2=X, 3=Y.
    """

    def px(z):
        return (1 - prior_w) * expit(a_z * z + a_0) + prior_w * expit(a_w + a_z * z + a_0)

    def py_given_z(z, g_z):
        q = px(z)
        return (1 - q) * expit(g_z * z + g_0) + q * expit(g_x + g_z * z + g_0)

    target = py_given_z(0, 0.0)
    g_z = brentq(lambda g: py_given_z(1, g) - target, -20.0, 20.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    dag = Dag(4, frozenset({(0, 2), (1, 2), (2, 3), (1, 3)}))
    supports = (2, 2, 2, 2)
    xw = [_bern(float(expit(a_w * w + a_z * z + a_0))) for w, z in _parent_configs(supports, [0, 1])]
    yz = [_bern(float(expit(g_x * x + g_z * z + g_0))) for z, x in _parent_configs(supports, [1, 2])]
    cpts = (np.array([_bern(prior_w)]), np.array([_bern(prior_z)]), np.array(xw), np.array(yz))
    return TabularBN(dag, supports, cpts, name="DiscreteUnfaithful")


def aggregate_only(noise: float = 0.3, tail: float = 0.05) -> TabularBN:
    """Two uniform roots A, B and a ternary child driven only by A xor B.

    The child is marginally independent of each root but not of the pair,
    so the per-ancestor dependence test fails while the whole-layer test
    succeeds. Nodes: 0=A, 1=B, 2=child.
    """
    dag = Dag(3, frozenset({(0, 2), (1, 2)}))
    supports = (2, 2, 3)
    even = [1.0 - noise - tail, noise, tail]
    odd = [tail, noise, 1.0 - noise - tail]
    rows = [even if (a ^ b) == 0 else odd for a, b in _parent_configs(supports, [0, 1])]
    cpts = (np.array([_bern(0.5)]), np.array([_bern(0.5)]), np.array(rows))
    return TabularBN(dag, supports, cpts, name="AggregateOnly")


FIXTURES = {
    "ExampleC3-M1": example_m1,
    "ExampleC3-M2": example_m2,
    "PathCancel": path_cancel,
    "DiscreteUnfaithful": discrete_unfaithful,
    "AggregateOnly": aggregate_only,
}


def fixture(name: str) -> TabularBN:
    """Named fixture; a parenthesised argument is forwarded, e.g. ``PathCancel(3)``."""
    base, _, arg = name.partition("(")
    base = base.strip()
    if base not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}")
    if arg:
        arg = arg.rstrip(")").strip()
        if "=" in arg:
            arg = arg.split("=", 1)[1]
        value = float(arg)
        return FIXTURES[base](int(value) if base == "PathCancel" else value)
    return FIXTURES[base]()

"""Exact certification of identifiability and PPS conditions on enumerable BNs.

All quantities are population values computed from the enumerated joint.
Strict inequalities are certified with a margin of ``TOL`` nats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bn import JointDist, TabularBN, cmi, cond_entropy, joint_table, markov_boundary_exact
from .graph import Dag, LayerDecomposition, layer_decomposition

TOL = 1e-9
PPS_SUBSET_CAP = 12
ORDERING_CAP_D = 7


class CertificationError(ValueError):
    pass


@dataclass
class _Model:
    dag: Dag
    joint: JointDist
    layers: LayerDecomposition
    name: str = ""
    _mb: dict = field(default_factory=dict)

    def boundary(self, k: int, a: frozenset) -> frozenset:
        key = (k, a)
        if key not in self._mb:
            self._mb[key] = markov_boundary_exact(self.joint, k, a, warn=False)
        return self._mb[key]

    def ancestral(self, j: int) -> frozenset:
        return self.layers.ancestral_set(j)


def _model(bn, joint: JointDist | None = None) -> _Model:
    if isinstance(bn, _Model):
        return bn
    if isinstance(bn, TabularBN):
        joint = joint if joint is not None else joint_table(bn)
        return _Model(bn.dag, joint, layer_decomposition(bn.dag), bn.name)
    if isinstance(bn, tuple) and len(bn) == 2:  # (Dag, JointDist)
        dag, joint = bn
        return _Model(dag, joint, layer_decomposition(dag))
    raise TypeError("expected a TabularBN or a (Dag, JointDist) pair")


def _required_pairs(model: _Model):
    """(k, j) with L(k) >= 2 and j in 0..L(k)-2, plus an_j(k) = an(k) & L_{j+1}."""
    for k in range(model.dag.d):
        lk = model.layers.layer_of(k)
        an = model.dag.ancestors(k)
        for j in range(lk - 1):
            yield k, j, an & model.layers.layers[j]


def check_condition1(bn, joint: JointDist | None = None, tol: float = TOL) -> dict:
    """Important ancestors per required ``(k, j)``: entropy strictly below and CMI positive."""
    m = _model(bn, joint)
    out = {}
    for k, j, an_j in _required_pairs(m):
        a = m.ancestral(j)
        hk = cond_entropy(m.joint, k, a)
        out[(k, j)] = frozenset(
            i for i in an_j if cond_entropy(m.joint, i, a) < hk - tol and cmi(m.joint, k, i, a) > tol
        )
    return out


def check_condition1_general(bn, joint: JointDist | None = None, tol: float = TOL) -> dict:
    """Witnesses under the relaxed rule: CMI with the ancestor plus all lower-entropy layer ancestors."""
    m = _model(bn, joint)
    out = {}
    for k, j, an_j in _required_pairs(m):
        a = m.ancestral(j)
        hk = cond_entropy(m.joint, k, a)
        h = {i: cond_entropy(m.joint, i, a) for i in an_j}
        wit = set()
        for i in an_j:
            if not h[i] < hk - tol:
                continue
            group = {q for q in an_j if q != i and h[q] <= h[i]} | {i}
            if cmi(m.joint, k, group, a) > tol:
                wit.add(i)
        out[(k, j)] = frozenset(wit)
    return out


def check_pps_condition(
    bn, k: int, a, joint: JointDist | None = None, cap: int = PPS_SUBSET_CAP, tol: float = TOL
) -> tuple:
    """Check that boundary members always dominate non-members in CMI.

    Returns ``(ok, violation)`` where ``violation`` is ``(k, m, l, c)`` for
    the first failing proper subset ``m`` and outside node ``l`` (``c`` the
    best boundary member at ``m``), or ``None``.
    """
    mdl = _model(bn, joint)
    a = frozenset(a)
    mb = mdl.boundary(k, a)
    if len(mb) > cap:
        raise CertificationError(f"boundary of size {len(mb)} exceeds cap {cap}")
    outside = sorted(a - mb)
    if not outside:
        return True, None
    members = sorted(mb)
    for size in range(len(members)):
        for sub in itertools.combinations(members, size):
            sub = frozenset(sub)
            vals = {c: cmi(mdl.joint, k, c, sub) for c in members if c not in sub}
            c_best = min(vals, key=lambda c: (-vals[c], c))
            for l in outside:
                if not vals[c_best] > cmi(mdl.joint, k, l, sub) + tol:
                    return False, (k, tuple(sorted(sub)), l, c_best)
    return True, None


def _random_ancestral_sets(dag: Dag, count: int, seed: int):
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(count):
        pick = [i for i in range(dag.d) if rng.random() < 0.5]
        yield dag.ancestors_of_set(pick)


def check_nondegeneracy(bn, joint: JointDist | None = None, n_random: int = 100, seed: int = 0, tol: float = TOL) -> bool:
    """``I(X_k; pa(k) | A) > 0`` for checked ancestral ``A`` missing a parent of ``k``."""
    m = _model(bn, joint)
    sets = {m.ancestral(j) for j in range(m.layers.depth + 1)}
    sets |= set(_random_ancestral_sets(m.dag, n_random, seed))
    for a in sorted(sets, key=lambda s: (len(s), sorted(s))):
        for k in range(m.dag.d):
            if k in a:
                continue
            missing = m.dag.parents(k) - a
            if missing and not cmi(m.joint, k, missing, a) > tol:
                return False
    return True


def local_entropies(bn, joint: JointDist | None = None) -> list:
    m = _model(bn, joint)
    return [cond_entropy(m.joint, k, m.dag.parents(k)) for k in range(m.dag.d)]


def check_equal_entropy(bn, joint: JointDist | None = None, tol: float = TOL) -> tuple:
    """``(equal, h_star)``: every ``H(X_k | pa(k))`` within ``tol`` of their mean."""
    h = local_entropies(bn, joint)
    h_star = float(np.mean(h))
    ok = max(abs(x - h_star) for x in h) <= tol
    return ok, (h_star if ok else None)


def _linear_extensions(dag: Dag):
    placed: list = []
    indeg = [len(dag.parents(k)) for k in range(dag.d)]

    def rec():
        if len(placed) == dag.d:
            yield tuple(placed)
            return
        for k in range(dag.d):
            if indeg[k] == 0 and k not in placed:
                placed.append(k)
                for c in dag.children(k):
                    indeg[c] -= 1
                yield from rec()
                for c in dag.children(k):
                    indeg[c] += 1
                placed.pop()

    yield from rec()


def check_unequal_entropy(bn, joint: JointDist | None = None, tol: float = TOL, max_d: int = ORDERING_CAP_D):
    """Existence of a topological order satisfying the relaxed equal-entropy inequalities.

    Returns ``None`` ("not checked") when ``d > max_d``.
    """
    m = _model(bn, joint)
    d = m.dag.d
    if d > max_d:
        return None
    h = local_entropies(m)
    layer = [m.layers.layer_of(k) for k in range(d)]
    for tau in _linear_extensions(m.dag):
        if _order_ok(m, tau, h, layer, tol):
            return True
    return False


def _order_ok(m: _Model, tau, h, layer, tol) -> bool:
    for j, k in enumerate(tau):
        before = frozenset(tau[:j])
        for l in tau[j + 1:]:
            slack = cmi(m.joint, l, m.dag.parents(l) - before, before) if m.dag.parents(l) - before else 0.0
            strict = h[k] < h[l] + slack - tol
            if layer[k] == layer[l]:
                if not (abs(h[k] - h[l]) <= tol or strict):
                    return False
            elif not strict:
                return False
    return True


@dataclass
class Gaps:
    """Population separations controlling valid thresholds.

    ``delta``/``eta``: entropy gap and CMI of the chosen important ancestor,
    minimised over required ``(k, j)``. ``mask_gap``: the same ancestor's CMI
    with ``k`` given ``k``'s boundary in ``A_j`` (what the simple masking test
    sees). ``delta_tilde``/``xi``: per ``(j, k)`` boundary-dominance gap and
    half the smallest in-boundary CMI. ``backward_gap``: smallest
    ``I(X_k; X_c | A_j - c)`` over boundary members ``c``.
    """

    delta: float = math.inf
    eta: float = math.inf
    mask_gap: float = math.inf
    delta_tilde: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)
    backward_gap: float = math.inf
    undefined: list = field(default_factory=list)  # (k, j) with no important ancestor

    @property
    def min_delta_tilde(self) -> float:
        return min(self.delta_tilde.values(), default=math.inf)

    @property
    def min_xi(self) -> float:
        return min(self.xi.values(), default=math.inf)


def compute_gaps(bn, joint: JointDist | None = None, tol: float = TOL) -> Gaps:
    m = _model(bn, joint)
    g = Gaps()
    witnesses = check_condition1(m, tol=tol)
    for (k, j), wit in sorted(witnesses.items()):
        a = m.ancestral(j)
        if not wit:
            g.undefined.append((k, j))
            continue
        hk = cond_entropy(m.joint, k, a)
        mb = m.boundary(k, a)
        best = None
        for i in sorted(wit):
            gap = hk - cond_entropy(m.joint, i, a)
            info = cmi(m.joint, k, i, a)
            score = min(gap, info)
            if best is None or score > best[0]:
                best = (score, gap, info, cmi(m.joint, k, i, mb))
        g.delta = min(g.delta, best[1])
        g.eta = min(g.eta, best[2])
        g.mask_gap = min(g.mask_gap, best[3])
    for j in range(m.layers.depth):
        a = m.ancestral(j)
        for k in sorted(set(range(m.dag.d)) - a):
            mb = m.boundary(k, a)
            if not mb:
                continue
            outside = sorted(a - mb)
            dt, xi = math.inf, math.inf
            for size in range(len(mb)):
                for sub in itertools.combinations(sorted(mb), size):
                    inside = [cmi(m.joint, k, c, sub) for c in mb if c not in sub]
                    out = max((cmi(m.joint, k, l, sub) for l in outside), default=0.0)
                    dt = min(dt, max(inside) - out)
                    xi = min(xi, min(inside) / 2)
            g.delta_tilde[(j, k)] = dt
            g.xi[(j, k)] = xi
            for c in mb:
                g.backward_gap = min(g.backward_gap, cmi(m.joint, k, c, a - {c}))
    return g


def certified_thresholds(gaps: Gaps, fallback: float = 1e-6) -> tuple:
    """``(omega, kappa)`` inside the exact-recovery region for the simple learner."""
    kappa = gaps.min_xi if math.isfinite(gaps.min_xi) else fallback
    eta = min(gaps.eta, gaps.mask_gap)
    omega = eta / 2 if math.isfinite(eta) else fallback
    return omega, kappa


@dataclass
class ConditionReport:
    name: str
    d: int
    layers: tuple
    strictly_positive: bool
    c1_c2: dict
    condition1: bool
    c1_general: dict
    condition1_general: bool
    pps_ok: bool
    pps_violation: tuple | None
    nondegenerate: bool
    equal_entropy: bool
    h_star: float | None
    unequal_entropy: bool | None
    gaps: Gaps

    @property
    def certified(self) -> bool:
        """Condition 1, PPS condition, positive gaps and strict positivity."""
        g = self.gaps
        return (
            self.strictly_positive
            and self.condition1
            and self.pps_ok
            and g.delta > TOL
            and g.eta > TOL
            and g.mask_gap > TOL
            and g.min_xi > TOL
        )

    def to_text(self) -> str:
        g = self.gaps
        lines = [
            f"name: {self.name}",
            f"d: {self.d}",
            "layers: " + " | ".join(",".join(map(str, sorted(layer))) for layer in self.layers),
            f"strictly_positive: {self.strictly_positive}",
            f"condition1: {self.condition1}",
            "witnesses:",
        ]
        last = None
        for (k, j), wit in sorted(self.c1_c2.items()):
            if k != last:
                lines.append(f"  node {k}:")
                last = k
            lines.append(f"    j {j}: {','.join(map(str, sorted(wit))) if wit else '-'}")
        lines.append(f"condition1_general: {self.condition1_general}")
        lines.append("general_witnesses:")
        for (k, j), wit in sorted(self.c1_general.items()):
            lines.append(f"  node {k} j {j}: {','.join(map(str, sorted(wit))) if wit else '-'}")
        lines.append(f"pps_ok: {self.pps_ok}")
        if self.pps_violation is not None:
            k, sub, l, c = self.pps_violation
            lines.append(f"pps_violation: k={k} m={','.join(map(str, sub)) or '-'} l={l} c={c}")
        lines.append(f"nondegenerate: {self.nondegenerate}")
        lines.append(f"equal_entropy: {self.equal_entropy}")
        lines.append(f"h_star: {_num(self.h_star)}")
        lines.append(f"unequal_entropy: {'not checked' if self.unequal_entropy is None else self.unequal_entropy}")
        lines.append("gaps:")
        lines.append(f"  delta: {_num(g.delta)}")
        lines.append(f"  eta: {_num(g.eta)}")
        lines.append(f"  mask_gap: {_num(g.mask_gap)}")
        lines.append(f"  min_delta_tilde: {_num(g.min_delta_tilde)}")
        lines.append(f"  min_xi: {_num(g.min_xi)}")
        lines.append(f"  backward_gap: {_num(g.backward_gap)}")
        lines.append(f"certified: {self.certified}")
        return "\n".join(lines) + "\n"


def _num(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float) and not math.isfinite(x):
        return "inf"
    return f"{x:.17g}"


def certify(bn: TabularBN, joint: JointDist | None = None, check_unequal: bool = True) -> ConditionReport:
    m = _model(bn, joint)
    c1 = check_condition1(m)
    cg = check_condition1_general(m)
    pps_ok, violation = True, None
    for j in range(m.layers.depth):
        a = m.ancestral(j)
        for k in sorted(set(range(m.dag.d)) - a):
            ok, v = check_pps_condition(m, k, a)
            if not ok:
                pps_ok, violation = False, v
                break
        if not pps_ok:
            break
    eq, h_star = check_equal_entropy(m)
    return ConditionReport(
        name=m.name,
        d=m.dag.d,
        layers=m.layers.layers,
        strictly_positive=m.joint.strictly_positive,
        c1_c2=c1,
        condition1=all(c1.values()),
        c1_general=cg,
        condition1_general=all(cg.values()),
        pps_ok=pps_ok,
        pps_violation=violation,
        nondegenerate=check_nondegeneracy(m),
        equal_entropy=eq,
        h_star=h_star,
        unequal_entropy=check_unequal_entropy(m) if check_unequal else None,
        gaps=compute_gaps(m),
    )

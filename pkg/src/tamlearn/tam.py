"""Layer-wise Testing-and-Masking (TAM) DAG learner."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .estimators import EstimatorKind, InfoSource
from .graph import Dag
from .mb import iamb_backward, pps

EXACT_TIE_TOL = 1e-12


class Variant(str, enum.Enum):
    SIMPLE = "simple"
    GENERAL = "general"
    NOPPS = "nopps"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        return cls(key)


@dataclass(frozen=True)
class TamConfig:
    omega: float = 0.001
    kappa: float = 0.005
    estimator: EstimatorKind = EstimatorKind.MILLER_MADOW
    variant: Variant = Variant.SIMPLE
    auto_tune: bool = False
    tune_constant: float = 1.0

    def __post_init__(self):
        if self.omega < 0 or self.kappa < 0:
            raise ValueError("omega and kappa must be non-negative")
        if self.tune_constant <= 0:
            raise ValueError("tune_constant must be positive")
        object.__setattr__(self, "estimator", EstimatorKind.parse(self.estimator))
        object.__setattr__(self, "variant", Variant.parse(self.variant))


@dataclass
class LayerRecord:
    index: int  # 0-based: this record builds layer index+1 from A_index
    entropies: dict = field(default_factory=dict)  # node -> estimated H(X_k | A)
    tau: tuple = ()
    masks: list = field(default_factory=list)  # (masked, masker, cmi)
    members: list = field(default_factory=list)
    boundaries: dict = field(default_factory=dict)  # node -> frozenset
    tests: list = field(default_factory=list)  # (node, masker, cmi) for every test made


@dataclass
class TamTrace:
    layers: list = field(default_factory=list)
    omega: float = 0.0
    kappa: float = 0.0

    def layer_assignment(self) -> dict:
        return {k: rec.index + 1 for rec in self.layers for k in rec.members}

    def learned_layers(self) -> list:
        return [frozenset(rec.members) for rec in self.layers]

    def to_text(self) -> str:
        """One event per line: ``kind layer node value [extra]``."""
        out = [f"thresholds - - {self.omega:.17g} {self.kappa:.17g}"]
        for rec in self.layers:
            j = rec.index
            for k in sorted(rec.entropies):
                out.append(f"entropy {j} {k} {rec.entropies[k]:.17g}")
            out.append(f"tau {j} - - " + " ".join(map(str, rec.tau)))
            for k, masker, val in rec.tests:
                out.append(f"test {j} {k} {val:.17g} {_fmt_masker(masker)}")
            for k, masker, val in rec.masks:
                out.append(f"mask {j} {k} {val:.17g} {_fmt_masker(masker)}")
            for k in rec.members:
                out.append(f"member {j} {k} - " + ",".join(map(str, sorted(rec.boundaries.get(k, ())))))
        return "\n".join(out) + "\n"


def _fmt_masker(masker) -> str:
    if isinstance(masker, (frozenset, set, tuple, list)):
        return "+".join(map(str, sorted(masker)))
    return str(masker)


def parse_trace(text: str) -> list:
    """Parse a serialized trace into ``(kind, layer, node, value, extra)`` tuples."""
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split(" ", 4)
        kind, layer, node, value = parts[:4]
        extra = parts[4] if len(parts) > 4 else ""
        events.append(
            (
                kind,
                None if layer == "-" else int(layer),
                None if node == "-" else int(node),
                None if value == "-" else float(value),
                extra,
            )
        )
    return events


def auto_thresholds(d: int, n: int, c: float = 1.0) -> tuple:
    """Data-dependent ``omega = kappa = c (d^3 log d)^(1/4) [(d/(n log d))^2 + log d / sqrt n]^(1/4)``."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    ld = math.log(d)
    val = c * (d**3 * ld) ** 0.25 * ((d / (n * ld)) ** 2 + ld / math.sqrt(n)) ** 0.25
    return val, val


def tam_learn(src: InfoSource, cfg: TamConfig | None = None, n_samples: int | None = None) -> tuple:
    """Learn a DAG layer by layer. Returns ``(Dag, TamTrace)``.

    ``n_samples`` is only needed when ``cfg.auto_tune`` is set and the source
    carries no dataset.
    """
    cfg = cfg or TamConfig()
    d = src.d
    omega, kappa = cfg.omega, cfg.kappa
    if cfg.auto_tune:
        n = n_samples or getattr(getattr(src, "ds", None), "n", None)
        if n is None:
            raise ValueError("auto_tune needs a sample size")
        omega, kappa = auto_thresholds(max(d, 2), n, cfg.tune_constant)
    trace = TamTrace(omega=omega, kappa=kappa)
    placed: list = []
    parents: dict = {}
    tie_tol = EXACT_TIE_TOL if src.exact else -1.0
    j = 0
    while len(placed) < d:
        a = frozenset(placed)
        remaining = [k for k in range(d) if k not in a]
        rec = LayerRecord(index=j)
        if cfg.variant is Variant.NOPPS:
            for k in remaining:
                rec.entropies[k] = src.cond_entropy(k, a)
        else:
            for k in remaining:
                res = pps(src, k, a, kappa)
                rec.boundaries[k] = res.boundary
                rec.entropies[k] = res.cond_entropy
        tau = sorted(remaining, key=lambda k: (rec.entropies[k], k))
        rec.tau = tuple(tau)
        layer: list = []
        masked: set = set()
        queue = list(tau)
        while queue:
            h0 = rec.entropies[queue[0]]
            group = [queue[0]] + [k for k in queue[1:] if rec.entropies[k] - h0 <= tie_tol]
            layer.extend(group)
            for head in group:
                for k in queue:
                    if k in masked or k in layer:
                        continue
                    if cfg.variant is Variant.SIMPLE:
                        masker = head
                        val = src.cmi(k, head, rec.boundaries[k])
                    elif cfg.variant is Variant.GENERAL:
                        masker = frozenset(layer)
                        val = src.cmi(k, masker, a)
                    else:
                        masker = head
                        val = src.cmi(k, head, a)
                    rec.tests.append((k, masker, val))
                    if val >= omega:
                        masked.add(k)
                        rec.masks.append((k, masker, val))
                if cfg.variant is Variant.GENERAL:
                    break  # the whole-layer test already covered the group
            queue = [k for k in queue if k not in masked and k not in layer]
        for k in layer:
            if cfg.variant is Variant.NOPPS:
                rec.boundaries[k] = iamb_backward(src, k, a, kappa)
            parents[k] = rec.boundaries[k]
        rec.members = layer
        trace.layers.append(rec)
        placed.extend(layer)
        j += 1
    dag = Dag(d, frozenset((p, k) for k, ps in parents.items() for p in ps))
    return dag, trace

"""Markov boundary search: forward-greedy PPS and the IAMB backward phase."""

from __future__ import annotations

from dataclasses import dataclass

from .bn import _set
from .estimators import InfoSource


@dataclass(frozen=True)
class PpsResult:
    boundary: frozenset
    cond_entropy: float
    trace: tuple  # ((node, cmi at addition), ...) in addition order


def pps(src: InfoSource, k: int, a, kappa: float) -> PpsResult:
    """Possible-parent selection for node ``k`` within candidate set ``a``.

    Repeatedly adds the candidate with the largest ``I(X_l; X_k | m)`` while
    that value is strictly above ``kappa``; ties go to the smallest index.
    Returns the selected set and ``H(X_k | m)``.
    """
    cand = sorted(_set(a))
    if k in cand:
        raise ValueError("target must not be a candidate")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    m: list = []
    trace = []
    while True:
        best, best_val = None, -1.0
        for l in cand:
            if l in m:
                continue
            val = src.cmi(k, l, m)
            if val > best_val:
                best, best_val = l, val
        if best is None or not best_val > kappa:
            break
        m.append(best)
        trace.append((best, best_val))
    return PpsResult(frozenset(m), src.cond_entropy(k, m), tuple(trace))


def iamb_backward(src: InfoSource, k: int, a, kappa: float, mode: str = "fixpoint") -> frozenset:
    """Backward phase: drop members whose CMI with ``k`` given the rest is below ``kappa``.

    ``mode="fixpoint"`` removes one node at a time in ascending index order
    and rescans until a full pass removes nothing. ``mode="oneshot"``
    evaluates every member against the initial set and removes all failures
    at once.
    """
    m = set(_set(a))
    if k in m:
        raise ValueError("target must not be a candidate")
    if mode == "oneshot":
        drop = {l for l in sorted(m) if src.cmi(k, l, m - {l}) < kappa}
        return frozenset(m - drop)
    if mode != "fixpoint":
        raise ValueError(f"unknown mode {mode!r}")
    changed = True
    while changed:
        changed = False
        for l in sorted(m):
            if src.cmi(k, l, m - {l}) < kappa:
                m.discard(l)
                changed = True
    return frozenset(m)


def pps_then_backward(
    src: InfoSource, k: int, a, kappa: float, start: str = "pps", mode: str = "fixpoint"
) -> frozenset:
    """PPS followed by the backward phase.

    ``start="pps"`` prunes the PPS output; ``start="full"`` runs the backward
    phase from the whole candidate set (the no-PPS mode).
    """
    if start == "pps":
        seed = pps(src, k, a, kappa).boundary
    elif start == "full":
        seed = _set(a)
    else:
        raise ValueError(f"unknown start {start!r}")
    return iamb_backward(src, k, seed, kappa, mode)

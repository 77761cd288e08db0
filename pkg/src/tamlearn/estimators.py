"""Entropy / conditional mutual information estimators and information sources.

An information source answers ``entropy``, ``cond_entropy`` and ``cmi``
queries over node sets. :class:`ExactSource` wraps a :class:`JointDist`,
:class:`EmpiricalSource` wraps a :class:`Dataset` plus an estimator kind.
The learners in :mod:`tamlearn.mb` and :mod:`tamlearn.tam` only see this
interface, so they run unchanged at population and sample level.
"""

from __future__ import annotations

import enum
import io
import math
import os

import numpy as np

from . import _kernels
from .bn import JointDist, _mask, _set


class EstimatorKind(str, enum.Enum):
    PLUGIN = "plugin"
    MILLER_MADOW = "miller-madow"

    @classmethod
    def parse(cls, value) -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"plug-in": "plugin", "mm": "miller-madow", "millermadow": "miller-madow"}
        return cls(aliases.get(key, key))


class Dataset:
    """``n x d`` matrix of small non-negative integers with declared supports."""

    def __init__(self, values, supports=None):
        values = np.ascontiguousarray(values, dtype=np.int64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("dataset must be a non-empty 2-d array")
        if supports is None:
            supports = values.max(axis=0) + 1
        supports = tuple(int(k) for k in supports)
        if len(supports) != values.shape[1]:
            raise ValueError("one support size per column required")
        if values.min() < 0 or np.any(values.max(axis=0) >= np.asarray(supports)):
            raise ValueError("values must lie in [0, support) per column")
        values.setflags(write=False)
        self.values = values
        self.supports = supports

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# supports=" + ",".join(map(str, self.supports)) + "\n")
        buf.write(",".join(f"x{k}" for k in range(self.d)) + "\n")
        np.savetxt(buf, self.values, fmt="%d", delimiter=",")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, supports=None) -> "Dataset":
        lines = text.splitlines()
        start = 0
        if lines and lines[0].startswith("#"):
            head = lines[0].lstrip("#").strip()
            if head.startswith("supports="):
                supports = supports or tuple(int(x) for x in head[len("supports="):].split(","))
            start = 1
        if start < len(lines) and lines[start].strip() and not lines[start].strip()[0].isdigit():
            start += 1  # header row x0,x1,...
        body = "\n".join(ln for ln in lines[start:] if ln.strip())
        try:
            values = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.int64, ndmin=2)
        except ValueError as exc:
            raise ValueError(f"malformed dataset: {exc}") from None
        return cls(values, supports)

    @classmethod
    def load(cls, path) -> "Dataset":
        """Read a CSV; supports come from a ``# supports=`` line or ``<path>.supports``."""
        with open(path) as fh:
            text = fh.read()
        supports = None
        side = str(path) + ".supports"
        if os.path.exists(side):
            with open(side) as fh:
                supports = tuple(int(x) for x in fh.read().replace(",", " ").split())
        return cls.from_csv(text, supports)


def empirical_entropy(ds: Dataset, s, kind=EstimatorKind.MILLER_MADOW, backend: str | None = None) -> float:
    """Entropy estimate (nats) of the joint value of columns ``s``.

    Plug-in: ``-sum f log f`` over observed joint values. Miller-Madow adds
    ``(m - 1) / (2n)`` where ``m`` is the number of distinct observed values.
    """
    cols = sorted(_set(s))
    if not cols:
        return 0.0
    h, distinct = _kernels.plugin_entropy(ds.values, cols, [ds.supports[c] for c in cols], backend)
    if EstimatorKind.parse(kind) is EstimatorKind.MILLER_MADOW:
        h += (distinct - 1) / (2.0 * ds.n)
    return h


def cond_entropy_hat(ds: Dataset, k, a, kind=EstimatorKind.MILLER_MADOW) -> float:
    k, a = _set(k), _set(a)
    if k & a:
        raise ValueError("conditioning set overlaps target")
    return max(0.0, empirical_entropy(ds, k | a, kind) - empirical_entropy(ds, a, kind))


def cmi_hat(ds: Dataset, k, l, a, kind=EstimatorKind.MILLER_MADOW) -> float:
    k, l, a = _set(k), _set(l), _set(a)
    if k & l or k & a or l & a:
        raise ValueError("sets must be pairwise disjoint")
    h = lambda s: empirical_entropy(ds, s, kind)  # noqa: E731
    return max(0.0, (h(k | a) + h(l | a)) - h(k | l | a) - h(a))


def error_scale_delta(p: int, n: int) -> float:
    """Estimation error scale ``(2^p / (n p))^2 + p^2 / n`` with unit constant."""
    if p < 1 or n < 1:
        raise ValueError("p and n must be >= 1")
    return (2.0**p / (n * p)) ** 2 + p * p / n


class InfoSource:
    """Common query surface; subclasses provide ``_entropy_mask``."""

    exact = False

    def __init__(self, d: int):
        self.d = d
        self._cache: dict = {}

    def _entropy_mask(self, mask: int) -> float:
        raise NotImplementedError

    def _h(self, mask: int) -> float:
        h = self._cache.get(mask)
        if h is None:
            h = self._cache[mask] = self._entropy_mask(mask)
        return h

    def entropy(self, s) -> float:
        return self._h(_mask(_set(s)))

    def cond_entropy(self, k, a) -> float:
        k, a = _set(k), _set(a)
        if k & a:
            raise ValueError("conditioning set overlaps target")
        return max(0.0, self._h(_mask(k | a)) - self._h(_mask(a)))

    def cmi(self, k, l, a) -> float:
        """I(k; l | a), clamped at zero."""
        k, l, a = _set(k), _set(l), _set(a)
        if k & l or k & a or l & a:
            raise ValueError("sets must be pairwise disjoint")
        mk, ml, ma = _mask(k), _mask(l), _mask(a)
        val = (self._h(mk | ma) + self._h(ml | ma)) - self._h(mk | ml | ma) - self._h(ma)
        return max(0.0, val)


class ExactSource(InfoSource):
    exact = True

    def __init__(self, joint: JointDist):
        super().__init__(joint.d)
        self.joint = joint

    def _entropy_mask(self, mask: int) -> float:
        return self.joint.entropy_mask(mask)


class EmpiricalSource(InfoSource):
    def __init__(self, ds: Dataset, kind=EstimatorKind.MILLER_MADOW, backend: str | None = None):
        super().__init__(ds.d)
        self.ds = ds
        self.kind = EstimatorKind.parse(kind)
        self.backend = backend

    def _entropy_mask(self, mask: int) -> float:
        cols = [k for k in range(self.d) if mask >> k & 1]
        return empirical_entropy(self.ds, cols, self.kind, self.backend)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1 - p) * math.log(1 - p))

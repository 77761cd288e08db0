"""Hot numeric kernels: joint-value encoding, count entropy, forward sampling.

Each kernel has a pure-numpy implementation and a numba ``@njit`` twin.
The numba path is used when numba imports cleanly and the environment
variable ``TAMLEARN_NO_NUMBA`` is unset (or ``0``). Both paths return the
same integers; float results agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

_KEY_LIMIT = 1 << 62
# bincount is used instead of a sort when the key space is at most this size
_DENSE_LIMIT = 1 << 22


def _numba_disabled() -> bool:
    return os.environ.get("TAMLEARN_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


try:
    if _numba_disabled():
        raise ImportError("numba disabled by TAMLEARN_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path


def np_encode(values: np.ndarray, cols: np.ndarray, radices: np.ndarray) -> np.ndarray:
    """Mixed-radix key per row; the first listed column is the fastest digit."""
    keys = np.zeros(values.shape[0], dtype=np.int64)
    mult = 1
    for c, r in zip(cols, radices):
        keys += values[:, c].astype(np.int64) * mult
        mult *= int(r)
    return keys


def _entropy_from_counts(counts: np.ndarray, n: int) -> tuple[float, int]:
    # shared by both backends so they agree bit for bit
    c = counts.astype(np.float64)
    return float(np.log(n) - np.sum(c * np.log(c)) / n), int(counts.shape[0])


def np_count_entropy(keys: np.ndarray, space: int) -> tuple[float, int]:
    """Plug-in entropy (nats) and number of distinct keys."""
    if space <= _DENSE_LIMIT:
        counts = np.bincount(keys, minlength=space)
        counts = counts[counts > 0]
    else:
        counts = np.unique(keys, return_counts=True)[1]
    return _entropy_from_counts(counts, keys.shape[0])


def np_forward_sample(
    values: np.ndarray,
    node: int,
    parents: np.ndarray,
    parent_radices: np.ndarray,
    cumprobs: np.ndarray,
    u: np.ndarray,
) -> None:
    """Fill ``values[:, node]`` by inverse-CDF lookup in the node's cpt rows."""
    rows = np_encode(values, parents, parent_radices) if parents.size else np.zeros(values.shape[0], np.int64)
    k = cumprobs.shape[1]
    cum = cumprobs[rows, : k - 1]
    x = np.sum(cum <= u[:, None], axis=1)
    values[:, node] = np.minimum(x, k - 1)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_encode(values, cols, radices):
        n = values.shape[0]
        keys = np.zeros(n, dtype=np.int64)
        for i in range(n):
            key = 0
            mult = 1
            for j in range(cols.shape[0]):
                key += values[i, cols[j]] * mult
                mult *= radices[j]
            keys[i] = key
        return keys

    @njit(cache=True)
    def _nb_counts(keys, space, dense_limit):
        """Nonzero counts in ascending key order."""
        n = keys.shape[0]
        if space <= dense_limit:
            full = np.zeros(space, dtype=np.int64)
            for i in range(n):
                full[keys[i]] += 1
            m = 0
            for v in range(space):
                if full[v] > 0:
                    m += 1
            out = np.empty(m, dtype=np.int64)
            m = 0
            for v in range(space):
                if full[v] > 0:
                    out[m] = full[v]
                    m += 1
            return out
        s = np.sort(keys)
        out = np.empty(n, dtype=np.int64)
        m = 0
        run = 1
        for i in range(1, n + 1):
            if i < n and s[i] == s[i - 1]:
                run += 1
            else:
                out[m] = run
                m += 1
                run = 1
        return out[:m]

    @njit(cache=True)
    def _nb_forward_sample(values, node, parents, parent_radices, cumprobs, u):
        n = values.shape[0]
        k = cumprobs.shape[1]
        for i in range(n):
            row = 0
            mult = 1
            for j in range(parents.shape[0]):
                row += values[i, parents[j]] * mult
                mult *= parent_radices[j]
            x = 0
            for v in range(k - 1):
                if cumprobs[row, v] <= u[i]:
                    x += 1
            values[i, node] = x


def nb_encode(values, cols, radices):
    return _nb_encode(values, cols, radices)


def nb_count_entropy(keys, space):
    return _entropy_from_counts(_nb_counts(keys, space, _DENSE_LIMIT), keys.shape[0])


def nb_forward_sample(values, node, parents, parent_radices, cumprobs, u):
    _nb_forward_sample(values, node, parents, parent_radices, cumprobs, u)


# ---------------------------------------------------------------- dispatch


def _impls(backend: str | None):
    backend = backend or BACKEND
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return nb_encode, nb_count_entropy, nb_forward_sample
    if backend == "numpy":
        return np_encode, np_count_entropy, np_forward_sample
    raise ValueError(f"unknown backend {backend!r}")


def joint_keys(values: np.ndarray, cols, radices, backend: str | None = None) -> tuple[np.ndarray, int]:
    """Encode the joint value of ``cols`` per row as a dense int64 key.

    Returns ``(keys, space)`` with every key in ``[0, space)``. When the
    declared joint support would overflow int64 the columns are folded in
    chunks and re-densified with ``np.unique``.
    """
    encode, _, _ = _impls(backend)
    cols = np.asarray(cols, dtype=np.int64)
    radices = np.asarray(radices, dtype=np.int64)
    n = values.shape[0]
    if cols.size == 0:
        return np.zeros(n, dtype=np.int64), 1
    total = 1
    for r in radices:
        total *= int(r)
    if total < _KEY_LIMIT:
        return encode(values, cols, radices), total
    keys = np.zeros(n, dtype=np.int64)
    space = 1
    start = 0
    while start < cols.size:
        stop = start
        block = 1
        while stop < cols.size and space * block * int(radices[stop]) < _KEY_LIMIT:
            block *= int(radices[stop])
            stop += 1
        if stop == start:
            uniq, keys = np.unique(keys, return_inverse=True)
            keys = keys.astype(np.int64)
            space = int(uniq.shape[0])
            continue
        part = encode(values, cols[start:stop], radices[start:stop])
        keys = keys + part * space if space > 1 else part
        space *= block
        start = stop
    return keys, space


def plugin_entropy(values: np.ndarray, cols, radices, backend: str | None = None) -> tuple[float, int]:
    """Plug-in entropy of the joint column set and its observed distinct count."""
    if len(cols) == 0:
        return 0.0, 1
    keys, space = joint_keys(values, cols, radices, backend)
    _, count_entropy, _ = _impls(backend)
    return count_entropy(keys, space)


def forward_sample(values, node, parents, parent_radices, cumprobs, u, backend: str | None = None) -> None:
    _, _, sample = _impls(backend)
    sample(
        values,
        int(node),
        np.asarray(parents, dtype=np.int64),
        np.asarray(parent_radices, dtype=np.int64),
        np.ascontiguousarray(cumprobs, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64),
    )

"""Sweep harness: generate, simulate, learn and score, then aggregate results."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

from .bn import joint_table, sample
from .estimators import EmpiricalSource, EstimatorKind, ExactSource
from .graph import layer_decomposition, shd
from .synth import GraphKind, GraphSpec, ModelKind, ModelSpec, derive_seed
from .tam import TamConfig, Variant, tam_learn


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _list(value, conv) -> tuple:
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [s for s in str(value).replace(";", ",").split(",") if s.strip()]
    return tuple(conv(str(s).strip()) if isinstance(s, str) else conv(s) for s in items)


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


_FIELD_PARSERS = {
    "graphs": lambda v: _list(v, lambda s: GraphKind(s.lower()).value),
    "models": lambda v: _list(v, lambda s: ModelKind(s.lower()).value),
    "ds": lambda v: _list(v, int),
    "ns": lambda v: _list(v, int),
    "reps": int,
    "seed": int,
    "p": float,
    "omega": float,
    "kappa": float,
    "auto_tune": _bool,
    "tune_constant": float,
    "estimator": lambda v: EstimatorKind.parse(v).value,
    "variant": lambda v: Variant.parse(v).value,
    "edge_ratio": float,
    "sf_attach": int,
    "exact": _bool,
    "jobs": int,
}
_ALIASES = {"graph": "graphs", "model": "models", "d": "ds", "n": "ns", "replications": "reps", "N": "reps"}


@dataclass(frozen=True)
class ExperimentSpec:
    graphs: tuple = ("tree",)
    models: tuple = ("mod",)
    ds: tuple = (10,)
    ns: tuple = (1000, 2000, 3000, 4000)
    reps: int = 30
    seed: int = 0
    p: float = 0.2
    omega: float = 0.001
    kappa: float = 0.005
    auto_tune: bool = False
    tune_constant: float = 1.0
    estimator: str = EstimatorKind.MILLER_MADOW.value
    variant: str = Variant.SIMPLE.value
    edge_ratio: float = 1.0  # ER: expected edges per node
    sf_attach: int = 2
    exact: bool = False  # population source instead of samples
    jobs: int = 1

    def __post_init__(self):
        for name in ("graphs", "models", "ds", "ns"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if min(self.ds) < 1 or min(self.ns) < 1:
            raise ConfigError("d and n must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not 0 < self.p < 1:
            raise ConfigError("p must lie in (0, 1)")
        if self.omega < 0 or self.kappa < 0:
            raise ConfigError("thresholds must be non-negative")

    @classmethod
    def from_mapping(cls, values: dict, base: "ExperimentSpec | None" = None) -> "ExperimentSpec":
        parsed = {}
        for key, value in values.items():
            key = _ALIASES.get(key, key)
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                parsed[key] = _FIELD_PARSERS[key](value)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
        return replace(base or cls(), **parsed)

    @classmethod
    def from_config(cls, text: str, overrides: dict | None = None) -> "ExperimentSpec":
        """Config file values, then ``overrides`` on top (flags win)."""
        spec = cls.from_mapping(parse_kv(text))
        return cls.from_mapping(overrides or {}, spec)

    def cells(self):
        """Work items in canonical order."""
        for g in self.graphs:
            for m in self.models:
                for d in self.ds:
                    for n in self.ns:
                        for rep in range(self.reps):
                            yield g, m, d, n, rep


COLUMNS = (
    "graph", "model", "d", "n", "rep", "seed", "shd", "layer_acc",
    "omega", "kappa", "estimator", "variant", "runtime_ms", "error",
)
RUNTIME_COLUMNS = ("runtime_ms",)


@dataclass
class ResultRow:
    graph: str
    model: str
    d: int
    n: int
    rep: int
    seed: int
    shd: int | None
    layer_acc: float | None
    omega: float
    kappa: float
    estimator: str
    variant: str
    runtime_ms: float
    error: str = ""

    def to_fields(self) -> list:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(f"{v:.3f}" if name == "runtime_ms" else f"{v:.17g}")
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_fields(cls, rec: dict) -> "ResultRow":
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for name in COLUMNS:
            raw = rec.get(name, "")
            t = types[name]
            if name in ("shd",):
                kw[name] = int(raw) if raw != "" else None
            elif name in ("layer_acc",):
                kw[name] = float(raw) if raw != "" else None
            elif t in ("int", int):
                kw[name] = int(raw)
            elif t in ("float", float):
                kw[name] = float(raw)
            else:
                kw[name] = raw
        return cls(**kw)


def cell_seed(spec: ExperimentSpec, graph: str, model: str, d: int, rep: int) -> int:
    """Seed shared by every ``n`` of one replication, so sample sizes see the same graphs."""
    return derive_seed(spec.seed, graph, model, d, rep)


def run_cell(spec: ExperimentSpec, graph: str, model: str, d: int, n: int, rep: int) -> ResultRow:
    t0 = time.perf_counter()
    seed = cell_seed(spec, graph, model, d, rep)
    row = ResultRow(graph, model, d, n, rep, seed, None, None, spec.omega, spec.kappa,
                    spec.estimator, spec.variant, 0.0)
    try:
        edges = d * spec.edge_ratio if graph == GraphKind.ER.value else spec.sf_attach
        truth = GraphSpec(graph, d, edges, derive_seed(seed, "graph")).generate()
        bn = ModelSpec(model, spec.p).compile(truth)
        if spec.exact:
            src = ExactSource(joint_table(bn))
        else:
            ds = sample(bn, n, derive_seed(seed, "sample", n))
            src = EmpiricalSource(ds, spec.estimator)
        cfg = TamConfig(spec.omega, spec.kappa, spec.estimator, spec.variant,
                        spec.auto_tune, spec.tune_constant)
        learned, trace = tam_learn(src, cfg, n_samples=n)
        row.omega, row.kappa = trace.omega, trace.kappa
        row.shd = shd(learned, truth)
        true_layer = layer_decomposition(truth)
        assigned = trace.layer_assignment()
        row.layer_acc = sum(assigned.get(k) == true_layer.layer_of(k) for k in range(d)) / d
    except Exception as exc:  # noqa: BLE001  recorded as an error row
        row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    row.runtime_ms = (time.perf_counter() - t0) * 1000.0
    return row


def _run_star(args) -> ResultRow:
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec, jobs: int | None = None):
    """Yield one row per (cell, replication) in canonical order."""
    jobs = spec.jobs if jobs is None else jobs
    work = [(spec, *cell) for cell in spec.cells()]
    if jobs <= 1:
        for item in work:
            yield _run_star(item)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_star, work, chunksize=max(1, len(work) // (8 * jobs)))


def write_results(rows, fh, drop_runtime: bool = False) -> int:
    cols = [c for c in COLUMNS if not (drop_runtime and c in RUNTIME_COLUMNS)]
    keep = [i for i, c in enumerate(COLUMNS) if c in cols]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    count = 0
    for row in rows:
        f = row.to_fields()
        w.writerow([f[i] for i in keep])
        count += 1
    return count


def results_csv(rows, drop_runtime: bool = False) -> str:
    buf = io.StringIO()
    write_results(rows, buf, drop_runtime)
    return buf.getvalue()


def read_results(fh) -> list:
    reader = csv.DictReader(fh)
    missing = set(COLUMNS) - set(RUNTIME_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"results file lacks columns: {', '.join(sorted(missing))}")
    rows = []
    for rec in reader:
        rec.setdefault("runtime_ms", "0")
        try:
            rows.append(ResultRow.from_fields(rec))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed results row {reader.line_num}: {exc}") from None
    return rows


AGG_KEYS = ("graph", "model", "d", "n", "estimator", "variant")
AGG_COLUMNS = AGG_KEYS + ("count", "errors", "shd_mean", "shd_median", "shd_sd", "layer_acc_mean")


def aggregate(rows) -> list:
    """Per-cell mean/median/sd of SHD over successful replications, in first-seen order."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(getattr(r, k) for k in AGG_KEYS), []).append(r)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if not r.error]
        shds = [r.shd for r in ok]
        rec = dict(zip(AGG_KEYS, key))
        rec["count"] = len(ok)
        rec["errors"] = len(members) - len(ok)
        rec["shd_mean"] = statistics.fmean(shds) if shds else math.nan
        rec["shd_median"] = float(statistics.median(shds)) if shds else math.nan
        rec["shd_sd"] = statistics.stdev(shds) if len(shds) > 1 else 0.0 if shds else math.nan
        rec["layer_acc_mean"] = statistics.fmean(r.layer_acc for r in ok) if ok else math.nan
        out.append(rec)
    return out


def aggregate_csv(agg) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGG_COLUMNS)
    for rec in agg:
        w.writerow([f"{rec[c]:.17g}" if isinstance(rec[c], float) else rec[c] for c in AGG_COLUMNS])
    return buf.getvalue()


def monotone_violations(agg) -> list:
    """Series (graph, model, d, estimator, variant) whose mean SHD at the largest n exceeds that at the smallest."""
    series: dict = {}
    for rec in agg:
        key = (rec["graph"], rec["model"], rec["d"], rec["estimator"], rec["variant"])
        series.setdefault(key, []).append((rec["n"], rec["shd_mean"]))
    bad = []
    for key, pts in series.items():
        pts.sort()
        (n0, lo), (n1, hi) = pts[0], pts[-1]
        if not (hi <= lo):
            bad.append((key, n0, lo, n1, hi))
    return bad


def plot(agg, path) -> None:
    """SHD vs n, one panel per (graph, model), one line per d. Needs matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels: dict = {}
    for rec in agg:
        panels.setdefault((rec["graph"], rec["model"]), {}).setdefault(rec["d"], []).append(
            (rec["n"], rec["shd_mean"])
        )
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.2), squeeze=False)
    for ax, ((g, m), by_d) in zip(axes[0], panels.items()):
        for d, pts in sorted(by_d.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"d={d}")
        ax.set_title(f"{g}/{m}")
        ax.set_xlabel("n")
        ax.set_ylabel("mean SHD")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

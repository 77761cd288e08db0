"""``tamlearn`` command line: gen-graph, compile-model, sample, learn, verify, sweep, report."""

from __future__ import annotations

import argparse
import sys

from . import experiment as ex
from .bn import TabularBN, joint_table, sample
from .conditions import certified_thresholds, certify, compute_gaps
from .estimators import Dataset, EmpiricalSource, EstimatorKind, ExactSource
from .graph import Dag, shd
from .synth import GraphSpec, ModelSpec, fixture, random_cpts
from .tam import TamConfig, Variant, tam_learn

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_ASSERT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return ex.parse_kv(_read(path))
    except ex.ConfigError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _pick(flag, cfg: dict, key: str, default=None, conv=str):
    """Flag value if given, else config value, else default."""
    if flag is not None:
        return flag
    if key in cfg:
        try:
            return conv(cfg[key])
        except ValueError:
            raise UsageError(f"bad value for {key}: {cfg[key]!r}") from None
    return default


def _load_truth(path: str) -> Dag:
    text = _read(path)
    if text.lstrip().startswith("d="):
        return Dag.from_edge_list(text)
    return TabularBN.from_text(text).dag


def cmd_gen_graph(args) -> int:
    cfg = _config(args.config)
    kind = _pick(args.kind, cfg, "kind", "tree")
    d = _pick(args.d, cfg, "d", None, int)
    if d is None:
        raise UsageError("gen-graph needs --d (or d= in the config)")
    seed = _pick(args.seed, cfg, "seed", 0, int)
    default_edges = float(d) if kind.lower() == "er" else 2.0
    edges = _pick(args.edges, cfg, "edges", default_edges, float)
    try:
        spec = GraphSpec(kind, d, edges, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, spec.generate().to_edge_list())
    return EXIT_OK


def cmd_compile_model(args) -> int:
    if args.fixture:
        bn = fixture(args.fixture)
    else:
        if not args.graph:
            raise UsageError("compile-model needs --graph or --fixture")
        cfg = _config(args.config)
        dag = Dag.from_edge_list(_read(args.graph))
        model = _pick(args.model, cfg, "model", "mod")
        if model == "random":
            bn = random_cpts(dag, _pick(args.seed, cfg, "seed", 0, int))
        else:
            try:
                spec = ModelSpec(model, _pick(args.p, cfg, "p", 0.2, float))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            bn = spec.compile(dag)
    _write(args.output, bn.to_text())
    return EXIT_OK


def cmd_sample(args) -> int:
    bn = TabularBN.from_text(_read(args.bn))
    ds = sample(bn, args.n, args.seed, args.backend)
    _write(args.output, ds.to_csv())
    return EXIT_OK


def _tam_config(args) -> TamConfig:
    try:
        return TamConfig(args.omega, args.kappa, args.estimator, args.variant, args.auto_tune, args.tune_constant)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_learn(args) -> int:
    if bool(args.data) == bool(args.bn):
        raise UsageError("learn needs exactly one of --data or --bn")
    cfg = _tam_config(args)
    n = None
    if args.bn:
        bn = TabularBN.from_text(_read(args.bn))
        src = ExactSource(joint_table(bn))
        if args.certified:
            omega, kappa = certified_thresholds(compute_gaps(bn, src.joint))
            cfg = TamConfig(omega, kappa, cfg.estimator, cfg.variant)
    else:
        if args.certified:
            raise UsageError("--certified needs the exact source (--bn)")
        ds = Dataset.load(args.data) if args.data != "-" else Dataset.from_csv(sys.stdin.read())
        src = EmpiricalSource(ds, cfg.estimator, args.backend)
        n = ds.n
    dag, trace = tam_learn(src, cfg, n_samples=n)
    out = dag.to_edge_list()
    if args.truth:
        truth = _load_truth(args.truth)
        out += f"# shd={shd(dag, truth)}\n"
    _write(args.output, out)
    if args.trace:
        _write(args.trace, trace.to_text())
    return EXIT_OK


def cmd_verify(args) -> int:
    if bool(args.fixture) == bool(args.bn):
        raise UsageError("verify needs exactly one of --bn or --fixture")
    bn = fixture(args.fixture) if args.fixture else TabularBN.from_text(_read(args.bn))
    report = certify(bn, check_unequal=not args.skip_unequal)
    text = report.to_text()
    omega, kappa = certified_thresholds(report.gaps)
    text += f"certified_omega: {omega:.17g}\ncertified_kappa: {kappa:.17g}\n"
    _write(args.output, text)
    return EXIT_OK


_SWEEP_FLAGS = (
    "graphs", "models", "ds", "ns", "reps", "seed", "p", "omega", "kappa", "auto_tune",
    "tune_constant", "estimator", "variant", "edge_ratio", "sf_attach", "exact", "jobs",
)


def cmd_sweep(args) -> int:
    overrides = {k: getattr(args, k) for k in _SWEEP_FLAGS if getattr(args, k) is not None}
    text = _read(args.config) if args.config else ""
    try:
        spec = ex.ExperimentSpec.from_config(text, overrides)
    except ex.ConfigError as exc:
        raise UsageError(str(exc)) from None
    rows = ex.run_experiment(spec)
    if args.output in (None, "-"):
        ex.write_results(rows, sys.stdout, args.no_runtime)
    else:
        with open(args.output, "w", newline="") as fh:
            ex.write_results(rows, fh, args.no_runtime)
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.results, newline="") as fh:
        rows = ex.read_results(fh)
    agg = ex.aggregate(rows)
    _write(args.output, ex.aggregate_csv(agg))
    if args.plot:
        ex.plot(agg, args.plot)
    if args.assert_monotone:
        bad = ex.monotone_violations(agg)
        for key, n0, lo, n1, hi in bad:
            print(f"non-monotone {'/'.join(map(str, key))}: n={n0} mean={lo:.6g} > n={n1} mean={hi:.6g}",
                  file=sys.stderr)
        if bad:
            return EXIT_ASSERT
    return EXIT_OK


def _add_tam_flags(p) -> None:
    p.add_argument("--omega", type=float, default=0.001)
    p.add_argument("--kappa", type=float, default=0.005)
    p.add_argument("--estimator", default=EstimatorKind.MILLER_MADOW.value, choices=[e.value for e in EstimatorKind])
    p.add_argument("--variant", default=Variant.SIMPLE.value, choices=[v.value for v in Variant])
    p.add_argument("--auto-tune", action="store_true")
    p.add_argument("--tune-constant", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tamlearn", description="Discrete DAG learning by testing and masking.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="random DAG as an edge list")
    p.add_argument("--config")
    p.add_argument("--kind", choices=["tree", "er", "sf"])
    p.add_argument("--d", type=int)
    p.add_argument("--edges", type=float, help="ER expected edge count or SF attachment count")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("compile-model", help="tabular BN from a graph and a model, or a named fixture")
    p.add_argument("--graph")
    p.add_argument("--config")
    p.add_argument("--model", choices=["mod", "add", "random"])
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int, help="seed for --model random")
    p.add_argument("--fixture")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compile_model)

    p = sub.add_parser("sample", help="forward-sample a BN to CSV")
    p.add_argument("--bn", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["numba", "numpy"])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("learn", help="run TAM on data (or on a BN's exact joint)")
    p.add_argument("--data")
    p.add_argument("--bn", help="use the exact joint of this BN")
    p.add_argument("--certified", action="store_true", help="with --bn: use verifier-certified thresholds")
    p.add_argument("--truth", help="edge list or BN file; appends '# shd=N'")
    p.add_argument("--trace", help="write the trace log here")
    p.add_argument("--backend", choices=["numba", "numpy"])
    _add_tam_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("verify", help="certify identifiability conditions exactly")
    p.add_argument("--bn")
    p.add_argument("--fixture")
    p.add_argument("--skip-unequal", action="store_true", help="skip the ordering enumeration")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a simulation sweep to a results CSV")
    p.add_argument("--config")
    p.add_argument("--graphs")
    p.add_argument("--models")
    p.add_argument("--d", dest="ds")
    p.add_argument("--n", dest="ns")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--auto-tune", dest="auto_tune", action="store_const", const=True)
    p.add_argument("--tune-constant", type=float)
    p.add_argument("--estimator")
    p.add_argument("--variant")
    p.add_argument("--edge-ratio", type=float)
    p.add_argument("--sf-attach", type=int)
    p.add_argument("--exact", action="store_const", const=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-runtime", action="store_true", help="omit the wall-clock column")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a results CSV")
    p.add_argument("results")
    p.add_argument("--plot", help="write an SVG chart here")
    p.add_argument("--assert-monotone", action="store_true", help="exit 3 if mean SHD grows with n")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tamlearn {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"tamlearn {args.command}: {msg}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

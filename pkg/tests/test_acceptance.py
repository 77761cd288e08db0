"""Acceptance criteria, one test per criterion.

Each criterion is a plain function returning ``(passed, detail)`` so the
module can also run standalone: ``python3 tests/test_acceptance.py``.
Under pytest the PASS/FAIL lines are repeated in an "acceptance criteria"
section of the terminal summary.
"""

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from tamlearn import experiment as ex
from tamlearn.bn import cmi, cond_entropy, entropy, joint_table, markov_boundary_exact, minimal_imap, sample
from tamlearn.conditions import certified_thresholds, certify, check_pps_condition
from tamlearn.estimators import EstimatorKind, ExactSource, empirical_entropy
from tamlearn.graph import layer_decomposition, shd
from tamlearn.mb import iamb_backward, pps
from tamlearn.synth import (
    FIXTURES,
    compile_mod,
    derive_seed,
    fixture,
    gen_er,
    gen_polytree,
    make_rng,
    path_cancel,
    random_cpts,
)
from tamlearn.tam import TamConfig, tam_learn

pytestmark = pytest.mark.acceptance


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ------------------------------------------------------------------ 1

M1_PRINTED = [
    ("H(X1)", [0], [], 0.500),
    ("H(X2)", [1], [], 0.733),
    ("H(X3)", [2], [], 0.778),
    ("H(X2|X1)", [1], [0], 0.325),
    ("H(X3|X1)", [2], [0], 0.500),
    ("H(X4)", [3], [], 0.87),
    ("H(X4|X1)", [3], [0], 0.525),
    ("H(X4|X1,X2)", [3], [0, 1], 0.325),
]


def criterion_1():
    def run():
        p = joint_table(fixture("ExampleC3-M1"))
        return [(name, cond_entropy(p, k, a), ref) for name, k, a, ref in M1_PRINTED]

    vals, secs = _timed(run)
    misses = [f"{name}={v:.4f} vs {ref}" for name, v, ref in vals if abs(v - ref) > 2e-3]
    ok = not misses and secs < 1.0
    detail = f"{len(vals) - len(misses)}/{len(vals)} within 2e-3, {secs:.2f}s"
    return ok, detail + ("; off: " + ", ".join(misses) if misses else "")


# ------------------------------------------------------------------ 2, 8, 9

_ENSEMBLE = None


def certified_ensemble(size=100):
    """First ``size`` certified random positive BNs from a fixed candidate stream."""
    global _ENSEMBLE
    if _ENSEMBLE is None:
        out, i = [], 0
        while len(out) < size:
            d = 3 + i % 5
            seed = derive_seed(2024, "candidate", i)
            dag = gen_polytree(d, seed) if i % 2 == 0 else gen_er(d, d, seed)
            bn = random_cpts(dag, derive_seed(seed, "cpts"))
            i += 1
            p = joint_table(bn)
            report = certify(bn, p, check_unequal=False)
            if report.certified:
                out.append((bn, p, report))
        _ENSEMBLE = (out, i)
    return _ENSEMBLE


def criterion_2():
    def run():
        ens, tried = certified_ensemble()
        wrong = 0
        for bn, p, report in ens:
            omega, kappa = certified_thresholds(report.gaps)
            learned, _ = tam_learn(ExactSource(p), TamConfig(omega=omega, kappa=kappa))
            truth = minimal_imap(p, bn.dag.topological_order())
            wrong += shd(learned, truth) != 0
        return len(ens), tried, wrong

    (n, tried, wrong), secs = _timed(run)
    ok = n >= 100 and wrong == 0 and secs < 120
    return ok, f"{n - wrong}/{n} exact (certified from {tried} candidates), {secs:.1f}s"


def _boundary_checks(use_backward: bool):
    ens, _ = certified_ensemble()
    checked = bad = 0
    for bn, p, report in ens:
        src = ExactSource(p)
        kappa = certified_thresholds(report.gaps)[1]
        back_kappa = report.gaps.backward_gap / 2
        layers = layer_decomposition(bn.dag)
        for j in range(layers.depth):
            a = layers.ancestral_set(j)
            for k in sorted(set(range(bn.d)) - a):
                truth = markov_boundary_exact(p, k, a, warn=False)
                got = iamb_backward(src, k, a, back_kappa) if use_backward else pps(src, k, a, kappa).boundary
                checked += 1
                bad += got != truth
    return checked, bad


def criterion_8():
    (checked, bad), secs = _timed(lambda: _boundary_checks(False))
    return bad == 0 and secs < 120, f"pps = exact boundary at {checked - bad}/{checked} (k, A_j), {secs:.1f}s"


def criterion_9():
    (checked, bad), secs = _timed(lambda: _boundary_checks(True))
    return bad == 0, f"backward phase = exact boundary at {checked - bad}/{checked} (k, A_j), {secs:.1f}s"


# ------------------------------------------------------------------ 3


def criterion_3():
    def run():
        p = joint_table(fixture("ExampleC3-M2"))
        layers = [tam_learn(ExactSource(p), TamConfig(omega=1e-4, kappa=1e-4))[1].layer_assignment() for _ in range(2)]
        return layers

    (a, b), secs = _timed(run)
    ok = a == b and a[3] == 1 and secs < 1.0
    return ok, f"X4 placed in layer {a[3]}, deterministic={a == b}, {secs:.2f}s"


# ------------------------------------------------------------------ 4


def criterion_4(count=100):
    def run():
        pps_bad = cmi_bad = 0
        min_cmi = np.inf
        for i in range(count):
            d = 2 + i % 6
            seed = derive_seed(4, "polytree", i)
            q = 0.1 + 0.2 * make_rng(derive_seed(seed, "p")).random()
            bn = compile_mod(gen_polytree(d, seed), q)
            p = joint_table(bn)
            layers = layer_decomposition(bn.dag)
            for j in range(layers.depth):
                a = layers.ancestral_set(j)
                for k in set(range(d)) - a:
                    pps_bad += not check_pps_condition((bn.dag, p), k, a)[0]
            for k in range(d):
                for j in range(layers.layer_of(k) - 1):
                    a = layers.ancestral_set(j)
                    for i_anc in bn.dag.ancestors(k) & layers.layers[j]:
                        v = cmi(p, k, i_anc, a)
                        min_cmi = min(min_cmi, v)
                        cmi_bad += not v > 1e-9
        return pps_bad, cmi_bad, min_cmi

    (pps_bad, cmi_bad, min_cmi), secs = _timed(run)
    ok = pps_bad == 0 and cmi_bad == 0 and secs < 120
    return ok, (
        f"{count} polytrees: pps-condition failures {pps_bad}, ancestor CMI <= 1e-9: {cmi_bad} "
        f"(min {min_cmi:.3g}), {secs:.1f}s"
    )


# ------------------------------------------------------------------ 5


def criterion_5():
    def run():
        out = []
        for n in (2, 3, 4):
            bn = path_cancel(n)
            p = joint_table(bn)
            y = n + 1
            izy = cmi(p, 0, y, [])
            min_ixy = min(cmi(p, y, i, []) for i in range(1, y))
            picked = pps(ExactSource(p), y, set(range(y)), 1e-6).boundary
            out.append((n, izy, min_ixy, 0 in picked))
        return out

    rows, secs = _timed(run)
    ok = all(izy <= 1e-10 and mi > 1e-3 and not z for _, izy, mi, z in rows) and secs < 5
    parts = [f"n={n}: I(Z;Y)={izy:.1e} min I(Y;Xi)={mi:.4f} Z picked={z}" for n, izy, mi, z in rows]
    return ok, "; ".join(parts) + f", {secs:.2f}s"


# ------------------------------------------------------------------ 6

SAMPLE_SIZES = (10**3, 10**4, 10**5)


def criterion_6(seeds=11):
    """Series per (fixture, estimator): per-seed mean |error| over all node sets of size <= 3.

    The per-set series are reported too, but only as information; with 11
    seeds single sets can wobble between neighbouring sample sizes.
    """

    def run():
        series_bad, set_wobbles, too_large, n_sets = [], 0, [], 0
        for name in FIXTURES:
            bn = fixture(name)
            p = joint_table(bn)
            subsets = [s for r in (1, 2, 3) for s in itertools.combinations(range(bn.d), r)]
            exact = np.array([entropy(p, s) for s in subsets])
            # err[kind][n_index, seed, subset]
            err = {kind: np.zeros((len(SAMPLE_SIZES), seeds, len(subsets))) for kind in EstimatorKind}
            for seed in range(seeds):
                for ni, n in enumerate(SAMPLE_SIZES):
                    ds = sample(bn, n, derive_seed(6, name, seed, n))
                    for kind in EstimatorKind:
                        est = np.array([empirical_entropy(ds, s, kind) for s in subsets])
                        err[kind][ni, seed] = np.abs(est - exact)
            for kind in EstimatorKind:
                med = np.median(err[kind].mean(axis=2), axis=1)
                if not np.all(np.diff(med) < 0):
                    series_bad.append(f"{name}/{kind.value}: {np.round(med, 5).tolist()}")
                per_set = np.median(err[kind], axis=1)
                set_wobbles += int(np.sum(np.any(np.diff(per_set, axis=0) >= 0, axis=0)))
                n_sets += len(subsets)
                for si, s in enumerate(subsets):
                    if all(bn.supports[i] == 2 for i in s) and per_set[-1, si] > 0.01:
                        too_large.append(f"{name}/{kind.value}/{s}: {per_set[-1, si]:.4f}")
        return series_bad, set_wobbles, n_sets, too_large

    (bad, wobbles, n_sets, tl), secs = _timed(run)
    ok = not bad and not tl and secs < 300
    n_series = len(FIXTURES) * len(EstimatorKind)
    detail = (
        f"{n_series - len(bad)}/{n_series} (fixture, estimator) series strictly decreasing; "
        f"binary sets >0.01 at 1e5: {len(tl)}; per-set non-decreasing (info): {wobbles}/{n_sets}, {secs:.1f}s"
    )
    if bad or tl:
        detail += "; e.g. " + "; ".join((bad + tl)[:3])
    return ok, detail


# ------------------------------------------------------------------ 7


def criterion_7():
    spec = ex.ExperimentSpec(graphs=("tree",), models=("mod", "add"), ds=(10,), ns=(1000, 4000), reps=30, seed=0)
    rows, secs = _timed(lambda: list(ex.run_experiment(spec)))
    agg = {(r["model"], r["n"]): r for r in ex.aggregate(rows)}
    errors = sum(r["errors"] for r in agg.values())
    mean = {key: r["shd_mean"] for key, r in agg.items()}
    trend = all(mean[(m, 4000)] <= mean[(m, 1000)] for m in ("mod", "add"))
    small = mean[("mod", 4000)] <= 1.0
    ok = trend and small and errors == 0 and secs < 600
    detail = ", ".join(f"{m.upper()} n={n}: {mean[(m, n)]:.3f}" for m in ("mod", "add") for n in (1000, 4000))
    return ok, f"mean SHD {detail}; trend={trend}, MOD@4000<=1.0: {small}, {secs:.1f}s"


# ------------------------------------------------------------------ 10

SWEEP_CONFIG = "graphs=tree,er\nmodels=mod,add\nd=6\nn=500,1000\nreps=3\nseed=17\n"


def criterion_10(tmp_dir):
    cfg = tmp_dir / "sweep.cfg"
    cfg.write_text(SWEEP_CONFIG)

    def sweep(name, jobs):
        out = tmp_dir / name
        cmd = [sys.executable, "-m", "tamlearn.cli", "sweep", "--config", str(cfg), "--jobs", str(jobs),
               "--no-runtime", "-o", str(out)]
        subprocess.run(cmd, check=True, capture_output=True)
        return out.read_bytes()

    (a, b, c), secs = _timed(lambda: (sweep("a.csv", 1), sweep("b.csv", 1), sweep("c.csv", 4)))
    rows = a.count(b"\n") - 1
    ok = a == b == c and rows == 24
    return ok, f"{rows} rows; run1 == run2: {a == b}; 1 job == 4 jobs: {a == c}, {secs:.1f}s"


# ------------------------------------------------------------------ pytest entry points


def _check(record, number, title, result):
    ok, detail = result
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    record(line)
    assert ok, line


def test_criterion_01_exact_entropies(record):
    _check(record, 1, "exact entropy golden values", criterion_1())


def test_criterion_02_population_identifiability(record):
    _check(record, 2, "population identifiability", criterion_2())


def test_criterion_03_documented_failure(record):
    _check(record, 3, "M2 documented failure", criterion_3())


def test_criterion_04_polyforest(record):
    _check(record, 4, "polyforest properties", criterion_4())


def test_criterion_05_path_cancellation(record):
    _check(record, 5, "path cancellation", criterion_5())


@pytest.mark.slow
def test_criterion_06_estimator_consistency(record):
    _check(record, 6, "estimator consistency", criterion_6())


@pytest.mark.slow
def test_criterion_07_recovery_trend(record):
    _check(record, 7, "finite-sample recovery trend", criterion_7())


def test_criterion_08_boundary_oracle(record):
    _check(record, 8, "pps = exact Markov boundary", criterion_8())


def test_criterion_09_backward_phase(record):
    _check(record, 9, "backward phase correctness", criterion_9())


def test_criterion_10_determinism(record, tmp_path):
    _check(record, 10, "sweep determinism", criterion_10(tmp_path))


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
              criterion_8, criterion_9]
    for number, fn in enumerate(checks, 1):
        ok, detail = fn()
        failed += not ok
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    with tempfile.TemporaryDirectory() as tmp:
        ok, detail = criterion_10(Path(tmp))
    failed += not ok
    print(f"criterion 10 {'PASS' if ok else 'FAIL'}  {detail}")
    sys.exit(1 if failed else 0)

"""End-to-end acceptance checks at desk scale.

Each test logs one PASS/FAIL line through ``acceptance_log``; the lines are
printed in the terminal summary.  The shared d = 3 assets (2000 witnesses at
50 restarts, an extended kernel) are cached in the pytest cache directory,
keyed by their generation parameters, so later runs skip the generation.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from magic_simplex.criteria import (
    Criterion,
    e2_realignment,
    e3_quasipure,
    ppt_min_eigenvalues,
)
from magic_simplex.pipeline import (
    StateClass,
    classify_batch,
    compare_criteria,
    e5_orbit_scores,
    free_share,
    make_assets,
    orbit_audit,
    report_from_records,
)
from magic_simplex.sampling import Region, SampleSpec, sample, sample_family_a
from magic_simplex.separability import build_kernel, entanglement_flags, extend_kernel, line_kernel, load_kernel, save_kernel
from magic_simplex.symmetry import generate_group
from magic_simplex.weyl import maximally_mixed_coords, unit_coords
from magic_simplex.witness import (
    GENERATOR_VERSION,
    generate_witness_set,
    load_witnesses,
    optimize_bounds,
    random_product_overlaps,
    save_witnesses,
)

T0 = time.perf_counter()
WORKERS = os.cpu_count() or 1
W_COUNT, W_RESTARTS, W_SEED = 2000, 50, 7
K_CANDIDATES, K_SEED = 300, 1
N = 10_000

_conflicts: dict[str, int] = {}


def _record_conflicts(name, records):
    _conflicts[name] = sum(r.conflict for r in records)


@pytest.fixture(scope="session")
def asset_dir(request):
    return Path(request.config.cache.mkdir("magic_simplex_assets"))


def _cached(path: Path, build, save):
    if not path.is_file():
        tmp = path.with_suffix(".tmp")
        save(tmp, build())
        tmp.replace(path)
    return path


@pytest.fixture(scope="session")
def G3():
    return generate_group(3)


@pytest.fixture(scope="session")
def desk_kernel(asset_dir, G3):
    p = asset_dir / f"k3_extremal_{K_CANDIDATES}_{K_SEED}_{GENERATOR_VERSION}.json"
    _cached(p, lambda: build_kernel(3, G3, K_CANDIDATES, K_SEED, strategy="extremal"), save_kernel)
    return load_kernel(p)


@pytest.fixture(scope="session")
def desk_witnesses(asset_dir):
    p = asset_dir / f"w3_{W_COUNT}_{W_RESTARTS}_{W_SEED}_{GENERATOR_VERSION}.jsonl"
    _cached(p, lambda: generate_witness_set(W_COUNT, W_RESTARTS, W_SEED, d=3, workers=WORKERS), save_witnesses)
    return load_witnesses(p)


@pytest.fixture(scope="session")
def desk_assets(desk_kernel, desk_witnesses, G3):
    return make_assets(desk_kernel, desk_witnesses, G3)


@pytest.fixture(scope="session")
def enclosure_run(desk_assets):
    C = sample(SampleSpec(3, Region.ENCLOSURE, N, seed=0))
    records = classify_batch(C, desk_assets, evaluate_all=True, workers=WORKERS)
    _record_conflicts("d3 enclosure", records)
    return C, records


def test_criterion_1_group_order(acceptance_log):
    t = time.perf_counter()
    orders = {d: len(generate_group(d)) for d in (2, 3)}
    dt = time.perf_counter() - t
    ok = orders == {2: 24, 3: 432} and dt < 10
    acceptance_log(1, ok, f"|G| = {orders[2]} (d=2), {orders[3]} (d=3) in {dt:.2f} s")
    assert ok


def test_criterion_2_d2_simplex_volumes(acceptance_log):
    assets = make_assets(line_kernel(2), generate_witness_set(20, 50, seed=1, d=2))
    counts = []
    for seed in range(10):
        recs = classify_batch(sample(SampleSpec(2, Region.SIMPLEX, N, seed=seed)), assets)
        _record_conflicts(f"d2 run {seed}", recs)
        rep = report_from_records(recs, SampleSpec(2, Region.SIMPLEX, N, seed=seed))
        # at d = 2 every PPT state is certified separable by the line kernel
        assert rep.counts[StateClass.SEP] == rep.ppt_count
        counts.append(rep.ppt_count)
    counts = np.array(counts)
    mean, std = counts.mean() / N, counts.std(ddof=1)
    ok = 0.485 <= mean <= 0.515 and 30 <= std <= 90
    acceptance_log(2, ok, f"PPT=SEP mean {mean:.4f} (want [0.485, 0.515]), count std {std:.1f} (want [30, 90])")
    assert ok


def test_criterion_3_enclosure_free_share(acceptance_log):
    p, se, n = free_share(SampleSpec(3, Region.ENCLOSURE, N, seed=0))
    ok = n == N and abs(p - 0.400) <= 0.015
    acceptance_log(3, ok, f"FREE {p:.4f} +- {se:.4f} (want 0.400 +- 0.015)")
    assert ok


def test_criterion_4_family_a(acceptance_log, desk_assets):
    _, C = sample_family_a(SampleSpec(3, Region.FAMILY_A, N, seed=0))
    recs = classify_batch(C, desk_assets, evaluate_all=True, workers=WORKERS)
    _record_conflicts("family A", recs)
    rep = report_from_records(recs, SampleSpec(3, Region.FAMILY_A, N, seed=0))
    free = rep.frequencies[StateClass.FREE]
    bound = [r for r in recs if r.cls is StateClass.BOUND]
    by = {c: sum(r.detected(c) for r in bound) for c in (Criterion.E2, Criterion.E3, Criterion.E4, Criterion.E5)}
    share = len(bound) / N
    ok = abs(free - 0.817) <= 0.015 and by[Criterion.E3] == len(bound) and by[Criterion.E2] == by[Criterion.E4] == 0
    ok = ok and share <= 0.005
    acceptance_log(
        4,
        ok,
        f"FREE {free:.4f} (want 0.817 +- 0.015); BOUND {len(bound)} = {100 * share:.2f}% (want <= 0.5%), "
        f"E2/E3/E4/E5 {by[Criterion.E2]}/{by[Criterion.E3]}/{by[Criterion.E4]}/{by[Criterion.E5]}",
    )
    assert ok


def test_criterion_5_enclosure_classification(acceptance_log, enclosure_run, desk_assets, desk_kernel, G3):
    C, recs = enclosure_run
    rep = report_from_records(recs, SampleSpec(3, Region.ENCLOSURE, N, seed=0))
    f = rep.frequencies
    sep, bnd, unk, free = (f[k] for k in (StateClass.SEP, StateClass.BOUND, StateClass.PPT_UNKNOWN, StateClass.FREE))
    shares_ok = sep >= 0.40 and bnd >= 0.06 and unk <= 0.14 and abs(sep + bnd + unk - (1 - free)) < 1e-12
    sizes_ok = len(desk_assets.witnesses) >= 2000 and len(desk_kernel) >= 500

    ppt = np.array([r.cls is not StateClass.FREE for r in recs])
    is_sep = np.array([r.cls is StateClass.SEP for r in recs])

    # doubling the witness set: BOUND with the first half versus all of them
    open_rows = np.flatnonzero(ppt & ~is_sep)
    other = np.array([any(recs[i].detected(c) for c in (Criterion.E2, Criterion.E3, Criterion.E4)) for i in open_rows])
    half = desk_assets.witnesses.take(np.arange(len(desk_assets.witnesses) // 2))
    v_half = e5_orbit_scores(C[open_rows], half, G3.gather_indices)[0] > 0
    bound_half = int((other | v_half).sum())
    bound_full = rep.counts[StateClass.BOUND]

    # enlarging the kernel: line kernel, desk kernel, and the desk kernel
    # extended by further candidates
    line = line_kernel(3)
    sep_line = sum(
        r.cls is StateClass.SEP for r in classify_batch(C[ppt], make_assets(line, [], G3), workers=WORKERS)
    )
    bigger = extend_kernel(desk_kernel, 40, 11, G3, strategy="extremal")
    big_assets = make_assets(bigger, desk_assets.witnesses, G3)
    rng = np.random.default_rng(1)
    recheck = np.sort(np.concatenate([open_rows, rng.choice(np.flatnonzero(is_sep), 300, replace=False)]))
    again = classify_batch(C[recheck], big_assets, evaluate_all=True, workers=WORKERS)
    _record_conflicts("d3 enlarged kernel", again)
    lost = sum(is_sep[i] and r.cls is not StateClass.SEP for i, r in zip(recheck, again))
    gained = sum(not is_sep[i] and r.cls is StateClass.SEP for i, r in zip(recheck, again))
    mono_ok = bound_full >= bound_half and sep_line <= rep.counts[StateClass.SEP] and lost == 0

    ok = shares_ok and sizes_ok and mono_ok
    acceptance_log(
        5,
        ok,
        f"SEP {100 * sep:.1f}% (>=40) BOUND {100 * bnd:.1f}% (>=6) UNKNOWN {100 * unk:.1f}% (<=14) FREE {100 * free:.1f}%; "
        f"{len(desk_assets.witnesses)} witnesses, {len(desk_kernel)} vertices; "
        f"BOUND {bound_half} -> {bound_full} on doubling witnesses; SEP {sep_line} (lines) -> {rep.counts[StateClass.SEP]} "
        f"-> +{gained} -{lost} with {len(bigger)} vertices",
    )
    assert ok


def test_criterion_6_detector_relations(acceptance_log, enclosure_run):
    _, recs = enclosure_run
    table = compare_criteria(recs)
    n4, _, both42 = table[(Criterion.E4, Criterion.E2)]
    n3, _, both32 = table[(Criterion.E3, Criterion.E2)]
    frac_a = both42 / n4 if n4 else 1.0
    frac_b = (n3 - both32) / n3 if n3 else 0.0
    s2_not_s1 = sum(r.detected(Criterion.S2) and not r.detected(Criterion.S1) for r in recs)
    n_s2 = sum(r.detected(Criterion.S2) for r in recs)
    ok = frac_a >= 0.95 and frac_b >= 0.10 and s2_not_s1 == 0 and n_s2 > 0
    acceptance_log(
        6,
        ok,
        f"(a) E4 within E2 {both42}/{n4} = {100 * frac_a:.1f}% (>=95); (b) E3 exclusive {n3 - both32}/{n3} = "
        f"{100 * frac_b:.1f}% (>=10); (c) S2 without S1 {s2_not_s1} of {n_s2}",
    )
    assert ok


def test_criterion_7_unit_oracles(acceptance_log):
    p00, mm = unit_coords(0, 0, 3), maximally_mixed_coords(3)
    e3 = e3_quasipure(p00).score
    e2a, e2b = e2_realignment(p00).score, e2_realignment(mm).score
    alpha = brentq(lambda a: ppt_min_eigenvalues(a * p00 + (1 - a) * mm)[0], 0.1, 0.5, xtol=1e-14)
    lo, hi = optimize_bounds(p00, restarts=50, seed=0)
    checks = [
        abs(e3 - np.sqrt(1 / 3)) <= 1e-12,
        abs(e2a - 3) <= 1e-10,
        abs(e2b - 1 / 3) <= 1e-10,
        abs(alpha - 0.25) <= 1e-6,
        1e-6 <= 0 - lo <= 1e-4 and 1e-6 <= hi - 1 / 3 <= 1e-4,
    ]
    ok = all(checks)
    acceptance_log(
        7,
        ok,
        f"E3(P00) {e3:.15f}; E2 {e2a:.12f}, {e2b:.12f}; E1 boundary alpha {alpha:.10f}; witness e00 ({lo:.2e}, {hi - 1 / 3:+.2e})",
    )
    assert ok


def test_criterion_9_orbit_audit(acceptance_log, enclosure_run, desk_assets):
    _, recs = enclosure_run
    res = orbit_audit(recs, desk_assets, fraction=0.01, seed=0)
    ok = res.states == N // 100 and not res.conflicting
    acceptance_log(9, ok, f"{res.states} states, {res.elements} orbit elements classified, {len(res.conflicting)} conflicting")
    assert ok


def test_criterion_8_soundness(acceptance_log, enclosure_run, desk_assets, desk_kernel):
    # runs last: collects the conflict counts of every run above
    V = desk_kernel.vertices
    kernel_hits = int(entanglement_flags(V).sum())
    kernel_hits += int((desk_assets.witnesses.violations(V) > 0).any(axis=1).sum())
    pts = random_product_overlaps(np.random.default_rng([2024, 4]), N, 3)
    product_hits = int((desk_assets.witnesses.violations(pts) > 0).sum())
    conflicts = sum(_conflicts.values())
    elapsed = time.perf_counter() - T0
    ok = conflicts == 0 and kernel_hits == 0 and product_hits == 0 and len(_conflicts) >= 13 and elapsed <= 3600
    acceptance_log(
        8,
        ok,
        f"conflicts {conflicts} over {len(_conflicts)} runs; kernel vertex detections {kernel_hits} of {len(V)}; "
        f"witness violations by {N} product states {product_hits}; suite time {elapsed / 60:.1f} min on {WORKERS} cores",
    )
    assert ok

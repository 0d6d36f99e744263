import numpy as np
import pytest

from magic_simplex.criteria import (
    Criterion,
    CriterionVerdict,
    e1_margins,
    mub_set,
    mub_weights,
    quasipure_concurrence,
)
from magic_simplex.pipeline import (
    ClassificationRecord,
    ConsistencyError,
    MissingAsset,
    StateClass,
    VolumeReport,
    classify,
    classify_batch,
    compare_criteria,
    e3_orbit_scores,
    e4_orbit_scores,
    e5_orbit_scores,
    estimate_volumes,
    format_comparison,
    lattice_vs_random_study,
    load_assets,
    make_assets,
    orbit_audit,
    orbit_sizes,
    read_results,
    write_results,
)
from magic_simplex.sampling import Region, SampleSpec, sample
from magic_simplex.separability import build_kernel, line_kernel, save_kernel
from magic_simplex.symmetry import generate_group, orbit
from magic_simplex.weyl import maximally_mixed_coords, unit_coords
from magic_simplex.witness import Witness, WitnessArrays, generate_witness_set, save_witnesses


def projector_witnesses(d):
    # <Omega_kl| a (x) b |^2 over product vectors ranges over [0, 1/d]
    return [Witness(d, unit_coords(k, l, d), -1e-6, 1 / d + 1e-6, 1, 0, id=k * d + l) for k in range(d) for l in range(d)]


@pytest.fixture(scope="module")
def G3():
    return generate_group(3)


@pytest.fixture(scope="module")
def assets3(G3):
    kernel = build_kernel(3, G3, 20, seed=1, strategy="extremal")
    ws = projector_witnesses(3) + [
        Witness(w.d, w.kappa, w.lower, w.upper, w.restarts, w.seed, id=100 + w.id)
        for w in generate_witness_set(24, restarts=30, seed=2)
    ]
    return make_assets(kernel, ws, G3)


@pytest.fixture(scope="module")
def run3(assets3):
    C = sample(SampleSpec(3, Region.ENCLOSURE, 300, seed=9))
    return C, classify_batch(C, assets3, evaluate_all=True)


def test_reference_states(assets3):
    r = classify(unit_coords(0, 0, 3), assets3)
    assert r.cls is StateClass.FREE and r.detected(Criterion.E1)
    r = classify(maximally_mixed_coords(3), assets3, evaluate_all=True)
    assert r.cls is StateClass.SEP
    assert r.detected(Criterion.S1) and r.detected(Criterion.S2)
    assert not any(r.detected(c) for c in (Criterion.E1, Criterion.E2, Criterion.E3, Criterion.E4, Criterion.E5))
    assert r.orbit_size == 1


def test_early_exit_skips_later_criteria(assets3):
    r = classify(unit_coords(0, 0, 3), assets3)
    assert r.verdicts[Criterion.S1] is None and r.verdicts[Criterion.E5] is None
    r = classify(maximally_mixed_coords(3), assets3)
    assert r.verdicts[Criterion.S2].detected and r.verdicts[Criterion.S1] is None


def test_records_are_consistent(run3):
    C, recs = run3
    for r in recs:
        r.check()
        assert not r.conflict
        assert (r.cls is StateClass.FREE) == (e1_margins(r.coords)[0] > 0)
    assert {r.cls for r in recs} >= {StateClass.FREE, StateClass.SEP}


def test_check_rejects_wrong_label():
    v = {c: None for c in Criterion}
    v[Criterion.E1] = CriterionVerdict(Criterion.E1, True, -0.1, 0.1)
    r = ClassificationRecord(0, maximally_mixed_coords(3), StateClass.SEP, v)
    with pytest.raises(ConsistencyError):
        r.check()


def test_classification_is_deterministic(assets3, run3):
    C, recs = run3
    again = classify_batch(C[:80], assets3, evaluate_all=True, workers=2)
    for a, b in zip(recs, again):
        assert a.cls is b.cls and a.witness_id == b.witness_id


def test_orbit_scores_match_brute_force(assets3, G3):
    # maxima over the explicit list of images
    rng = np.random.default_rng(4)
    C = rng.dirichlet(np.ones(9) * 0.5, size=6)
    best, arg = e3_orbit_scores(C, G3.gather_indices)
    m = mub_set(3)
    b4, _ = e4_orbit_scores(C, m, G3.gather_indices)
    wa = assets3.witnesses
    b5, wj, gj = e5_orbit_scores(C, wa, G3.gather_indices)
    for i, c in enumerate(C):
        imgs = G3.images(c)
        q = quasipure_concurrence(imgs)
        assert np.isclose(best[i], q.max(), atol=1e-12)
        assert np.isclose(q[arg[i]], best[i], atol=1e-12)
        assert np.isclose(b4[i], (imgs @ mub_weights(m)).max(), atol=1e-12)
        viol = np.maximum(wa.lower[None] - imgs @ wa.kappa.T, imgs @ wa.kappa.T - wa.upper[None])
        assert np.isclose(b5[i], viol.max(), atol=1e-12)
        assert np.isclose(viol[gj[i], wj[i]], b5[i], atol=1e-12)


def test_orbit_sizes_match_enumeration(G3):
    C = np.vstack(
        [maximally_mixed_coords(3), unit_coords(1, 2, 3), np.random.default_rng(1).dirichlet(np.ones(9)), line_kernel(3).vertices[0]]
    )
    assert list(orbit_sizes(C, G3)) == [len(orbit(c, G3)) for c in C]


def test_orbit_evaluation_finds_more(assets3, run3):
    C, recs = run3
    flat = classify_batch(C, assets3, evaluate_all=True, use_orbit=False)
    for a, b in zip(recs, flat):
        for c in (Criterion.E3, Criterion.E4, Criterion.E5):
            assert a.verdicts[c].score >= b.verdicts[c].score - 1e-12


def test_ppt_status_constant_on_orbits(run3, G3):
    C, _ = run3
    for c in C[:40]:
        flags = e1_margins(G3.images(c)) > 0
        assert flags.all() or not flags.any()


def test_orbit_audit(assets3, run3):
    _, recs = run3
    res = orbit_audit(recs, assets3, fraction=0.02, seed=1)
    assert res.states == 6 and res.elements >= 6
    assert res.conflicting == ()


def test_volume_report():
    counts = {StateClass.SEP: 50, StateClass.BOUND: 10, StateClass.FREE: 30, StateClass.PPT_UNKNOWN: 10}
    r = VolumeReport("enclosure", 3, 100, counts, 0)
    assert r.frequencies[StateClass.FREE] == 0.3
    assert np.isclose(r.standard_errors[StateClass.FREE], np.sqrt(0.3 * 0.7 / 100))
    assert r.ppt_count == 70
    assert np.isclose(r.ppt_shares[StateClass.SEP], 50 / 70)
    assert StateClass.FREE not in r.ppt_shares
    assert "FREE" in r.summary() and r.to_dict()["counts"]["SEP"] == 50
    with pytest.raises(ValueError):
        VolumeReport("enclosure", 3, 99, counts, 0)


def test_estimate_volumes_counts(assets3):
    rep, recs = estimate_volumes(SampleSpec(3, Region.ENCLOSURE, 60, seed=3), assets3)
    assert rep.n == 60 == len(recs)
    assert sum(rep.counts.values()) == 60
    assert rep.fingerprints["kernel"] == assets3.fingerprints["kernel"]


def test_compare_criteria(run3):
    _, recs = run3
    table = compare_criteria(recs)
    bound = [r for r in recs if r.cls is StateClass.BOUND]
    n2 = sum(r.detected(Criterion.E2) for r in bound)
    assert table[(Criterion.E2, Criterion.E2)] == (n2, n2, n2)
    for (a, b), (na, nb, both) in table.items():
        assert both <= min(na, nb)
        assert table[(b, a)] == (nb, na, both)
    assert format_comparison(table).count("\n") == 17


def test_compare_needs_all_verdicts(assets3):
    C = sample(SampleSpec(3, Region.ENCLOSURE, 200, seed=9))
    recs = classify_batch(C, assets3)
    assert any(r.cls is StateClass.BOUND for r in recs)
    with pytest.raises(ValueError):
        compare_criteria(recs)


def test_results_round_trip(tmp_path, run3):
    _, recs = run3
    p = tmp_path / "r.csv"
    write_results(p, recs, 3, {"seed": "9", "fingerprint_kernel": "abc"})
    meta, back = read_results(p)
    assert meta["seed"] == "9" and meta["fingerprint_kernel"] == "abc"
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert np.array_equal(a.coords, b.coords)
        assert a.cls is b.cls and a.witness_id == b.witness_id and a.orbit_size == b.orbit_size
        for c in Criterion:
            va, vb = a.verdicts[c], b.verdicts[c]
            assert (va is None) == (vb is None)
            if va is not None:
                assert va.detected == vb.detected and va.score == vb.score and va.margin == vb.margin
    assert compare_criteria(back) == compare_criteria(recs)


def test_missing_assets(tmp_path):
    k = tmp_path / "k.json"
    save_kernel(k, line_kernel(3))
    with pytest.raises(MissingAsset, match="witness"):
        load_assets(3, None, k)
    with pytest.raises(MissingAsset, match="nothere"):
        load_assets(3, tmp_path / "nothere.jsonl", k)
    with pytest.raises(MissingAsset):
        make_assets(line_kernel(3), None)


def test_load_assets(tmp_path):
    k, w = tmp_path / "k.json", tmp_path / "w.jsonl"
    save_kernel(k, line_kernel(3))
    save_witnesses(w, projector_witnesses(3))
    a = load_assets(3, w, k)
    assert len(a.witnesses) == 9 and len(a.kernel) == 12
    assert set(a.fingerprints) == {"kernel", "witnesses"}
    with pytest.raises(ValueError):
        load_assets(2, w, k)


def test_d2_assets_without_mubs():
    a = make_assets(line_kernel(2), projector_witnesses(2))
    assert a.mubs is None
    C = sample(SampleSpec(2, Region.SIMPLEX, 200, seed=0))
    recs = classify_batch(C, a, evaluate_all=True)
    # at d = 2 the line kernel is the whole PPT set
    assert {r.cls for r in recs} <= {StateClass.FREE, StateClass.SEP}
    assert all(r.verdicts[Criterion.E4] is None for r in recs)


def test_empty_witness_set(assets3):
    a = make_assets(assets3.kernel, WitnessArrays.from_witnesses([]), assets3.group)
    r = classify(unit_coords(0, 0, 3), a, evaluate_all=True)
    assert not r.detected(Criterion.E5) and r.verdicts[Criterion.E5].info["empty_witness_set"]


def test_lattice_study_d2():
    rows = lattice_vs_random_study(2, [2, 4], seed=0)
    assert [r["n"] for r in rows] == [10, 35]
    # lattice at steps=2 over [0,1]: the 4 vertices are the only NPT nodes
    assert np.isclose(rows[0]["lattice_free"], 4 / 10)
    for r in rows:
        assert 0 <= r["random_free"] <= 1 and r["random_se"] > 0
    with pytest.raises(ValueError):
        lattice_vs_random_study(5, [1])

"""Acceptance suite: one test per release criterion, each printing a
PASS line with its headline numbers when it holds.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""
import json
import math
import struct
import time
from pathlib import Path

import numpy as np
import pytest

from gmixer.cli import main
from gmixer.errors import BundleDataError, BundleFormatError
from gmixer.expansion import RetrievalConfig, build_grid, expand
from gmixer.geometry import THETA_MIN, angle_between, slerp
from gmixer.metrics import GroundTruth, map_at_k, recall_at_k, subset_recall_at_k
from gmixer.rerank import DeltaVariant, QueryInstance, delta, rerank
from gmixer.store import EmbeddingStore, load_bundle, write_bundle
from gmixer.synth import SynthSpec, generate

from helpers import random_unit, random_unit_rows
from reference_impl import (
    ref_delta_default,
    ref_delta_ex,
    ref_delta_in,
    ref_pipeline,
)


def _report(name, detail=""):
    print(f"PASS: {name}" + (f" ({detail})" if detail else ""))


def test_slerp_geometry_suite():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    lambdas = [0.0, 0.25, 0.5, 0.7, 1.0]
    checked = 0
    for dim in (8, 64, 512):
        for _ in range(1000):
            ft, fi = random_unit(rng, dim), random_unit(rng, dim)
            theta = angle_between(ft, fi)
            if not (THETA_MIN < theta < math.pi - THETA_MIN):
                continue
            basis = np.linalg.qr(np.stack([ft, fi], axis=1))[0]
            for lam in lambdas:
                m = slerp(ft, fi, lam)
                assert abs(np.linalg.norm(m) - 1.0) < 1e-5
                assert abs(angle_between(fi, m) - lam * theta) < 1e-5
                assert np.linalg.norm(m - basis @ (basis.T @ m)) < 1e-6
            np.testing.assert_allclose(slerp(ft, fi, 0.0), fi, atol=1e-6)
            np.testing.assert_allclose(slerp(ft, fi, 1.0), ft, atol=1e-6)
            checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"geometry suite took {elapsed:.1f}s"
    _report("slerp geometry suite", f"{checked} pairs x 5 ratios, {elapsed:.2f}s")


def test_oracle_equivalence():
    start = time.monotonic()
    rng = np.random.default_rng(777)
    for instance in range(200):
        dim = int(rng.integers(4, 17))
        n = int(rng.integers(8, 51))
        k = int(rng.integers(2, 9))
        n_ratios = int(rng.integers(1, 5))
        grid_step = 0.1
        grid_start = round(1.0 - grid_step * (n_ratios - 1), 6)
        rows = random_unit_rows(rng, n, dim)
        # duplicate some vectors so tie-breaking is exercised
        if n >= 6 and instance % 3 == 0:
            rows[4] = rows[1]
            rows[5] = rows[1]
        ids = [f"v{i}" for i in range(n)]
        store = EmbeddingStore(ids, rows)
        ft, fi = random_unit(rng, dim), random_unit(rng, dim)
        mod_text = random_unit(rng, dim)
        include = random_unit(rng, dim)
        exclude = random_unit(rng, dim)

        cfg = RetrievalConfig(
            grid_start=grid_start, grid_end=1.0, grid_step=grid_step, k_per_lambda=k
        )
        cset = expand(ft, fi, store, cfg)
        query = QueryInstance(
            query_id="q", ref_embedding=fi, mod_text_embedding=mod_text,
            target_desc_embedding=ft, include_embedding=include, exclude_embedding=exclude,
        )
        got = rerank(cset, query, store)
        want = ref_pipeline(
            ft.tolist(), fi.tolist(), mod_text.tolist(), include.tolist(),
            exclude.tolist(), ids, rows.tolist(), cfg.grid(), k,
        )
        assert [r.id for r in got] == [w[0] for w in want], f"instance {instance}"
        for r, (wid, wscore) in zip(got, want):
            assert abs(r.final_score - wscore) < 1e-9, f"instance {instance} id {wid}"
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"oracle equivalence took {elapsed:.1f}s"
    _report("oracle equivalence", f"200 instances, {elapsed:.2f}s")


def test_union_superset_invariants():
    rng = np.random.default_rng(99)
    # small randomized instances
    for _ in range(30):
        dim = 8
        n = int(rng.integers(20, 60))
        store = EmbeddingStore([f"v{i}" for i in range(n)], random_unit_rows(rng, n, dim))
        ft, fi = random_unit(rng, dim), random_unit(rng, dim)
        cfg = RetrievalConfig(grid_start=0.6, grid_end=1.0, grid_step=0.2, k_per_lambda=7)
        cset = expand(ft, fi, store, cfg)
        ids = set(cset.ids())
        for lam in cfg.grid():
            for h in store.top_k(slerp(ft, fi, lam), 7):
                assert h.id in ids
        assert len(cset.hits) <= len(cfg.grid()) * 7

    # the reference setup: 4 ratios x top-100 over a 1000-vector corpus
    store = EmbeddingStore(
        [f"img{i}" for i in range(1000)], random_unit_rows(rng, 1000, 32)
    )
    ft, fi = random_unit(rng, 32), random_unit(rng, 32)
    cfg = RetrievalConfig(grid_start=0.7, grid_end=1.0, grid_step=0.1, k_per_lambda=100)
    cset = expand(ft, fi, store, cfg)
    assert len(cfg.grid()) == 4
    assert len(cset.hits) <= 400
    _report("union/superset invariants", f"N=4 K=100 gave {len(cset.hits)} <= 400 candidates")


DELTA_TABLE = [
    # (s_lambda, s_in, s_ex)
    (0.8, 0.9, 0.5), (0.8, 0.6, 0.9), (0.5, 0.5, 0.5), (0.0, 1.0, -1.0),
    (1.0, -1.0, 1.0), (0.3, 0.2, 0.1), (0.9, 0.95, 0.85), (0.1, -0.5, 0.5),
    (0.7, 0.7, 0.7), (0.6, 1.0, 0.0), (0.4, 0.0, 1.0), (0.25, 0.75, -0.75),
    (0.99, 0.5, 0.5), (0.0, 0.0, 0.0), (1.0, 1.0, -1.0), (0.33, -0.33, 0.66),
    (0.85, 0.15, 0.95), (0.5, 0.9, 0.9), (0.2, 0.8, 0.3), (0.75, 0.25, 0.25),
]


def test_delta_variant_correctness():
    relu = lambda x: max(0.0, x)
    for s, i, e in DELTA_TABLE:
        assert delta(s, i, e, DeltaVariant.DEFAULT) == relu(s - e) - relu(s - i)
        assert delta(s, i, e, DeltaVariant.IN_VARIANT) == relu(s - e) + relu(i - s)
        assert delta(s, i, e, DeltaVariant.EX_VARIANT) == -relu(e - s) - relu(s - i)
        assert delta(s, i, e, DeltaVariant.OFF) == 0.0
        # cross-check against the independent reference forms
        assert delta(s, i, e, DeltaVariant.DEFAULT) == ref_delta_default(s, i, e)
        assert delta(s, i, e, DeltaVariant.IN_VARIANT) == ref_delta_in(s, i, e)
        assert delta(s, i, e, DeltaVariant.EX_VARIANT) == ref_delta_ex(s, i, e)

    rng = np.random.default_rng(5)
    for _ in range(1000):
        s, i, e = rng.uniform(-1, 1, 3)
        assert delta(s, i, e, DeltaVariant.DEFAULT) == pytest.approx(
            -delta(s, e, i, DeltaVariant.DEFAULT), abs=1e-12
        )
    _report("delta variant correctness", "20-case table exact + 1000 antisymmetry checks")


def test_metric_fixtures():
    g = lambda t, s=None: GroundTruth("q", frozenset(t), frozenset(s) if s else None)
    assert recall_at_k(["a", "b", "c"], g({"c"}), 3) == 1.0
    assert recall_at_k(["a", "b", "c"], g({"c"}), 2) == 0.0
    assert map_at_k(["t1", "x", "t2"], g({"t1", "t2"}), 3) == pytest.approx(5.0 / 6.0)
    assert map_at_k(["x", "y"], g({"t"}), 2) == 0.0
    assert map_at_k(["t1", "t2", "x"], g({"t1", "t2"}), 3) == 1.0
    assert subset_recall_at_k(["a", "t", "b", "c"], g({"t"}, {"t", "b", "c"}), 1) == 1.0
    assert subset_recall_at_k(["a", "t", "b"], g({"t"}, {"a", "b"}), 3) == 0.0
    ranking = ["a", "b", "t", "c"]
    full = g({"t"}, {"a", "b", "t", "c"})
    for k in (1, 2, 3, 4):
        assert subset_recall_at_k(ranking, full, k) == recall_at_k(ranking, full, k)

    rng = np.random.default_rng(17)
    ids = [f"d{i}" for i in range(40)]
    for _ in range(500):
        ranking = list(rng.permutation(ids))
        n_targets = int(rng.integers(1, 4))
        targets = set(rng.choice(ids, size=n_targets, replace=False))
        gt = GroundTruth("q", frozenset(targets))
        prev_r, prev_m = 0.0, 0.0
        for k in range(1, 41):
            r = recall_at_k(ranking, gt, k)
            m = map_at_k(ranking, gt, k)
            assert r >= prev_r
            if k > n_targets:  # AP denominator min(|targets|, k) fixed from here
                assert m >= prev_m - 1e-12
            prev_r, prev_m = r, m
    _report("metric fixtures", "hand-computed fixtures exact, 500 monotonicity rankings")


def _candidate_hit_rate(queries, gt, images, texts, cfg):
    hits = 0
    for rec in queries:
        f_t = texts["target_desc"].vector(rec["target_desc_id"])
        f_i = images.vector(rec["reference_id"])
        cset = expand(f_t, f_i, images, cfg)
        target = gt[rec["query_id"]]["targets"][0]
        hits += target in set(cset.ids())
    return hits / len(queries)


def _final_recall10(queries, gt, images, texts, cfg, variant):
    hits = 0
    for rec in queries:
        f_t = texts["target_desc"].vector(rec["target_desc_id"])
        f_i = images.vector(rec["reference_id"])
        cset = expand(f_t, f_i, images, cfg)
        query = QueryInstance(
            query_id=rec["query_id"],
            ref_embedding=f_i,
            mod_text_embedding=texts["mod_text"].vector(rec["mod_text_id"]),
            target_desc_embedding=f_t,
            include_embedding=texts["include"].vector(rec["include_id"]),
            exclude_embedding=texts["exclude"].vector(rec["exclude_id"]),
        )
        ranked = rerank(cset, query, images, variant=variant)
        target = gt[rec["query_id"]]["targets"][0]
        hits += target in [r.id for r in ranked[:10]]
    return hits / len(queries)


def test_range_grid_beats_fixed_ratio(tmp_path):
    start = time.monotonic()
    range_cfg = RetrievalConfig(grid_start=0.7, grid_end=1.0, grid_step=0.05, k_per_lambda=100)
    fixed_lambdas = [0.7, 0.8, 0.9, 1.0]
    range_recalls, baseline_recalls = [], []
    for seed in range(5):
        spec = SynthSpec(dim=64, n_images=500, n_queries=200, noise_sigma=0.05,
                         planted_lambda_low=0.65, planted_lambda_high=0.95, seed=seed)
        paths = generate(spec, tmp_path / f"seed{seed}")
        images = load_bundle(paths.image_bundle)
        texts = {r: load_bundle(p) for r, p in paths.text_bundles.items()}
        gt = json.loads(Path(paths.ground_truth).read_text())
        queries = [json.loads(l) for l in Path(paths.queries).read_text().splitlines()]

        # (a) candidate-set hit rate: range grid must dominate every fixed ratio
        range_rate = _candidate_hit_rate(queries, gt, images, texts, range_cfg)
        for lam in fixed_lambdas:
            fixed_cfg = RetrievalConfig(grid_start=lam, grid_end=lam, grid_step=0.05,
                                        k_per_lambda=100)
            fixed_rate = _candidate_hit_rate(queries, gt, images, texts, fixed_cfg)
            assert range_rate >= fixed_rate, (seed, lam, range_rate, fixed_rate)

        # (b) end-to-end recall@10: full pipeline vs text-only ratio with delta off
        range_recalls.append(
            _final_recall10(queries, gt, images, texts, range_cfg, DeltaVariant.DEFAULT)
        )
        baseline_cfg = RetrievalConfig(grid_start=1.0, grid_end=1.0, grid_step=0.05,
                                       k_per_lambda=100)
        baseline_recalls.append(
            _final_recall10(queries, gt, images, texts, baseline_cfg, DeltaVariant.OFF)
        )

    full = float(np.mean(range_recalls))
    base = float(np.mean(baseline_recalls))
    elapsed = time.monotonic() - start
    assert full - base >= 0.05, f"margin {full - base:.3f} below 5 points"
    assert elapsed < 120.0, f"took {elapsed:.1f}s"
    _report(
        "range grid vs fixed ratio",
        f"recall@10 {full:.3f} vs {base:.3f} (margin {100 * (full - base):.1f} pts, {elapsed:.1f}s)",
    )


def test_end_to_end_determinism(tmp_path):
    spec = SynthSpec(dim=32, n_images=150, n_queries=20, noise_sigma=0.02, seed=42,
                     queries_per_group=10, decoys_per_group=8)
    paths = generate(spec, tmp_path)
    manifest = json.loads(Path(paths.manifest).read_text())
    files = {}
    for run in ("one", "two"):
        m = dict(manifest)
        m["output"] = str(tmp_path / f"rank_{run}.jsonl")
        m["report"] = str(tmp_path / f"report_{run}.json")
        mp = tmp_path / f"manifest_{run}.json"
        mp.write_text(json.dumps(m))
        assert main(["run", str(mp)]) == 0
        files[run] = (Path(m["output"]).read_bytes(), Path(m["report"]).read_bytes())
    assert files["one"] == files["two"]
    _report("end-to-end determinism", "rankings and reports byte-identical")


def test_format_robustness(tmp_path):
    rng = np.random.default_rng(13)
    rows = random_unit_rows(rng, 4, 8)
    good = tmp_path / "good.gmxb"
    write_bundle(good, ["a", "b", "c", "d"], rows)
    raw = good.read_bytes()

    fixtures = {}
    fixtures["bad magic"] = (b"XXXX" + raw[4:], BundleFormatError)
    fixtures["bad version"] = (raw[:4] + struct.pack("<I", 99) + raw[8:], BundleFormatError)
    fixtures["truncation"] = (raw[:12] + struct.pack("<Q", 9) + raw[20:], BundleFormatError)

    nan_rows = rows.copy()
    nan_rows[2, 0] = np.nan
    nan_path = tmp_path / "nan.gmxb"
    write_bundle(nan_path, ["a", "b", "c", "d"], nan_rows)
    fixtures["NaN vector"] = (nan_path.read_bytes(), BundleDataError)

    zero_rows = rows.copy()
    zero_rows[1] = 0.0
    zero_path = tmp_path / "zero.gmxb"
    write_bundle(zero_path, ["a", "b", "c", "d"], zero_rows)
    fixtures["zero vector"] = (zero_path.read_bytes(), BundleDataError)

    dup_path = tmp_path / "dup.gmxb"
    write_bundle(dup_path, ["a", "b", "b", "d"], rows)
    fixtures["duplicate id"] = (dup_path.read_bytes(), BundleDataError)

    for name, (payload, err_cls) in fixtures.items():
        path = tmp_path / "corrupt.gmxb"
        path.write_bytes(payload)
        with pytest.raises(err_cls):
            load_bundle(path)
        # the CLI surfaces the same rejection as a validation failure
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "image_bundle": str(path),
            "text_bundles": {r: str(good) for r in
                             ("mod_text", "target_desc", "include", "exclude")},
            "queries": str(tmp_path / "empty.jsonl"),
            "output": str(tmp_path / "out.jsonl"),
        }))
        (tmp_path / "empty.jsonl").write_text("")
        assert main(["validate", str(manifest)]) == 1, name
    _report("format robustness", "6 corrupted fixtures rejected")

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmixer.errors import BundleDataError, BundleFormatError, DimensionMismatchError
from gmixer.store import EmbeddingStore, load_bundle, write_bundle

from helpers import random_unit, random_unit_rows
from reference_impl import ref_topk


def test_round_trip(tmp_path, rng):
    ids = ["x", "y", "z"]
    rows = random_unit_rows(rng, 3, 4)
    path = tmp_path / "b.gmxb"
    write_bundle(path, ids, rows)
    store = load_bundle(path)
    assert len(store) == 3
    assert store.dim == 4
    assert store.ids == ids
    # float32 storage round-trip, then renormalized
    np.testing.assert_allclose(store.matrix, rows, atol=1e-6)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.gmxb"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BundleFormatError) as exc:
        load_bundle(path)
    assert exc.value.offset == 0


def test_bad_version(tmp_path):
    path = tmp_path / "bad.gmxb"
    path.write_bytes(struct.pack("<4sIIQ", b"GMXB", 7, 4, 0))
    with pytest.raises(BundleFormatError) as exc:
        load_bundle(path)
    assert exc.value.offset == 4


def test_truncated_records(tmp_path, rng):
    path = tmp_path / "b.gmxb"
    write_bundle(path, ["a", "b", "c", "d"], random_unit_rows(rng, 4, 4))
    data = path.read_bytes()
    # claim 5 records but provide 4
    patched = data[:12] + struct.pack("<Q", 5) + data[20:]
    path.write_bytes(patched)
    with pytest.raises(BundleFormatError, match="truncated"):
        load_bundle(path)


def test_zero_vector_rejected(tmp_path):
    path = tmp_path / "b.gmxb"
    write_bundle(path, ["ok", "zero"], np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(BundleDataError) as exc:
        load_bundle(path)
    assert exc.value.entry_id == "zero"


def test_nan_vector_rejected(tmp_path):
    path = tmp_path / "b.gmxb"
    write_bundle(path, ["bad"], np.array([[np.nan, 1.0]]))
    with pytest.raises(BundleDataError, match="non-finite"):
        load_bundle(path)


def test_duplicate_id_rejected(tmp_path):
    path = tmp_path / "b.gmxb"
    write_bundle(path, ["a", "a"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(BundleDataError, match="duplicate"):
        load_bundle(path)


def test_norm_gate(tmp_path):
    # small drift is renormalized, big drift is rejected
    path = tmp_path / "b.gmxb"
    write_bundle(path, ["drift"], np.array([[1.005, 0.0]]))
    store = load_bundle(path)
    assert abs(np.linalg.norm(store.vector("drift")) - 1.0) < 1e-9

    write_bundle(path, ["bad"], np.array([[1.5, 0.0]]))
    with pytest.raises(BundleDataError, match="deviates"):
        load_bundle(path)


class TestTopK:
    def test_hand_computed(self, small_store):
        hits = small_store.top_k(np.array([1.0, 0.0, 0.0, 0.0]), 2)
        assert [h.id for h in hits] == ["a", "c"]
        assert hits[0].score == pytest.approx(1.0)
        assert hits[1].score == pytest.approx(1 / np.sqrt(2), abs=1e-6)

    def test_k_larger_than_store(self, small_store):
        hits = small_store.top_k(np.array([0.0, 1.0, 0.0, 0.0]), 10)
        assert len(hits) == 3

    def test_tie_break_bundle_order(self, tmp_path):
        v = np.array([1.0, 0.0])
        write_bundle(tmp_path / "t.gmxb", ["late", "early"], np.vstack([v, v]))
        store = load_bundle(tmp_path / "t.gmxb")
        hits = store.top_k(v, 2)
        assert [h.id for h in hits] == ["late", "early"]

    def test_dimension_mismatch(self, small_store):
        with pytest.raises(DimensionMismatchError):
            small_store.top_k(np.array([1.0, 0.0]), 1)

    def test_empty_store(self):
        store = EmbeddingStore([], np.empty((0, 4)))
        assert store.top_k(np.array([1.0, 0, 0, 0]), 5) == []

    @given(seed=st.integers(0, 5000), k1=st.integers(1, 10), k2=st.integers(1, 10))
    @settings(max_examples=100, deadline=None)
    def test_prefix_and_order_properties(self, seed, k1, k2):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 25))
        rows = random_unit_rows(rng, n, 6)
        # duplicate a row occasionally to exercise ties
        if n > 6:
            rows[3] = rows[1]
        store = EmbeddingStore([f"v{i}" for i in range(n)], rows)
        q = random_unit(rng, 6)
        if k1 > k2:
            k1, k2 = k2, k1
        small, big = store.top_k(q, k1), store.top_k(q, k2)
        assert big[: len(small)] == small
        scores = [h.score for h in big]
        assert scores == sorted(scores, reverse=True)
        # every returned beats every non-returned
        returned = {h.id for h in big}
        floor = min(scores)
        for i in range(n):
            if store.ids[i] not in returned:
                assert float(rows[i] @ q) <= floor + 1e-12

    def test_matches_reference(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 30))
            rows = random_unit_rows(rng, n, 5)
            ids = [f"v{i}" for i in range(n)]
            store = EmbeddingStore(ids, rows)
            q = random_unit(rng, 5)
            got = [(h.id, h.score) for h in store.top_k(q, 7)]
            want = ref_topk(ids, rows.tolist(), q.tolist(), 7)
            assert [g[0] for g in got] == [w[0] for w in want]
            for (gi, gs), (wi, ws) in zip(got, want):
                assert gs == pytest.approx(ws, abs=1e-12)

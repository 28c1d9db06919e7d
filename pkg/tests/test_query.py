import numpy as np
import pytest

from plaf.core import (
    DimensionMismatchError,
    FeaturePool,
    MaskIndexedFrame,
    SemanticPointCloud,
    ValidationError,
)
from plaf.lift3d import FusionConfig, build_map
from plaf.query import (
    TextQuery,
    argmax_labels,
    export_cloud_ply,
    export_heatmap_pgm,
    query_pixels,
    query_points,
    score_pool,
)
from test_lift3d import _camera, _frame_with_descriptors


def _unit_rows(rng, m, dim):
    d = rng.standard_normal((m, dim))
    return (d / np.linalg.norm(d, axis=1, keepdims=True)).astype(np.float32)


def _pool(desc):
    return FeaturePool(descriptors=desc, counts=np.ones(desc.shape[0], dtype=np.int64))


def test_score_pool_self_similarity():
    rng = np.random.default_rng(0)
    desc = _unit_rows(rng, 4, 16)
    scores = score_pool(_pool(desc), TextQuery(label="q", embedding=desc[2]))
    assert abs(scores[2] - 1.0) < 1e-6


def test_score_pool_orthogonal_query():
    desc = np.eye(3, 8, dtype=np.float32)
    q = np.zeros(8, dtype=np.float32)
    q[7] = 3.0
    scores = score_pool(_pool(desc), TextQuery(label="q", embedding=q))
    np.testing.assert_allclose(scores, 0.0, atol=1e-6)


def test_score_pool_matches_dot_oracle():
    rng = np.random.default_rng(1)
    desc = _unit_rows(rng, 5, 12)
    emb = rng.standard_normal(12).astype(np.float32)
    scores = score_pool(_pool(desc), TextQuery(label="q", embedding=emb))
    unit = emb.astype(np.float64) / np.linalg.norm(emb.astype(np.float64))
    for m in range(5):
        expected = float(np.dot(desc[m].astype(np.float64), unit))
        assert abs(float(scores[m]) - expected) < 1e-6


def test_score_pool_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        score_pool(_pool(np.eye(2, 4, dtype=np.float32)), TextQuery(label="q", embedding=np.ones(5)))


def test_query_points_single_entry_all_selected():
    desc = np.zeros((1, 4), dtype=np.float32)
    desc[0, 0] = 1.0
    cloud = SemanticPointCloud(
        positions=np.zeros((6, 3), np.float32), pool_refs=np.zeros(6, np.uint16)
    )
    res = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=desc[0]))
    assert res.selected.size == 6
    np.testing.assert_allclose(res.scores, 1.0, atol=1e-6)


def test_query_points_impossible_threshold_empty():
    desc = np.eye(1, 4, dtype=np.float32)
    cloud = SemanticPointCloud(positions=np.zeros((3, 3)), pool_refs=np.zeros(3, np.uint16))
    res = query_points(
        _pool(desc), cloud, TextQuery(label="q", embedding=desc[0], score_threshold=1.0)
    )
    # scores clip to exactly 1.0, so use the epsilon-above check via top_k=0 analogue:
    assert np.all(res.scores <= 1.0)
    res_empty = query_points(
        _pool(desc),
        cloud,
        TextQuery(label="q", embedding=np.float32([1, 1, 0, 0]), score_threshold=1.0),
    )
    assert res_empty.selected.size == 0


def _three_object_scene():
    desc = np.eye(3, 8, dtype=np.float32)
    refs = np.array([0, 0, 1, 1, 1, 2], dtype=np.uint16)
    cloud = SemanticPointCloud(
        positions=np.arange(18, dtype=np.float32).reshape(6, 3), pool_refs=refs
    )
    return _pool(desc), cloud, desc


def test_query_points_three_object_scene():
    pool, cloud, desc = _three_object_scene()
    res = query_points(pool, cloud, TextQuery(label="obj2", embedding=desc[1]))
    assert sorted(res.selected.tolist()) == [2, 3, 4]


def test_query_pixels_trio():
    desc = np.eye(3, 8, dtype=np.float32)
    frame = _frame_with_descriptors(desc, h=4, w=8)
    q = TextQuery(label="obj1", embedding=desc[0])
    res = query_pixels(frame, q)
    assert res.shape == (4, 8)
    assert res.selected.tolist() == [0]  # pixel (0,0) holds mask 1
    assert np.isneginf(res.scores[8:]).all()  # background rows
    # orthogonal query selects nothing
    far = np.zeros(8, np.float32)
    far[7] = 1.0
    assert query_pixels(frame, TextQuery(label="none", embedding=far)).selected.size == 0


def test_scale_invariance_of_selection():
    rng = np.random.default_rng(3)
    desc = _unit_rows(rng, 6, 10)
    cloud = SemanticPointCloud(
        positions=rng.standard_normal((20, 3)).astype(np.float32),
        pool_refs=rng.integers(0, 6, 20).astype(np.uint16),
    )
    emb = rng.standard_normal(10).astype(np.float32)
    a = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=emb))
    # power-of-two scaling is exact in float32, so scores match bitwise
    b = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=1024.0 * emb))
    np.testing.assert_array_equal(a.scores, b.scores)
    np.testing.assert_array_equal(a.selected, b.selected)
    # arbitrary positive scaling agrees to rounding and selects the same set
    c = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=1000.0 * emb))
    np.testing.assert_allclose(a.scores, c.scores, atol=1e-6)
    np.testing.assert_array_equal(a.selected, c.selected)


def test_indirection_consistency():
    rng = np.random.default_rng(4)
    desc = _unit_rows(rng, 3, 6)
    refs = np.array([1, 0, 1, 2, 1], dtype=np.uint16)
    cloud = SemanticPointCloud(positions=np.zeros((5, 3)), pool_refs=refs)
    res = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=rng.standard_normal(6)))
    same = refs == 1
    assert len(set(res.scores[same].tolist())) == 1


def test_topk_is_prefix_of_threshold_selection():
    rng = np.random.default_rng(5)
    desc = _unit_rows(rng, 8, 6)
    refs = rng.integers(0, 8, 30).astype(np.uint16)
    cloud = SemanticPointCloud(positions=np.zeros((30, 3)), pool_refs=refs)
    emb = rng.standard_normal(6).astype(np.float32)
    full = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=emb, score_threshold=-1.0))
    top = query_points(
        _pool(desc), cloud, TextQuery(label="q", embedding=emb, score_threshold=-1.0, top_k=7)
    )
    assert top.selected.size == 7
    np.testing.assert_array_equal(top.selected, full.selected[:7])
    # stable tie-break: equal scores ordered by point index
    scores = full.scores[full.selected]
    for i in range(len(scores) - 1):
        if scores[i] == scores[i + 1]:
            assert full.selected[i] < full.selected[i + 1]


def test_query2d_equals_query3d_on_degenerate_map():
    rng = np.random.default_rng(6)
    desc = _unit_rows(rng, 3, 8)
    frame = _frame_with_descriptors(desc, h=6, w=8)
    cfg = FusionConfig(similarity_threshold=1.0, voxel_size=1e-4, pixel_stride=1)
    pool, cloud, _ = build_map([(frame, _camera(h=6, w=8))], cfg)
    emb = rng.standard_normal(8).astype(np.float32)
    q = TextQuery(label="q", embedding=emb, score_threshold=0.0)
    res2d = query_pixels(frame, q)
    res3d = query_points(pool, cloud, q)
    # foreground pixels in row-major order correspond to cloud points
    fg = np.isfinite(res2d.scores)
    np.testing.assert_allclose(res2d.scores[fg], res3d.scores, atol=1e-6)


def test_argmax_labels():
    pool, cloud, desc = _three_object_scene()
    results = [query_points(pool, cloud, TextQuery(label=f"o{i}", embedding=desc[i])) for i in range(3)]
    labels = argmax_labels(results)
    np.testing.assert_array_equal(labels, [0, 0, 1, 1, 1, 2])


def test_export_ply_replay(tmp_path):
    pool, cloud, desc = _three_object_scene()
    res = query_points(pool, cloud, TextQuery(label="obj2", embedding=desc[1]))
    path = tmp_path / "resp.ply"
    export_cloud_ply(res, cloud, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "ply"
    assert f"element vertex {cloud.count}" in lines
    body = lines[lines.index("end_header") + 1 :]
    flags = [int(row.split()[-1]) for row in body]
    np.testing.assert_array_equal(np.nonzero(flags)[0], res.selected[np.argsort(res.selected)])


def test_export_ply_single_point(tmp_path):
    desc = np.eye(1, 4, dtype=np.float32)
    cloud = SemanticPointCloud(
        positions=np.array([[0.0, 0.0, 1.0]], np.float32), pool_refs=np.zeros(1, np.uint16)
    )
    res = query_points(_pool(desc), cloud, TextQuery(label="q", embedding=desc[0]))
    path = tmp_path / "one.ply"
    export_cloud_ply(res, cloud, path)
    assert "0 0 1 1 1" in path.read_text().splitlines()[-1]


def test_export_ply_empty_selection_valid(tmp_path):
    desc = np.eye(1, 4, dtype=np.float32)
    cloud = SemanticPointCloud(positions=np.zeros((4, 3)), pool_refs=np.zeros(4, np.uint16))
    q = TextQuery(label="q", embedding=np.float32([0, 0, 0, 1]))
    res = query_points(_pool(desc), cloud, q)
    path = tmp_path / "none.ply"
    export_cloud_ply(res, cloud, path)
    body = path.read_text().splitlines()
    rows = body[body.index("end_header") + 1 :]
    assert len(rows) == 4
    assert all(row.split()[-1] == "0" for row in rows)


def test_export_pgm(tmp_path):
    desc = np.eye(2, 4, dtype=np.float32)
    frame = _frame_with_descriptors(desc, h=3, w=4)
    res = query_pixels(frame, TextQuery(label="q", embedding=desc[0]))
    path = tmp_path / "resp.pgm"
    export_heatmap_pgm(res, path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n4 3\n255\n")
    gray = np.frombuffer(data[len(b"P5\n4 3\n255\n") :], dtype=np.uint8).reshape(3, 4)
    assert gray[0, 0] == 255  # matching mask pixel
    assert gray[1, 0] == 0  # background
    # raw sidecar preserves the scores bitwise
    raw = np.frombuffer((tmp_path / "resp.f32").read_bytes(), dtype="<f4").reshape(3, 4)
    np.testing.assert_array_equal(raw.reshape(-1), res.scores)
    # determinism: byte-identical on re-export
    export_heatmap_pgm(res, tmp_path / "again.pgm")
    assert (tmp_path / "again.pgm").read_bytes() == data


def test_text_query_validation():
    with pytest.raises(ValidationError):
        TextQuery(label="q", embedding=np.zeros(4))
    with pytest.raises(ValidationError):
        TextQuery(label="q", embedding=np.ones(4), score_threshold=2.0)
    with pytest.raises(ValidationError):
        TextQuery(label="q", embedding=np.ones(4), top_k=0)
    with pytest.raises(ValidationError):
        TextQuery(label="q", embedding=np.array([np.nan, 1.0]))

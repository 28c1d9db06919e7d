import numpy as np
import pytest

from plaf.core import (
    CameraFrame,
    DenseFeatureMap,
    DimensionMismatchError,
    EmptyMaskError,
    FeaturePool,
    MaskIndexedFrame,
    MaskSet,
    SemanticPointCloud,
    ValidationError,
    validate,
)


def test_validate_empty_scene_is_clean():
    frame = MaskIndexedFrame(
        index_map=np.zeros((4, 4), dtype=np.uint16),
        feature_table=np.zeros((0, 8), dtype=np.float32),
    )
    assert validate(frame) == []


def test_validate_reports_index_out_of_range():
    idx = np.zeros((4, 4), dtype=np.uint16)
    idx[0, 0] = 5
    idx[1, 1] = 1
    idx[2, 2] = 2
    idx[3, 3] = 3
    frame = MaskIndexedFrame(index_map=idx, feature_table=np.ones((3, 2), dtype=np.float32))
    report = validate(frame)
    assert any("index out of range" in line for line in report)


def test_validate_reports_unreferenced_mask_id():
    idx = np.zeros((4, 4), dtype=np.uint16)
    idx[0, 0] = 1
    idx[1, 1] = 3
    frame = MaskIndexedFrame(index_map=idx, feature_table=np.ones((3, 2), dtype=np.float32))
    report = validate(frame)
    assert any("unreferenced mask ID" in line for line in report)
    assert "[2]" in " ".join(report)


def test_validate_reports_non_finite_table():
    idx = np.ones((2, 2), dtype=np.uint16)
    table = np.ones((1, 3), dtype=np.float32)
    table[0, 1] = np.nan
    frame = MaskIndexedFrame(index_map=idx, feature_table=table)
    assert any("non-finite" in line for line in validate(frame))


def test_validate_is_pure():
    idx = np.zeros((3, 3), dtype=np.uint16)
    idx[0, 0] = 7
    frame = MaskIndexedFrame(index_map=idx, feature_table=np.ones((2, 2), dtype=np.float32))
    assert validate(frame) == validate(frame)


def test_dense_feature_map_rejects_non_finite():
    data = np.zeros((2, 2, 2), dtype=np.float32)
    data[1, 1, 1] = np.inf
    with pytest.raises(ValidationError):
        DenseFeatureMap(data)


def test_mask_set_rejects_empty_mask():
    masks = np.zeros((2, 4, 4), dtype=bool)
    masks[0, 1, 1] = True
    with pytest.raises(EmptyMaskError):
        MaskSet(masks)


def test_mask_set_zero_masks_allowed():
    ms = MaskSet(np.zeros((0, 4, 5), dtype=bool), height=4, width=5)
    assert ms.count == 0
    assert ms.areas().shape == (0,)


def test_frame_rejects_too_many_masks():
    with pytest.raises(ValidationError):
        MaskIndexedFrame(
            index_map=np.zeros((2, 2), dtype=np.uint16),
            feature_table=np.zeros((65536, 1), dtype=np.float32),
        )


def test_types_are_immutable():
    frame = MaskIndexedFrame(
        index_map=np.ones((2, 2), dtype=np.uint16),
        feature_table=np.ones((1, 2), dtype=np.float32),
    )
    with pytest.raises(ValueError):
        frame.index_map[0, 0] = 3
    with pytest.raises(ValueError):
        frame.feature_table[0, 0] = 3.0


def test_camera_frame_checks_rotation():
    pose = np.eye(4)
    pose[0, 0] = 2.0
    with pytest.raises(ValidationError):
        CameraFrame(
            depth=np.ones((2, 2), dtype=np.float32),
            fx=10, fy=10, cx=1, cy=1, pose_world_from_camera=pose,
        )
    with pytest.raises(ValidationError):
        CameraFrame(
            depth=np.ones((2, 2), dtype=np.float32),
            fx=-1, fy=10, cx=1, cy=1, pose_world_from_camera=np.eye(4),
        )


def test_feature_pool_requires_unit_norm():
    with pytest.raises(ValidationError):
        FeaturePool(descriptors=np.full((1, 4), 0.7, np.float32), counts=np.array([1]))
    ok = np.zeros((2, 4), dtype=np.float32)
    ok[0, 0] = 1.0
    ok[1, 1] = 1.0
    pool = FeaturePool(descriptors=ok, counts=np.array([3, 1]))
    assert pool.size == 2


def test_feature_pool_requires_positive_counts():
    desc = np.zeros((1, 4), dtype=np.float32)
    desc[0, 0] = 1.0
    with pytest.raises(ValidationError):
        FeaturePool(descriptors=desc, counts=np.array([0]))


def test_cloud_ref_width_follows_pool_size():
    cloud = SemanticPointCloud(positions=np.zeros((3, 3)), pool_refs=np.array([0, 1, 2]))
    assert cloud.pool_refs.dtype == np.uint16
    big = SemanticPointCloud(positions=np.zeros((1, 3)), pool_refs=np.array([70000]))
    assert big.pool_refs.dtype == np.uint32
    with pytest.raises(ValidationError):
        SemanticPointCloud(positions=np.zeros((1, 3)), pool_refs=np.array([5]), pool_size=5)


def test_cloud_shape_checks():
    with pytest.raises(DimensionMismatchError):
        SemanticPointCloud(positions=np.zeros((2, 2)), pool_refs=np.array([0, 0]))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.geometry.clouds import (
    VEHICLE,
    WORLD,
    Aabb,
    Frame,
    PointCloud,
    fuse_clouds,
    transform_cloud,
)
from apps.geometry.exceptions import ConfigError, ContractViolation, NumericError, ParseError
from apps.geometry.transforms import RigidTransform, compose, rotation_from_ypr

angles = st.floats(min_value=-180.0, max_value=180.0, allow_nan=False)
coords = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@st.composite
def transforms(draw):
    return RigidTransform.from_xyz_ypr(
        [draw(coords), draw(coords), draw(coords)], [draw(angles), draw(angles), draw(angles)]
    )


class TestRigidTransform:
    def test_yaw_90_turns_forward_into_left(self):
        pose = RigidTransform.from_xyz_ypr([0, 0, 0], [90, 0, 0])
        np.testing.assert_allclose(pose.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_positive_pitch_tilts_forward_axis_down(self):
        pose = RigidTransform.from_xyz_ypr([0, 0, 0], [0, 30, 0])
        forward = pose.apply_direction([1.0, 0.0, 0.0])
        assert forward[2] < 0

    def test_rejects_non_orthonormal_rotation(self):
        with pytest.raises(ContractViolation):
            RigidTransform(np.diag([1.0, 1.0, 2.0]), [0, 0, 0])

    def test_rejects_reflection(self):
        with pytest.raises(ContractViolation):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), [0, 0, 0])

    def test_rejects_nan_translation(self):
        with pytest.raises(ContractViolation):
            RigidTransform.from_translation([0.0, np.nan, 0.0])

    def test_matrix_round_trip(self):
        pose = RigidTransform.from_xyz_ypr([1, 2, 3], [10, 20, 30])
        assert RigidTransform.from_matrix(pose.as_matrix()).allclose(pose)

    def test_from_matrix_requires_4x4(self):
        with pytest.raises(ContractViolation):
            RigidTransform.from_matrix(np.eye(3))

    def test_arrays_are_read_only(self):
        pose = RigidTransform.identity()
        with pytest.raises(ValueError):
            pose.rotation[0, 0] = 2.0

    @settings(max_examples=50, deadline=None)
    @given(transforms(), st.lists(st.tuples(coords, coords, coords), min_size=2, max_size=8))
    def test_preserves_pairwise_distances(self, pose, points):
        points = np.array(points)
        moved = pose.apply(points)
        before = np.linalg.norm(points[:, None] - points[None], axis=-1)
        after = np.linalg.norm(moved[:, None] - moved[None], axis=-1)
        np.testing.assert_allclose(after, before, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(transforms())
    def test_inverse_composes_to_identity(self, pose):
        assert compose(pose, pose.inverse()).allclose(RigidTransform.identity(), atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(transforms(), transforms(), st.tuples(coords, coords, coords))
    def test_compose_applies_right_first(self, a, b, point):
        np.testing.assert_allclose(
            compose(a, b).apply(point), a.apply(b.apply(point)), atol=1e-9
        )

    @settings(max_examples=50, deadline=None)
    @given(angles, angles, angles)
    def test_rotation_is_orthonormal(self, yaw, pitch, roll):
        rotation = rotation_from_ypr(yaw, pitch, roll)
        np.testing.assert_allclose(rotation.T @ rotation, np.eye(3), atol=1e-12)
        assert np.linalg.det(rotation) == pytest.approx(1.0, abs=1e-12)


class TestPointCloud:
    def test_empty_cloud(self):
        cloud = PointCloud.empty(VEHICLE, 3)
        assert cloud.is_empty
        assert cloud.points.shape == (0, 3)
        assert cloud.timestep == 3

    def test_rejects_non_finite_points(self):
        with pytest.raises(ContractViolation):
            PointCloud([[0.0, 0.0, np.inf]])

    def test_require_checks_frame_and_timestep(self):
        cloud = PointCloud([[1.0, 2.0, 3.0]], VEHICLE, 5)
        assert cloud.require(VEHICLE, 5) is cloud
        with pytest.raises(ContractViolation):
            cloud.require(WORLD, 5)
        with pytest.raises(ContractViolation):
            cloud.require(VEHICLE, 6)

    def test_sensor_frames_differ_by_id(self):
        assert Frame.sensor("front") != Frame.sensor("rear")
        assert str(Frame.sensor("front")) == "sensor(front)"

    def test_transform_cloud_checks_source_frame(self):
        cloud = PointCloud([[1.0, 0.0, 0.0]], Frame.sensor("a"), 2)
        pose = RigidTransform.from_translation([0.0, 0.0, 1.0])
        moved = transform_cloud(cloud, pose, VEHICLE, source=Frame.sensor("a"))
        np.testing.assert_allclose(moved.points, [[1.0, 0.0, 1.0]])
        assert moved.frame == VEHICLE
        assert moved.timestep == 2
        with pytest.raises(ContractViolation):
            transform_cloud(cloud, pose, VEHICLE, source=Frame.sensor("b"))

    def test_fuse_is_union_in_order(self):
        a = PointCloud([[0.0, 0.0, 0.0]], VEHICLE, 1)
        b = PointCloud([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], VEHICLE, 1)
        fused = fuse_clouds([a, b], VEHICLE, 1)
        assert len(fused) == 3
        np.testing.assert_array_equal(fused.points[0], [0.0, 0.0, 0.0])

    def test_fuse_rejects_mixed_timesteps(self):
        a = PointCloud([[0.0, 0.0, 0.0]], VEHICLE, 1)
        b = PointCloud([[0.0, 0.0, 0.0]], VEHICLE, 2)
        with pytest.raises(ContractViolation):
            fuse_clouds([a, b], VEHICLE, 1)

    def test_fuse_of_nothing_is_empty(self):
        assert fuse_clouds([], VEHICLE, 4).is_empty


class TestAabb:
    def test_rejects_inverted_box(self):
        with pytest.raises(ContractViolation):
            Aabb([1.0, 0.0, 0.0], [0.0, 1.0, 1.0])

    def test_from_points_and_volume(self):
        box = Aabb.from_points([[0, 0, 0], [2, 3, 4], [1, 1, 1]])
        np.testing.assert_array_equal(box.size, [2, 3, 4])
        assert box.volume == 24.0

    def test_contains_is_closed(self):
        box = Aabb([0, 0, 0], [1, 1, 1])
        assert box.contains([[1.0, 1.0, 1.0], [0.5, 0.5, 1.0001]]).tolist() == [True, False]

    def test_enlarged_does_not_grow_downward_by_default(self):
        box = Aabb([0, 0, 0], [1, 1, 1]).enlarged(up=0.5, horizontal=0.25)
        np.testing.assert_allclose(box.min, [-0.25, -0.25, 0.0])
        np.testing.assert_allclose(box.max, [1.25, 1.25, 1.5])


class TestExceptions:
    def test_config_error_names_field_and_position(self):
        error = ConfigError("잘못된 값", field="sensors.0.channels")
        assert "sensors.0.channels" in str(error)
        error = ConfigError("문법 오류", line=3, column=7)
        assert error.line == 3 and error.column == 7
        assert "3행 7열" in str(error)

    def test_parse_error_carries_offset(self):
        error = ParseError("잘림", "cloud.bspc", 12)
        assert error.offset == 12
        assert "cloud.bspc" in str(error)

    def test_numeric_error_names_pixel(self):
        assert NumericError("수렴 실패", pixel=(3, 4)).pixel == (3, 4)

    def test_contract_violation_is_value_error(self):
        assert issubclass(ContractViolation, ValueError)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.geometry.clouds import VEHICLE
from apps.geometry.exceptions import ContractViolation, NumericError
from apps.geometry.transforms import RigidTransform
from apps.scene.actors import Actor, StaticTrajectory
from apps.scene.meshes import box, ground_plane
from apps.scene.world import Ray, build_world, cast_ray
from apps.sensors.camera import (
    CameraSpec,
    DepthImage,
    DistortionModel,
    invert_distortion,
    optical_mount,
    render_depth,
    unproject_depth,
)
from apps.sensors.lidar import LidarSpec, lidar_scan
from apps.sensors.rig import rig_cloud, sensor_cloud

MOUNT_HEIGHT = 2.0


@pytest.fixture
def flat_world():
    return build_world([Actor("ground", ground_plane(500.0))], 0)


@pytest.fixture
def box_scene():
    target = Actor(
        "target",
        box([2.0, 3.0, 2.0]),
        StaticTrajectory(RigidTransform.from_xyz_ypr([8.0, 1.0, 1.0], [25.0, 0.0, 0.0])),
    )
    return build_world([target, Actor("ground", ground_plane(200.0))], 0)


@pytest.fixture
def wall_world():
    wall = Actor(
        "wall",
        box([1.0, 200.0, 200.0]),
        StaticTrajectory(RigidTransform.from_translation([10.5, 0.0, 0.0])),
    )
    return build_world([wall], 0)


class TestLidarSpec:
    def test_directions_are_unit_and_channel_major(self):
        spec = LidarSpec(4, 8, -30.0, 10.0)
        directions = spec.directions
        assert directions.shape == (32, 3)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0, atol=1e-12)
        elevation = np.degrees(np.arcsin(directions[:, 2])).reshape(4, 8)
        np.testing.assert_allclose(elevation[:, 0], np.linspace(-30.0, 10.0, 4))

    def test_azimuth_bins_are_centered(self):
        spec = LidarSpec(1, 4, 0.0, 0.0, azimuth_min=-180.0, azimuth_max=180.0)
        np.testing.assert_allclose(spec.azimuths, [-135.0, -45.0, 45.0, 135.0])

    def test_single_channel_uses_lower_bound(self):
        assert LidarSpec(1, 16, -5.0, 5.0).elevations.tolist() == [-5.0]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"channels": 0},
            {"elevation_min": 10.0, "elevation_max": -10.0},
            {"max_range": 0.0},
        ],
    )
    def test_rejects_invalid_spec(self, kwargs):
        params = dict(channels=4, points_per_channel=8, elevation_min=-10.0, elevation_max=10.0)
        params.update(kwargs)
        with pytest.raises(ContractViolation):
            LidarSpec(**params)


class TestLidarScan:
    def test_ground_rings_match_mount_geometry(self, flat_world):
        elevations = [-40.0, -30.0, -20.0, -10.0]
        spec = LidarSpec(
            channels=len(elevations),
            points_per_channel=360,
            elevation_min=elevations[0],
            elevation_max=elevations[-1],
            max_range=200.0,
            mount=RigidTransform.from_translation([0.0, 0.0, MOUNT_HEIGHT]),
        )
        cloud = lidar_scan(spec, flat_world, RigidTransform.identity())
        assert cloud.frame == VEHICLE
        assert len(cloud) == spec.ray_count
        np.testing.assert_allclose(cloud.points[:, 2], 0.0, atol=1e-9)
        radii = np.hypot(cloud.points[:, 0], cloud.points[:, 1]).reshape(len(elevations), -1)
        for channel, elevation in enumerate(elevations):
            expected = MOUNT_HEIGHT / math.tan(math.radians(abs(elevation)))
            np.testing.assert_allclose(radii[channel], expected, atol=1e-6)

    def test_rays_parallel_to_ground_return_nothing(self, flat_world):
        spec = LidarSpec(1, 64, 0.0, 0.0, mount=RigidTransform.from_translation([0, 0, 1.0]))
        assert lidar_scan(spec, flat_world, RigidTransform.identity()).is_empty

    def test_points_follow_ego_pose_into_vehicle_frame(self, flat_world):
        spec = LidarSpec(1, 36, -45.0, -45.0, mount=RigidTransform.from_translation([0, 0, 1.0]))
        still = lidar_scan(spec, flat_world, RigidTransform.identity())
        moved = lidar_scan(spec, flat_world, RigidTransform.from_xyz_ypr([50, -20, 0], [70, 0, 0]))
        np.testing.assert_allclose(moved.points, still.points, atol=1e-9)

    def test_max_range_cuts_far_ring(self, flat_world):
        spec = LidarSpec(
            2,
            16,
            -45.0,
            -5.0,
            max_range=5.0,
            mount=RigidTransform.from_translation([0, 0, 1.0]),
        )
        cloud = lidar_scan(spec, flat_world, RigidTransform.identity())
        assert len(cloud) == 16

    def test_straight_down_single_channel_hits_one_ground_point(self, flat_world):
        spec = LidarSpec(1, 1, -90.0, -90.0, mount=RigidTransform.from_translation([0, 0, 2.0]))
        cloud = lidar_scan(spec, flat_world, RigidTransform.identity())
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.points, [[0.0, 0.0, 0.0]], atol=1e-9)

    def test_obstacle_ahead_appears_on_vehicle_x_axis(self):
        # ego는 (50, -20)에서 +y 방향(yaw 90°)을 본다 - 10 m 앞 벽면은 y = -10
        ego_pose = RigidTransform.from_xyz_ypr([50.0, -20.0, 0.0], [90.0, 0.0, 0.0])
        wall = Actor(
            "wall",
            box([20.0, 1.0, 5.0]),
            StaticTrajectory(RigidTransform.from_translation([50.0, -9.5, 2.5])),
        )
        world = build_world([wall], 0)
        spec = LidarSpec(
            1,
            1,
            0.0,
            0.0,
            azimuth_min=-0.5,
            azimuth_max=0.5,
            mount=RigidTransform.from_translation([0.0, 0.0, 1.0]),
        )
        cloud = lidar_scan(spec, world, ego_pose)
        np.testing.assert_allclose(cloud.points, [[10.0, 0.0, 1.0]], atol=1e-9)


class TestDistortion:
    def test_none_is_identity(self):
        lens = np.array([[0.1, -0.2]])
        np.testing.assert_array_equal(DistortionModel.none().forward(lens), lens)

    def test_non_monotone_model_is_rejected(self):
        with pytest.raises(NumericError):
            DistortionModel.radial(k1=-1.0, max_radius=1.0)

    def test_too_many_coefficients(self):
        with pytest.raises(ContractViolation):
            DistortionModel(k=(0.1, 0.0, 0.0, 0.0))

    def test_inversion_outside_calibrated_field_reports_pixel(self):
        model = DistortionModel.radial(k1=-0.3, max_radius=0.1)
        with pytest.raises(NumericError) as excinfo:
            invert_distortion(model, [[0.8, 0.0]], pixels=[[639.0, 240.0]])
        assert excinfo.value.pixel == (639.0, 240.0)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=-0.3, max_value=0.1), st.floats(min_value=-0.05, max_value=0.05))
    def test_inverse_undoes_forward(self, k1, k2):
        model = DistortionModel.radial(k1, k2, max_radius=0.6)
        rng = np.random.default_rng(0)
        lens = rng.uniform(-0.4, 0.4, size=(1000, 2))
        np.testing.assert_allclose(invert_distortion(model, model.forward(lens)), lens, atol=1e-9)


class TestCamera:
    def test_from_fov_focal_length(self):
        spec = CameraSpec.from_fov(640, 480, 90.0)
        assert spec.fx == pytest.approx(320.0)
        assert spec.fy == spec.fx
        assert (spec.cx, spec.cy) == (319.5, 239.5)

    def test_principal_point_must_be_inside_image(self):
        with pytest.raises(ContractViolation):
            CameraSpec(64, 48, 50.0, 50.0, 64.0, 10.0)

    def test_optical_axis_points_along_body_forward(self):
        mount = optical_mount(RigidTransform.from_translation([1.0, 0.0, 1.5]))
        np.testing.assert_allclose(mount.apply_direction([0.0, 0.0, 1.0]), [1.0, 0.0, 0.0])
        np.testing.assert_allclose(mount.apply_direction([1.0, 0.0, 0.0]), [0.0, -1.0, 0.0])
        np.testing.assert_allclose(mount.apply_direction([0.0, 1.0, 0.0]), [0.0, 0.0, -1.0])

    def test_projecting_behind_camera_is_rejected(self):
        spec = CameraSpec.from_fov(64, 48, 60.0)
        with pytest.raises(ContractViolation):
            spec.project([[0.0, 0.0, -1.0]])

    def test_round_trip_without_distortion(self):
        spec = CameraSpec.from_fov(640, 480, 90.0)
        rng = np.random.default_rng(11)
        depth = rng.uniform(0.5, 80.0, size=100_000)
        lens = rng.uniform(-1.0, 1.0, size=(100_000, 2))
        points = np.column_stack([lens * depth[:, None], depth])
        restored = spec.unproject(spec.project(points), depth)
        assert np.abs(restored - points).max() < 1e-6

    @settings(max_examples=10, deadline=None)
    @given(st.floats(min_value=-0.3, max_value=0.1))
    def test_round_trip_with_radial_distortion(self, k1):
        base = CameraSpec.from_fov(640, 480, 50.0)
        distortion = DistortionModel.radial(k1, max_radius=base.image_corner_radius)
        spec = CameraSpec.from_fov(640, 480, 50.0, distortion=distortion)
        rng = np.random.default_rng(12)
        depth = rng.uniform(0.5, 80.0, size=100_000)
        lens = rng.uniform(-0.4, 0.4, size=(100_000, 2))
        points = np.column_stack([lens * depth[:, None], depth])
        restored = spec.unproject(spec.project(points), depth)
        assert np.abs(restored - points).max() < 1e-5

    def test_depth_image_rejects_infinite_depth(self):
        with pytest.raises(ContractViolation):
            DepthImage(np.array([[1.0, np.inf]]))

    def test_render_depth_of_facing_wall(self, wall_world):
        spec = CameraSpec.from_fov(
            32, 24, 60.0, RigidTransform.from_translation([0.0, 0.0, 1.0]), max_range=50.0
        )
        image = render_depth(spec, wall_world, RigidTransform.identity())
        assert image.valid.all()
        np.testing.assert_allclose(image.depth, 10.0, atol=1e-9)
        cloud = unproject_depth(spec, image)
        assert len(cloud) == 32 * 24
        np.testing.assert_allclose(cloud.points[:, 0], 10.0, atol=1e-9)

    def test_render_depth_outside_range_is_nan(self, wall_world):
        spec = CameraSpec.from_fov(16, 12, 60.0, max_range=5.0)
        image = render_depth(spec, wall_world, RigidTransform.identity())
        assert not image.valid.any()
        assert unproject_depth(spec, image).is_empty

    def test_unproject_checks_image_size(self):
        spec = CameraSpec.from_fov(16, 12, 60.0)
        with pytest.raises(ContractViolation):
            unproject_depth(spec, DepthImage(np.full((4, 4), 1.0)))

    def test_principal_pixel_matches_optical_axis_ray(self, box_scene):
        body = RigidTransform.from_xyz_ypr([0.0, 0.0, 1.5], [0.0, 20.0, 0.0])
        spec = CameraSpec.from_fov(33, 25, 60.0, body)
        assert (spec.cx, spec.cy) == (16.0, 12.0)
        image = render_depth(spec, box_scene, RigidTransform.identity())
        axis = Ray(spec.mount.translation, spec.mount.apply_direction([0.0, 0.0, 1.0]), 100.0)
        hit = cast_ray(box_scene, axis)
        assert hit.actor_id == "ground"
        assert image.depth[12, 16] == pytest.approx(hit.distance, abs=1e-12)
        assert hit.distance == pytest.approx(1.5 / math.sin(math.radians(20.0)))

    @pytest.mark.parametrize("k1", [0.0, -0.1])
    def test_rendered_points_project_back_to_their_pixels(self, box_scene, k1):
        body = RigidTransform.from_xyz_ypr([0.0, 0.0, 1.5], [10.0, 15.0, 0.0])
        base = CameraSpec.from_fov(64, 48, 70.0)
        distortion = DistortionModel.radial(k1, max_radius=base.image_corner_radius)
        spec = CameraSpec.from_fov(64, 48, 70.0, body, distortion=distortion)
        image = render_depth(spec, box_scene, RigidTransform.identity())
        cloud = unproject_depth(spec, image)
        assert len(cloud) == int(image.valid.sum()) > 0
        camera_points = spec.mount.inverse().apply(cloud.points)
        np.testing.assert_allclose(camera_points[:, 2], image.depth[image.valid], atol=1e-9)
        pixels = spec.project(camera_points)
        np.testing.assert_allclose(pixels, spec.pixel_grid[image.valid], atol=1e-6)


class TestRig:
    def test_empty_rig_is_empty_cloud(self, flat_world):
        cloud = rig_cloud([], flat_world, RigidTransform.identity())
        assert cloud.is_empty and cloud.frame == VEHICLE

    def test_rig_is_union_of_sensors(self, flat_world):
        mount = RigidTransform.from_translation([0.0, 0.0, 1.5])
        lidar = LidarSpec(2, 32, -30.0, -10.0, mount=mount)
        camera = CameraSpec.from_fov(
            16, 12, 60.0, RigidTransform.from_xyz_ypr([0.0, 0.0, 1.5], [0.0, 30.0, 0.0])
        )
        ego_pose = RigidTransform.identity()
        fused = rig_cloud([lidar, camera], flat_world, ego_pose)
        separate = [sensor_cloud(s, flat_world, ego_pose) for s in (lidar, camera)]
        assert len(fused) == sum(len(c) for c in separate)
        np.testing.assert_array_equal(fused.points[: len(separate[0])], separate[0].points)

    def test_unknown_sensor_kind(self, flat_world):
        with pytest.raises(TypeError):
            sensor_cloud(object(), flat_world, RigidTransform.identity())

    def test_rig_keeps_points_on_ego_body(self):
        ego = Actor("ego", box([2.0, 2.0, 1.0], [0.0, 0.0, 0.5]), is_ego=True)
        world = build_world([ego, Actor("ground", ground_plane(100.0))], 0)
        down = LidarSpec(1, 1, -90.0, -90.0, mount=RigidTransform.from_translation([0, 0, 2.0]))
        cloud = rig_cloud([down], world, RigidTransform.identity())
        np.testing.assert_allclose(cloud.points, [[0.0, 0.0, 1.0]], atol=1e-9)

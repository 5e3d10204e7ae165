import math

import numpy as np
import pytest
from scipy import stats

from apps.geometry.clouds import VEHICLE, Aabb
from apps.geometry.exceptions import ContractViolation
from apps.geometry.transforms import RigidTransform
from apps.reference.sampler import (
    ReferenceSamplerConfig,
    ShellVolume,
    ego_bounding_box,
    reference_rng,
    reference_scan,
    sample_reference_pose,
    sample_shell_point,
)
from apps.scene.actors import Actor, LinearTrajectory
from apps.scene.meshes import ground_plane, hatchback
from apps.scene.world import build_world

EGO_BOX = Aabb([-2.25, -0.95, 0.0], [2.25, 0.95, 1.65])
SAMPLES = 100_000
BINS = 20


def overlap(lo, hi, a, b):
    return max(0.0, min(hi, b) - max(lo, a))


def expected_axis_mass(shell: ShellVolume, axis: int, edges: np.ndarray) -> np.ndarray:
    """축 방향 구간별 껍질 부피 비율 (outer 조각 - inner 조각)"""
    others = [i for i in range(3) if i != axis]
    outer_area = np.prod([shell.outer.size[i] for i in others])
    inner_area = np.prod([shell.inner.size[i] for i in others])
    mass = []
    for a, b in zip(edges[:-1], edges[1:]):
        outer = overlap(shell.outer.min[axis], shell.outer.max[axis], a, b) * outer_area
        inner = overlap(shell.inner.min[axis], shell.inner.max[axis], a, b) * inner_area
        mass.append(outer - inner)
    mass = np.array(mass)
    return mass / mass.sum()


@pytest.fixture(scope="module")
def shell_samples():
    shell = ShellVolume.around(EGO_BOX, up=0.5, horizontal=0.5)
    rng = reference_rng(2024, 0)
    return shell, np.array([sample_shell_point(rng, shell) for _ in range(SAMPLES)])


@pytest.fixture
def driving_scene():
    ego = Actor(
        "ego",
        hatchback(),
        LinearTrajectory(RigidTransform.identity(), [10.0, 0.0, 0.0], 0.1),
        is_ego=True,
    )
    return ego, [ego, Actor("ground", ground_plane(500.0))]


class TestShell:
    def test_shell_bounds(self):
        shell = ShellVolume.around(EGO_BOX, up=0.5, horizontal=0.5)
        np.testing.assert_allclose(shell.outer.min, [-2.75, -1.45, 0.0])
        np.testing.assert_allclose(shell.outer.max, [2.75, 1.45, 2.15])
        assert shell.volume == pytest.approx(5.5 * 2.9 * 2.15 - 4.5 * 1.9 * 1.65)

    def test_samples_stay_in_shell(self, shell_samples):
        shell, points = shell_samples
        assert shell.outer.contains(points).all()
        assert not EGO_BOX.contains(points).any()

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_samples_are_uniform_over_shell(self, shell_samples, axis):
        shell, points = shell_samples
        edges = np.linspace(shell.outer.min[axis], shell.outer.max[axis], BINS + 1)
        observed, _ = np.histogram(points[:, axis], bins=edges)
        expected = expected_axis_mass(shell, axis, edges) * len(points)
        _, p_value = stats.chisquare(observed, expected)
        assert p_value > 0.01


class TestPoseSampling:
    def test_same_seed_and_timestep_give_same_pose(self):
        cfg = ReferenceSamplerConfig(seed=7)
        a = sample_reference_pose(cfg, EGO_BOX, 3)
        b = sample_reference_pose(cfg, EGO_BOX, 3)
        assert a.allclose(b, atol=0.0)

    def test_streams_differ_per_timestep_and_sensor(self):
        cfg = ReferenceSamplerConfig(seed=7)
        base = sample_reference_pose(cfg, EGO_BOX, 3)
        assert not base.allclose(sample_reference_pose(cfg, EGO_BOX, 4))
        assert not base.allclose(sample_reference_pose(cfg, EGO_BOX, 3, k=1))

    def test_angles_stay_in_configured_ranges(self):
        cfg = ReferenceSamplerConfig(
            seed=1, yaw_range=(-30.0, 30.0), pitch_range=(-10.0, 10.0), roll_range=(-5.0, 5.0)
        )
        for t in range(200):
            rotation = sample_reference_pose(cfg, EGO_BOX, t).rotation
            yaw = math.degrees(math.atan2(rotation[1, 0], rotation[0, 0]))
            pitch = math.degrees(-math.asin(rotation[2, 0]))
            roll = math.degrees(math.atan2(rotation[2, 1], rotation[2, 2]))
            assert -30.0 - 1e-9 <= yaw <= 30.0 + 1e-9
            assert -10.0 - 1e-9 <= pitch <= 10.0 + 1e-9
            assert -5.0 - 1e-9 <= roll <= 5.0 + 1e-9

    def test_zero_width_angle_ranges_give_identity_rotation(self):
        cfg = ReferenceSamplerConfig(
            seed=3, yaw_range=(0.0, 0.0), pitch_range=(0.0, 0.0), roll_range=(0.0, 0.0)
        )
        for t in range(20):
            pose = sample_reference_pose(cfg, EGO_BOX, t)
            np.testing.assert_allclose(pose.rotation, np.eye(3), atol=1e-15)
            assert ShellVolume.around(EGO_BOX).contains(pose.translation[None]).all()

    def test_large_seeds_are_accepted(self):
        cfg = ReferenceSamplerConfig(seed=2**63 - 1)
        assert EGO_BOX.enlarged(0.5, 0.5).contains(
            sample_reference_pose(cfg, EGO_BOX, 0).translation
        ).all()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"shell_margin_up": 0.0},
            {"yaw_range": (10.0, -10.0)},
            {"azimuth_span": 0.0},
            {"count": 0},
        ],
    )
    def test_rejects_invalid_config(self, kwargs):
        with pytest.raises(ContractViolation):
            ReferenceSamplerConfig(**kwargs)

    def test_reference_lidar_spans_configured_azimuth(self):
        cfg = ReferenceSamplerConfig(channels=8, points_per_channel=16, azimuth_span=180.0)
        assert cfg.lidar.ray_count == 128
        assert (cfg.lidar.azimuth_min, cfg.lidar.azimuth_max) == (-90.0, 90.0)


class TestReferenceScan:
    def test_cloud_excludes_ego_and_lives_in_vehicle_frame(self, driving_scene):
        ego, actors = driving_scene
        cfg = ReferenceSamplerConfig(seed=5, channels=32, points_per_channel=64)
        t = 12
        cloud = reference_scan(cfg, build_world(actors, t), ego, t)
        assert cloud.frame == VEHICLE and cloud.timestep == t
        assert len(cloud) > 0
        assert not ego_bounding_box(ego).contains(cloud.points).any()
        # 남는 것은 지면뿐
        np.testing.assert_allclose(cloud.points[:, 2], 0.0, atol=1e-8)

    def test_multiple_reference_sensors_are_fused(self, driving_scene):
        ego, actors = driving_scene
        world = build_world(actors, 0)
        single = reference_scan(
            ReferenceSamplerConfig(seed=9, channels=16, points_per_channel=32), world, ego, 0
        )
        double = reference_scan(
            ReferenceSamplerConfig(seed=9, channels=16, points_per_channel=32, count=2),
            world,
            ego,
            0,
        )
        assert len(double) > len(single)
        np.testing.assert_array_equal(double.points[: len(single)], single.points)

    def test_world_with_only_ego_gives_empty_cloud(self, driving_scene):
        ego, _ = driving_scene
        cfg = ReferenceSamplerConfig(seed=5, channels=32, points_per_channel=64)
        for t in range(3):
            cloud = reference_scan(cfg, build_world([ego], t), ego, t)
            assert cloud.is_empty
            assert cloud.frame == VEHICLE

"""
몬테카를로 기준 센서

매 타임스텝 ego 바운딩 박스를 둘러싼 껍질(shell) 안에서 임의의 자세를 뽑고,
매우 조밀한 LiDAR로 월드를 스캔해 ego 자신에 맞은 점을 뺀 기준 클라우드를 만든다.
타임스텝별 난수 스트림은 (seed, t)에서 파생되므로 병렬 처리 순서와 무관하다.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from apps.geometry.clouds import VEHICLE, Aabb, PointCloud, fuse_clouds
from apps.geometry.exceptions import ContractViolation
from apps.geometry.transforms import RigidTransform, compose
from apps.scene.actors import Actor
from apps.scene.world import WorldSnapshot
from apps.sensors.lidar import LidarSpec, scan_from_pose

logger = logging.getLogger(__name__)

REJECTION_BATCH = 16
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class ReferenceSamplerConfig:
    """
    기준 센서 설정 - 기본값은 1024채널 x 채널당 1024점, 고도 [-90°, 0°], 방위 360°,
    yaw [-180°, 180°], pitch/roll [-45°, 45°], 껍질 여유 위쪽/수평 0.5 m
    """

    seed: int = 0
    shell_margin_up: float = 0.5
    shell_margin_horizontal: float = 0.5
    channels: int = 1024
    points_per_channel: int = 1024
    elevation_min: float = -90.0
    elevation_max: float = 0.0
    azimuth_span: float = 360.0
    yaw_range: tuple = (-180.0, 180.0)
    pitch_range: tuple = (-45.0, 45.0)
    roll_range: tuple = (-45.0, 45.0)
    max_range: float = 200.0
    count: int = 1

    def __post_init__(self):
        if not (self.shell_margin_up > 0 and self.shell_margin_horizontal > 0):
            raise ContractViolation("껍질 여유(margin)는 양수여야 합니다.")
        for name in ("yaw_range", "pitch_range", "roll_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ContractViolation(f"{name} 범위가 뒤집혀 있습니다: [{lo}, {hi}]")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.elevation_min > self.elevation_max:
            raise ContractViolation("고도각 범위가 뒤집혀 있습니다.")
        if not 0 < self.azimuth_span <= 360:
            raise ContractViolation(f"azimuth_span은 (0, 360] 범위여야 합니다: {self.azimuth_span}")
        if self.count < 1:
            raise ContractViolation("기준 센서 개수는 1 이상이어야 합니다.")

    @cached_property
    def lidar(self) -> LidarSpec:
        return LidarSpec(
            channels=self.channels,
            points_per_channel=self.points_per_channel,
            elevation_min=self.elevation_min,
            elevation_max=self.elevation_max,
            azimuth_min=-self.azimuth_span / 2.0,
            azimuth_max=self.azimuth_span / 2.0,
            max_range=self.max_range,
            name="reference",
        )


@dataclass(frozen=True, eq=False)
class ShellVolume:
    """
    outer(위쪽/수평으로 키운 박스)에서 inner(ego 박스)를 뺀 영역 - 아래쪽으로는 키우지 않는다
    """

    outer: Aabb
    inner: Aabb

    @classmethod
    def around(cls, ego_box: Aabb, up: float = 0.5, horizontal: float = 0.5) -> "ShellVolume":
        return cls(ego_box.enlarged(up=up, horizontal=horizontal), ego_box)

    @property
    def volume(self) -> float:
        return self.outer.volume - self.inner.volume

    def contains(self, points) -> np.ndarray:
        return self.outer.contains(points) & ~self.inner.contains(points)


def reference_rng(seed: int, t: int, k: int = 0) -> np.random.Generator:
    """(seed, t, k)에서 파생한 독립 난수 생성기"""
    return np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, t, k]))


def sample_shell_point(rng: np.random.Generator, shell: ShellVolume) -> np.ndarray:
    """outer 박스에서 균등 추출 후 inner 박스 안의 점은 버리는 기각 표본추출"""
    while True:
        candidates = rng.uniform(shell.outer.min, shell.outer.max, size=(REJECTION_BATCH, 3))
        accepted = ~shell.inner.contains(candidates)
        if accepted.any():
            return candidates[int(np.argmax(accepted))]


def sample_reference_pose(
    cfg: ReferenceSamplerConfig, ego_box: Aabb, t: int, k: int = 0
) -> RigidTransform:
    """
    기준 센서→차량 변환 - 위치는 껍질 안에서 균등, yaw/pitch/roll은 설정 범위에서 균등
    """
    rng = reference_rng(cfg.seed, t, k)
    shell = ShellVolume.around(ego_box, cfg.shell_margin_up, cfg.shell_margin_horizontal)
    position = sample_shell_point(rng, shell)
    yaw = rng.uniform(*cfg.yaw_range)
    pitch = rng.uniform(*cfg.pitch_range)
    roll = rng.uniform(*cfg.roll_range)
    return RigidTransform.from_xyz_ypr(position, (yaw, pitch, roll))


def ego_bounding_box(ego: Actor) -> Aabb:
    return Aabb.from_points(ego.mesh.vertices)


def reference_scan(
    cfg: ReferenceSamplerConfig,
    world: WorldSnapshot,
    ego: Actor,
    t: int,
    threads: int = 1,
) -> PointCloud:
    """
    기준 클라우드 (차량 좌표계)

    ego 액터에 맞은 점은 바운딩 박스가 아니라 광선의 액터 귀속 정보로 제거한다.
    count > 1 이면 여러 기준 센서의 클라우드를 합친다.
    """
    ego_pose = ego.pose_at(t)
    ego_box = ego_bounding_box(ego)
    ego_index = world.actor_index(ego.actor_id)
    clouds = []
    for k in range(cfg.count):
        pose = sample_reference_pose(cfg, ego_box, t, k)
        sensor_points, hits = scan_from_pose(cfg.lidar, world, compose(ego_pose, pose), threads)
        keep = hits.hit & (hits.actors != ego_index)
        clouds.append(PointCloud(pose.apply(sensor_points[keep]), VEHICLE, t))
        logger.debug(
            "reference scan t=%d k=%d rays=%d kept=%d ego_hits=%d",
            t,
            k,
            cfg.lidar.ray_count,
            int(keep.sum()),
            int((hits.actors == ego_index).sum()),
        )
    return fuse_clouds(clouds, VEHICLE, t)

"""
회전형 LiDAR 모델

센서 좌표계는 차량 좌표계와 같은 규약(x 전방, y 좌측, z 상방)을 따른다.
채널은 [elevation_min, elevation_max] 구간에 양 끝을 포함해 균등 배치하고,
방위각은 [azimuth_min, azimuth_max) 구간을 같은 폭의 칸으로 나눠 칸 중앙에서 쏜다.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from apps.geometry.clouds import VEHICLE, PointCloud
from apps.geometry.exceptions import ContractViolation
from apps.geometry.transforms import RigidTransform, compose
from apps.scene.world import RayHits, WorldSnapshot, cast_rays

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LidarSpec:
    """
    LiDAR 사양 - 각도는 degree, mount는 센서→차량 변환
    """

    channels: int
    points_per_channel: int
    elevation_min: float
    elevation_max: float
    azimuth_min: float = -180.0
    azimuth_max: float = 180.0
    max_range: float = 120.0
    mount: RigidTransform = field(default_factory=RigidTransform.identity)
    name: str = "lidar"

    def __post_init__(self):
        if self.channels < 1 or self.points_per_channel < 1:
            raise ContractViolation("channels와 points_per_channel은 1 이상이어야 합니다.")
        if self.elevation_min > self.elevation_max:
            raise ContractViolation(
                f"elevation_min ≤ elevation_max 조건 위반: "
                f"{self.elevation_min} > {self.elevation_max}"
            )
        if self.azimuth_min > self.azimuth_max:
            raise ContractViolation("azimuth_min ≤ azimuth_max 조건 위반")
        if not self.max_range > 0:
            raise ContractViolation(f"max_range는 양수여야 합니다: {self.max_range}")

    @property
    def ray_count(self) -> int:
        return self.channels * self.points_per_channel

    @cached_property
    def elevations(self) -> np.ndarray:
        """채널 고도각 (degree)"""
        return np.linspace(self.elevation_min, self.elevation_max, self.channels)

    @cached_property
    def azimuths(self) -> np.ndarray:
        """방위각 칸 중앙 (degree)"""
        step = (self.azimuth_max - self.azimuth_min) / self.points_per_channel
        return self.azimuth_min + (np.arange(self.points_per_channel) + 0.5) * step

    @cached_property
    def directions(self) -> np.ndarray:
        """센서 좌표계 단위 방향 (channels * points_per_channel, 3), 채널 우선 순서"""
        elevation = np.radians(self.elevations)[:, None]
        azimuth = np.radians(self.azimuths)[None, :]
        directions = np.stack(
            np.broadcast_arrays(
                np.cos(elevation) * np.cos(azimuth),
                np.cos(elevation) * np.sin(azimuth),
                np.sin(elevation),
            ),
            axis=-1,
        ).reshape(-1, 3)
        directions.setflags(write=False)
        return directions


def scan_from_pose(
    spec: LidarSpec,
    world: WorldSnapshot,
    world_from_sensor: RigidTransform,
    threads: int = 1,
) -> tuple[np.ndarray, RayHits]:
    """
    월드 자세에서 스캔해 (센서 좌표계 교차점, RayHits) 반환 - 빗나간 광선 포함 전체
    """
    directions = spec.directions
    hits = cast_rays(
        world,
        world_from_sensor.translation,
        world_from_sensor.apply_direction(directions),
        spec.max_range,
        threads=threads,
    )
    with np.errstate(invalid="ignore"):
        sensor_points = directions * hits.distances[:, None]
    return sensor_points, hits


def lidar_scan(
    spec: LidarSpec, world: WorldSnapshot, ego_pose: RigidTransform, threads: int = 1
) -> PointCloud:
    """
    차량 좌표계 LiDAR 포인트 클라우드 - 빗나간 광선은 제외

    ego_pose: 차량→월드 변환. 교차점은 센서 좌표계에서 구한 뒤 mount로 차량 좌표계에 옮긴다.
    """
    sensor_points, hits = scan_from_pose(spec, world, compose(ego_pose, spec.mount), threads)
    points = spec.mount.apply(sensor_points[hits.hit])
    logger.debug(
        "lidar scan sensor=%s t=%d rays=%d points=%d",
        spec.name,
        world.timestep,
        spec.ray_count,
        points.shape[0],
    )
    return PointCloud(points, VEHICLE, world.timestep)

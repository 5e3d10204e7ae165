"""
포인트 클라우드 컨테이너와 좌표계 태그
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import ContractViolation
from .transforms import RigidTransform, as_vec3


class FrameKind(Enum):
    SENSOR = "sensor"
    VEHICLE = "vehicle"
    WORLD = "world"


@dataclass(frozen=True)
class Frame:
    """
    좌표계 태그 - Sensor(id), Vehicle, World
    """

    kind: FrameKind
    sensor_id: str | None = None

    @classmethod
    def sensor(cls, sensor_id: str) -> "Frame":
        return cls(FrameKind.SENSOR, sensor_id)

    @classmethod
    def vehicle(cls) -> "Frame":
        return cls(FrameKind.VEHICLE)

    @classmethod
    def world(cls) -> "Frame":
        return cls(FrameKind.WORLD)

    def __str__(self):
        if self.kind is FrameKind.SENSOR:
            return f"sensor({self.sensor_id})"
        return self.kind.value


VEHICLE = Frame.vehicle()
WORLD = Frame.world()


def _as_points(points) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return np.empty((0, 3), dtype=np.float64)
    points = points.reshape(-1, 3)
    if not np.all(np.isfinite(points)):
        raise ContractViolation("포인트 클라우드에 NaN/무한대 좌표가 있습니다.")
    return points


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    좌표계 태그와 타임스텝을 가진 3D 점 집합

    비어 있을 수 있다 (모든 광선이 최대 거리까지 빠져나간 경우).
    """

    points: np.ndarray
    frame: Frame = VEHICLE
    timestep: int = 0

    def __post_init__(self):
        points = _as_points(self.points)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self):
        return self.points.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @classmethod
    def empty(cls, frame: Frame = VEHICLE, timestep: int = 0) -> "PointCloud":
        return cls(np.empty((0, 3)), frame, timestep)

    def require(self, frame: Frame, timestep: int | None = None) -> "PointCloud":
        """좌표계(및 타임스텝)가 기대와 다르면 ContractViolation"""
        if self.frame != frame:
            raise ContractViolation(f"좌표계 불일치: {self.frame} != {frame}")
        if timestep is not None and self.timestep != timestep:
            raise ContractViolation(f"타임스텝 불일치: {self.timestep} != {timestep}")
        return self


def transform_cloud(
    cloud: PointCloud, transform: RigidTransform, target: Frame, source: Frame | None = None
) -> PointCloud:
    """
    클라우드의 모든 점에 p' = R·p + t 적용

    source를 주면 클라우드의 좌표계가 변환의 출발 좌표계와 같은지 확인한다.
    """
    if source is not None and cloud.frame != source:
        raise ContractViolation(f"좌표계 불일치: 클라우드 {cloud.frame}, 변환 출발 {source}")
    return PointCloud(transform.apply(cloud.points), target, cloud.timestep)


def fuse_clouds(clouds, frame: Frame = VEHICLE, timestep: int = 0) -> PointCloud:
    """같은 좌표계/타임스텝의 클라우드 합집합"""
    clouds = list(clouds)
    for cloud in clouds:
        cloud.require(frame, timestep)
    if not clouds:
        return PointCloud.empty(frame, timestep)
    return PointCloud(np.concatenate([c.points for c in clouds], axis=0), frame, timestep)


@dataclass(frozen=True, eq=False)
class Aabb:
    """축 정렬 바운딩 박스 (min ≤ max)"""

    min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    max: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        lo, hi = as_vec3(self.min), as_vec3(self.max)
        if np.any(lo > hi):
            raise ContractViolation(f"min ≤ max 조건 위반: {lo.tolist()} / {hi.tolist()}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, points) -> "Aabb":
        points = _as_points(points)
        if points.shape[0] == 0:
            raise ContractViolation("빈 점 집합의 바운딩 박스는 정의되지 않습니다.")
        return cls(points.min(axis=0), points.max(axis=0))

    @property
    def size(self) -> np.ndarray:
        return self.max - self.min

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    def contains(self, points) -> np.ndarray:
        """닫힌 박스 포함 여부 (N,) bool"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.all((points >= self.min) & (points <= self.max), axis=1)

    def enlarged(self, up: float = 0.0, horizontal: float = 0.0, down: float = 0.0) -> "Aabb":
        delta_lo = np.array([horizontal, horizontal, down])
        delta_hi = np.array([horizontal, horizontal, up])
        return Aabb(self.min - delta_lo, self.max + delta_hi)

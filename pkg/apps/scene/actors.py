"""
장면 액터와 궤적 (타임스텝 → 로컬→월드 변환)
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from apps.geometry.exceptions import ContractViolation, ScenarioError
from apps.geometry.transforms import RigidTransform, as_vec3

from .meshes import TriangleMesh


class Trajectory(ABC):
    """타임스텝별 자세를 돌려주는 궤적"""

    @abstractmethod
    def pose_at(self, t: int) -> RigidTransform:
        """타임스텝 t의 로컬→월드 변환"""

    def defined_for(self, timesteps: int) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class StaticTrajectory(Trajectory):
    pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def pose_at(self, t: int) -> RigidTransform:
        return self.pose


@dataclass(frozen=True, eq=False)
class LinearTrajectory(Trajectory):
    """
    등속 직선 운동 - 방향은 시작 자세로 고정, 위치는 start + velocity·dt·t
    """

    start: RigidTransform
    velocity: np.ndarray
    dt: float = 0.1

    def __post_init__(self):
        if self.dt <= 0:
            raise ContractViolation(f"dt는 양수여야 합니다: {self.dt}")
        object.__setattr__(self, "velocity", as_vec3(self.velocity))

    def pose_at(self, t: int) -> RigidTransform:
        return RigidTransform(
            self.start.rotation, self.start.translation + self.velocity * (self.dt * t)
        )


@dataclass(frozen=True, eq=False)
class KeyframeTrajectory(Trajectory):
    """타임스텝별로 명시된 자세 - 누락된 타임스텝은 ScenarioError"""

    poses: dict

    def pose_at(self, t: int) -> RigidTransform:
        try:
            return self.poses[t]
        except KeyError:
            raise ScenarioError(f"타임스텝 {t}의 궤적이 정의되지 않았습니다.") from None

    def defined_for(self, timesteps: int) -> bool:
        return all(t in self.poses for t in range(timesteps))


@dataclass(frozen=True, eq=False)
class Actor:
    """
    장면 액터

    ego 차량의 로컬 좌표계가 곧 차량 좌표계다.
    """

    actor_id: str
    mesh: TriangleMesh
    trajectory: Trajectory = field(default_factory=StaticTrajectory)
    is_ego: bool = False

    def pose_at(self, t: int) -> RigidTransform:
        return self.trajectory.pose_at(t)


def find_ego(actors) -> Actor:
    """ego 액터는 정확히 하나여야 한다"""
    egos = [actor for actor in actors if actor.is_ego]
    if len(egos) != 1:
        raise ScenarioError(f"ego 액터는 정확히 하나여야 합니다 (현재 {len(egos)}개)")
    return egos[0]

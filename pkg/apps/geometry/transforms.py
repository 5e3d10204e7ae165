"""
강체 변환 (회전 + 평행이동)

좌표계 규약:
    차량 좌표계 - x 전방, y 좌측, z 상방, 원점은 ego 바운딩 박스 중심의 지면 투영점
    카메라 좌표계 - z 전방, x 우측, y 하방

각도는 외부 인터페이스에서 항상 degree로 받고, 생성 시점에 한 번만 radian으로 바꾼다.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolation

ORTHONORMAL_TOLERANCE = 1e-9


def as_vec3(value) -> np.ndarray:
    """길이 3의 유한한 float64 벡터로 변환"""
    vec = np.asarray(value, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(vec)):
        raise ContractViolation(f"유한하지 않은 좌표입니다: {vec.tolist()}")
    return vec


def rotation_from_ypr(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    """
    yaw-pitch-roll (intrinsic Z-Y'-X'') 회전 행렬

    R = Rz(yaw) · Ry(pitch) · Rx(roll)
    """
    yaw, pitch, roll = (math.radians(a) for a in (yaw_deg, pitch_deg, roll_deg))
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ],
        dtype=np.float64,
    )


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """
    source 좌표계의 점을 target 좌표계로 옮기는 강체 변환 (p' = R·p + t)

    생성 후 변경 불가하며 스레드 간 공유해도 안전하다.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = as_vec3(self.translation)
        if not np.all(np.isfinite(rotation)):
            raise ContractViolation("회전 행렬에 유한하지 않은 값이 있습니다.")
        residual = np.abs(rotation.T @ rotation - np.eye(3)).max()
        det = np.linalg.det(rotation)
        if residual > ORTHONORMAL_TOLERANCE or abs(det - 1.0) > ORTHONORMAL_TOLERANCE:
            raise ContractViolation(
                f"회전 행렬이 정규직교가 아닙니다 (잔차={residual:.3e}, det={det:.12f})"
            )
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_translation(cls, xyz) -> "RigidTransform":
        return cls(np.eye(3), xyz)

    @classmethod
    def from_xyz_ypr(cls, xyz=(0.0, 0.0, 0.0), ypr_deg=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """위치(m)와 yaw/pitch/roll(degree)로 생성"""
        return cls(rotation_from_ypr(*ypr_deg), xyz)

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        """4x4 동차 변환 행렬로 생성"""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ContractViolation(f"4x4 행렬이 필요합니다: {matrix.shape}")
        return cls(matrix[:3, :3], matrix[:3, 3])

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def apply(self, points) -> np.ndarray:
        """(N, 3) 또는 (3,) 점에 변환 적용"""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def apply_direction(self, directions) -> np.ndarray:
        """방향 벡터에는 회전만 적용"""
        return np.asarray(directions, dtype=np.float64) @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        rotation_t = self.rotation.T
        return RigidTransform(rotation_t, -(rotation_t @ self.translation))

    def allclose(self, other: "RigidTransform", atol: float = 1e-9) -> bool:
        return np.allclose(self.rotation, other.rotation, atol=atol, rtol=0) and np.allclose(
            self.translation, other.translation, atol=atol, rtol=0
        )

    def __repr__(self):
        return (
            f"RigidTransform(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a ∘ b - b를 먼저, 그다음 a를 적용하는 변환"""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)

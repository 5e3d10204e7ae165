"""
삼각형 메시와 기본 도형 생성기

ASCII Wavefront 형식(v/f 행만, 삼각형 면)을 읽을 수 있다.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.geometry.exceptions import ArtifactIOError, ContractViolation, ParseError

logger = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-12

# 박스 12개 삼각형 (바깥쪽 법선), 꼭짓점 번호는 (x, y, z) 비트 순서
_BOX_TRIANGLES = np.array(
    [
        [0, 1, 2], [1, 3, 2],  # x-
        [4, 6, 5], [5, 6, 7],  # x+
        [0, 4, 1], [1, 4, 5],  # y-
        [2, 3, 6], [3, 7, 6],  # y+
        [0, 2, 4], [2, 6, 4],  # z-
        [1, 5, 3], [3, 5, 7],  # z+
    ],
    dtype=np.int64,
)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """
    로컬 좌표계(m)의 삼각형 메시

    모든 인덱스는 범위 내이고, 면적 1e-12 m² 미만의 퇴화 삼각형은 없다.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(vertices)):
            raise ContractViolation("메시 꼭짓점에 유한하지 않은 좌표가 있습니다.")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ContractViolation("삼각형 인덱스가 꼭짓점 범위를 벗어났습니다.")
        areas = triangle_areas(vertices[triangles])
        if np.any(areas < MIN_TRIANGLE_AREA):
            bad = int(np.argmax(areas < MIN_TRIANGLE_AREA))
            raise ContractViolation(f"퇴화 삼각형입니다 (인덱스 {bad}, 면적 {areas[bad]:.3e} m²)")
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    def __len__(self):
        return self.triangles.shape[0]

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))

    def corners(self) -> np.ndarray:
        """(T, 3, 3) 삼각형 꼭짓점 좌표"""
        return self.vertices[self.triangles]

    def merged(self, other: "TriangleMesh") -> "TriangleMesh":
        return TriangleMesh(
            np.concatenate([self.vertices, other.vertices]),
            np.concatenate([self.triangles, other.triangles + len(self.vertices)]),
        )


def triangle_areas(corners: np.ndarray) -> np.ndarray:
    if corners.size == 0:
        return np.empty(0)
    edge1 = corners[:, 1] - corners[:, 0]
    edge2 = corners[:, 2] - corners[:, 0]
    return 0.5 * np.linalg.norm(np.cross(edge1, edge2), axis=1)


def box(size, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """중심과 크기(m)로 정의되는 박스 (삼각형 12개)"""
    size = np.asarray(size, dtype=np.float64)
    if np.any(size <= 0):
        raise ContractViolation(f"박스 크기는 양수여야 합니다: {size.tolist()}")
    bits = np.array([[(i >> 2) & 1, (i >> 1) & 1, i & 1] for i in range(8)], dtype=np.float64)
    vertices = np.asarray(center, dtype=np.float64) + (bits - 0.5) * size
    return TriangleMesh(vertices, _BOX_TRIANGLES)


def ground_plane(extent: float) -> TriangleMesh:
    """z = 0 평면의 정사각형 [-extent, extent]² (삼각형 2개)"""
    if extent <= 0:
        raise ContractViolation(f"extent는 양수여야 합니다: {extent}")
    vertices = np.array(
        [
            [-extent, -extent, 0.0],
            [extent, -extent, 0.0],
            [extent, extent, 0.0],
            [-extent, extent, 0.0],
        ]
    )
    return TriangleMesh(vertices, np.array([[0, 1, 2], [0, 2, 3]]))


# 해치백 치수 (m) - 하부 박스와 뒤쪽으로 치우친 좁은 캐빈
HATCHBACK_CLEARANCE = 0.15
HATCHBACK_BODY = (4.5, 1.9, 0.8)
HATCHBACK_CABIN = (2.4, 1.7, 0.7)
HATCHBACK_CABIN_REAR_OFFSET = 0.4


def hatchback() -> TriangleMesh:
    """
    내장 ego 차량 메시

    차량 좌표계 원점(바운딩 박스 중심의 지면 투영점) 기준의 두 박스.
    캐빈이 하부 박스보다 좁고 뒤쪽에 있어서 보닛이 전방 하부 시야를 가린다.
    """
    length, width, height = HATCHBACK_BODY
    cabin_length, cabin_width, cabin_height = HATCHBACK_CABIN
    body_top = HATCHBACK_CLEARANCE + height
    body = box(HATCHBACK_BODY, (0.0, 0.0, HATCHBACK_CLEARANCE + height / 2))
    cabin_rear = -length / 2 + HATCHBACK_CABIN_REAR_OFFSET
    cabin = box(
        HATCHBACK_CABIN,
        (cabin_rear + cabin_length / 2, 0.0, body_top + cabin_height / 2),
    )
    return body.merged(cabin)


def load_obj(path) -> TriangleMesh:
    """Wavefront OBJ (v/f 행만) 로드 - 다른 행은 무시, 삼각형이 아닌 면은 오류"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ArtifactIOError(f"메시 파일이 없습니다: {path}") from exc
    except OSError as exc:
        raise ArtifactIOError(f"메시 파일을 읽을 수 없습니다: {path} ({exc})") from exc

    vertices, faces = [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError("꼭짓점 좌표가 3개 미만입니다")
                vertices.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError("삼각형 면만 지원합니다")
                face = []
                for token in parts[1:]:
                    index = int(token.split("/")[0])
                    # OBJ 인덱스는 1부터, 음수는 끝에서부터
                    face.append(index - 1 if index > 0 else len(vertices) + index)
                faces.append(face)
        except ValueError as exc:
            raise ParseError(str(exc), path=path, offset=line_no) from exc

    logger.debug("obj loaded path=%s vertices=%d triangles=%d", path, len(vertices), len(faces))
    try:
        return TriangleMesh(np.array(vertices), np.array(faces, dtype=np.int64))
    except ContractViolation as exc:
        raise ParseError(str(exc), path=path, offset=0) from exc

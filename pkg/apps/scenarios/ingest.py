"""
외부 포인트 클라우드 파일 입출력

지원 형식
  - 텍스트 XYZ: 한 줄에 "x y z" (미터), 빈 줄과 '#' 주석 줄은 무시
  - BSPC 바이너리(리틀 엔디언): 매직 b"BSPC", u32 점 개수, 개수 x 3 float64
읽어 들인 클라우드는 시뮬레이션 클라우드와 똑같은 지표 경로를 지난다.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.geometry.clouds import VEHICLE, Frame, PointCloud
from apps.geometry.exceptions import ArtifactIOError, ParseError
from apps.sensors.rig import sensor_cloud

logger = logging.getLogger(__name__)

BSPC_MAGIC = b"BSPC"
BSPC_HEADER = struct.Struct("<4sI")
BSPC_DTYPE = np.dtype("<f8")


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"포인트 클라우드 파일을 읽을 수 없습니다: {path} ({e})") from e


def parse_bspc(data: bytes, path="<bytes>") -> np.ndarray:
    if len(data) < BSPC_HEADER.size:
        raise ParseError("BSPC 헤더가 잘렸습니다.", path, len(data))
    magic, count = BSPC_HEADER.unpack_from(data)
    if magic != BSPC_MAGIC:
        raise ParseError(f"BSPC 매직이 아닙니다: {magic!r}", path, 0)
    expected = BSPC_HEADER.size + count * 3 * BSPC_DTYPE.itemsize
    if len(data) < expected:
        raise ParseError(
            f"점 {count}개에 필요한 {expected}바이트 중 {len(data)}바이트만 있습니다.",
            path,
            len(data),
        )
    if len(data) > expected:
        raise ParseError("점 데이터 뒤에 남는 바이트가 있습니다.", path, expected)
    values = np.frombuffer(data, dtype=BSPC_DTYPE, count=count * 3, offset=BSPC_HEADER.size)
    return values.astype(np.float64).reshape(count, 3)


def parse_xyz(text: str, path="<text>") -> np.ndarray:
    rows = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise ParseError(
                f"값 3개가 필요하지만 {len(tokens)}개입니다: {stripped!r}", path, line_number
            )
        try:
            rows.append([float(token) for token in tokens])
        except ValueError:
            raise ParseError(
                f"숫자가 아닌 값이 있습니다: {stripped!r}", path, line_number
            ) from None
    if not rows:
        return np.empty((0, 3))
    return np.asarray(rows, dtype=np.float64)


def ingest_cloud(path, frame: Frame = VEHICLE, timestep: int = 0) -> PointCloud:
    """
    파일에서 포인트 클라우드 읽기 - 형식은 파일 앞 4바이트(매직)로 판별

    좌표계와 타임스텝은 파일이 아니라 호출자가 주는 메타데이터를 따른다.
    """
    path = Path(path)
    data = _read_bytes(path)
    if data.startswith(BSPC_MAGIC):
        points = parse_bspc(data, path)
        kind = "bspc"
    else:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError("텍스트 XYZ 파일이 UTF-8이 아닙니다.", path, e.start) from None
        points = parse_xyz(text, path)
        kind = "xyz"
    logger.debug("cloud ingested path=%s format=%s points=%d", path, kind, points.shape[0])
    try:
        return PointCloud(points, frame, timestep)
    except ValueError as e:
        raise ParseError(str(e), path, 0) from e


def write_bspc(path, points) -> Path:
    path = Path(path)
    points = np.ascontiguousarray(np.asarray(points, dtype=BSPC_DTYPE).reshape(-1, 3))
    try:
        with path.open("wb") as handle:
            handle.write(BSPC_HEADER.pack(BSPC_MAGIC, points.shape[0]))
            handle.write(points.tobytes())
    except OSError as e:
        raise ArtifactIOError(f"포인트 클라우드 파일을 쓸 수 없습니다: {path} ({e})") from e
    return path


def write_xyz(path, points) -> Path:
    path = Path(path)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    lines = "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in points.tolist())
    try:
        path.write_text(lines, encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"포인트 클라우드 파일을 쓸 수 없습니다: {path} ({e})") from e
    return path


@dataclass(frozen=True)
class RecordedSensor:
    """
    외부 시뮬레이터가 기록한 센서 클라우드 - path_template의 {t}에 타임스텝이 들어간다
    """

    name: str
    path_template: str
    frame: Frame = VEHICLE

    def path_for(self, t: int) -> Path:
        return Path(self.path_template.format(t=t))


@sensor_cloud.register
def _(spec: RecordedSensor, world, ego_pose, threads=1) -> PointCloud:
    return ingest_cloud(spec.path_for(world.timestep), spec.frame, world.timestep)

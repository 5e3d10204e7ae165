"""
래스터 CSV / 이미지 출력

CSV 형식
  # config_sha256=...,seed=...,timesteps=...     (재실행용 메타데이터)
  x_min,y_min,cell_size,slab,value_kind
  <값 행>
  nx개의 행, 각 행은 ny개의 값 (x 오름차순 행, y 오름차순 열), 데이터 없음은 "nan"
이미지는 조감도 방향(+x 위쪽, +y 왼쪽)의 PPM이며 값은 명시된 범위에서 선형으로 밝기에 대응한다.
"""

import csv
import io
import logging
import math
from pathlib import Path

import numpy as np
from PIL import Image

from apps.coverage.grids import Raster
from apps.geometry.exceptions import ArtifactIOError, ContractViolation, ParseError

logger = logging.getLogger(__name__)

HEADER = ["x_min", "y_min", "cell_size", "slab", "value_kind"]
NO_DATA_COLOR = (255, 0, 255)
STYLES = ("probability", "radius", "histogram")
STYLE_FOR_KIND = {
    "detection_probability": "probability",
    "mean_radius": "radius",
    "point_histogram": "histogram",
}


def _format_value(value: float) -> str:
    return "nan" if math.isnan(value) else repr(float(value))


def raster_to_csv(raster: Raster) -> str:
    buffer = io.StringIO()
    if raster.metadata:
        pairs = ",".join(f"{key}={value}" for key, value in raster.metadata.items())
        buffer.write(f"# {pairs}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerow(
        [
            repr(float(raster.x_min)),
            repr(float(raster.y_min)),
            repr(float(raster.cell_size)),
            raster.slab,
            raster.value_kind,
        ]
    )
    for row in raster.values.tolist():
        writer.writerow([_format_value(value) for value in row])
    return buffer.getvalue()


def write_raster_csv(raster: Raster, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(raster_to_csv(raster), encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"래스터 CSV를 쓸 수 없습니다: {path} ({e})") from e
    return path


def parse_raster_csv(text: str, path="<csv>") -> Raster:
    metadata = {}
    body = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            for pair in line[1:].strip().split(","):
                if "=" in pair:
                    key, value = pair.split("=", 1)
                    metadata[key.strip()] = value.strip()
            continue
        if line.strip():
            body.append((line_number, line))

    rows = list(csv.reader([line for _, line in body]))
    if len(rows) < 2 or rows[0] != HEADER:
        raise ParseError("래스터 CSV 헤더가 올바르지 않습니다.", path, body[0][0] if body else 1)
    try:
        x_min, y_min, cell_size = (float(v) for v in rows[1][:3])
        slab, value_kind = rows[1][3], rows[1][4]
    except (ValueError, IndexError):
        raise ParseError("래스터 CSV 값 행이 올바르지 않습니다.", path, body[1][0]) from None

    values = []
    for (line_number, _), row in zip(body[2:], rows[2:]):
        try:
            values.append([float(v) for v in row])
        except ValueError:
            raise ParseError("숫자가 아닌 칸 값이 있습니다.", path, line_number) from None
    if not values or len({len(row) for row in values}) != 1:
        raise ParseError("래스터 행 길이가 일정하지 않습니다.", path, body[-1][0])

    return Raster(
        values=np.asarray(values, dtype=np.float64),
        x_min=x_min,
        y_min=y_min,
        cell_size=cell_size,
        slab=slab,
        value_kind=value_kind,
        metadata=metadata,
    )


def read_raster_csv(path) -> Raster:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"래스터 CSV를 읽을 수 없습니다: {path} ({e})") from e
    return parse_raster_csv(text, path)


def value_range(raster: Raster, style: str, vmax: float | None = None) -> tuple:
    """밝기 대응 범위 (vmin, vmax) - probability는 [0, 1], 나머지는 [0, 최댓값]"""
    if style not in STYLES:
        raise ContractViolation(f"지원하지 않는 스타일입니다: {style}")
    if vmax is None:
        if style == "probability":
            vmax = 1.0
        else:
            finite = raster.values[np.isfinite(raster.values)]
            vmax = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
    if not vmax > 0:
        raise ContractViolation(f"vmax는 양수여야 합니다: {vmax}")
    return 0.0, float(vmax)


def raster_image(
    raster: Raster, style: str | None = None, vmax: float | None = None
) -> Image.Image:
    """
    조감도 RGB 이미지 - 회색조 밝기, 데이터 없는 칸은 마젠타
    """
    style = style or STYLE_FOR_KIND.get(raster.value_kind, "radius")
    low, high = value_range(raster, style, vmax)
    oriented = raster.values[::-1, ::-1]
    no_data = np.isnan(oriented)
    scaled = np.clip((np.nan_to_num(oriented, nan=low) - low) / (high - low), 0.0, 1.0)
    gray = np.floor(scaled * 255.0 + 1e-9).astype(np.uint8)
    pixels = np.repeat(gray[:, :, None], 3, axis=2)
    pixels[no_data] = NO_DATA_COLOR
    return Image.fromarray(pixels)


def write_raster_image(
    raster: Raster, path, style: str | None = None, vmax: float | None = None
) -> Path:
    path = Path(path)
    image = raster_image(raster, style, vmax)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="PPM")
    except OSError as e:
        raise ArtifactIOError(f"래스터 이미지를 쓸 수 없습니다: {path} ({e})") from e
    return path


def emit_raster(
    raster: Raster, path, style: str | None = None, vmax: float | None = None
) -> tuple:
    """
    path(확장자 무시)에 .csv와 .ppm을 함께 쓴다. (csv 경로, 이미지 경로) 반환
    """
    path = Path(path)
    csv_path = write_raster_csv(raster, path.with_suffix(".csv"))
    image_path = write_raster_image(raster, path.with_suffix(".ppm"), style, vmax)
    logger.info("raster emitted csv=%s image=%s kind=%s", csv_path, image_path, raster.value_kind)
    return csv_path, image_path


def render(csv_path, style: str | None = None, vmax: float | None = None, output=None) -> Path:
    """CSV 래스터에서 이미지를 다시 그린다 (기본 출력: 같은 이름의 .ppm)"""
    raster = read_raster_csv(csv_path)
    output = Path(output) if output else Path(csv_path).with_suffix(".ppm")
    return write_raster_image(raster, output, style, vmax)

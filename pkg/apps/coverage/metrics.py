"""
사각 반경(blind spot radius)과 관심 영역(ROI) 요약
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from apps.geometry.clouds import PointCloud
from apps.geometry.exceptions import ContractViolation
from apps.spatial.kdtree import build, nearest_batch

from .grids import Raster

logger = logging.getLogger(__name__)

ROI_BOUNDS_SLACK = 1e-9


def blind_spot_radii(reference: PointCloud, sensors: PointCloud, workers: int = 1) -> np.ndarray:
    """
    기준 점마다 가장 가까운 센서 검출점까지의 거리 r

    두 클라우드는 같은 좌표계와 타임스텝이어야 한다. 센서 클라우드가 비어 있으면 모든 r = inf.
    반환 배열은 reference.points와 같은 순서다.
    """
    sensors.require(reference.frame, reference.timestep)
    tree = build(sensors.points)
    return nearest_batch(tree, reference.points, workers=workers).distances


@dataclass(frozen=True)
class Roi:
    """
    격자 평면 위의 사각 영역 - 칸 중심이 [x_min, x_max] x [y_min, y_max] 안에 있는 칸을 포함
    """

    name: str
    grid: str
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ContractViolation(f"ROI '{self.name}' 범위가 올바르지 않습니다.")

    def cell_mask(self, raster: Raster) -> np.ndarray:
        spec = raster.grid_spec()
        if (
            self.x_min < spec.x_min - ROI_BOUNDS_SLACK
            or self.x_max > spec.x_max + ROI_BOUNDS_SLACK
            or self.y_min < spec.y_min - ROI_BOUNDS_SLACK
            or self.y_max > spec.y_max + ROI_BOUNDS_SLACK
        ):
            raise ContractViolation(f"ROI '{self.name}'가 격자 '{self.grid}' 범위를 벗어납니다.")
        xs = spec.x_centers()
        ys = spec.y_centers()
        in_x = (xs >= self.x_min) & (xs <= self.x_max)
        in_y = (ys >= self.y_min) & (ys <= self.y_max)
        return in_x[:, None] & in_y[None, :]


# 거리별 기본 영역 (가로:세로 = 2:1)
REGION_PRESETS = {
    "close range (20 m)": (0.0, 20.0, -5.0, 5.0),
    "medium range (80 m)": (0.0, 80.0, -20.0, 20.0),
    "long range (160 m)": (0.0, 160.0, -40.0, 40.0),
    "surround (10 m)": (-10.0, 10.0, -10.0, 10.0),
}


def roi_preset(region: str, slab: str, grid: Optional[str] = None) -> Roi:
    """예: roi_preset("close range (20 m)", "ground") → 'close range (20 m) ground'"""
    try:
        x_min, x_max, y_min, y_max = REGION_PRESETS[region]
    except KeyError:
        raise ContractViolation(f"알 수 없는 ROI 영역입니다: {region}") from None
    return Roi(f"{region} {slab}", grid or slab, x_min, x_max, y_min, y_max)


@dataclass(frozen=True)
class RoiSummary:
    """
    ROI 요약 - 비어 있지 않은 칸의 단순(비가중) 평균, 데이터가 없으면 두 평균 모두 None
    """

    roi: str
    grid: str
    mean_blind_spot_radius: Optional[float]
    mean_detection_probability: Optional[float]
    nonempty_cell_count: int

    @property
    def has_data(self) -> bool:
        return self.nonempty_cell_count > 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RoiSummary":
        return cls(
            roi=data["roi"],
            grid=data["grid"],
            mean_blind_spot_radius=data.get("mean_blind_spot_radius"),
            mean_detection_probability=data.get("mean_detection_probability"),
            nonempty_cell_count=int(data.get("nonempty_cell_count", 0)),
        )


def summarize(mean_radius: Raster, detection_probability: Raster, roi: Roi) -> RoiSummary:
    """ROI 안 비어 있지 않은 칸들의 평균 반경과 평균 검출 확률"""
    if mean_radius.shape != detection_probability.shape:
        raise ContractViolation("평균 반경과 검출 확률 래스터의 크기가 다릅니다.")
    mask = roi.cell_mask(mean_radius) & mean_radius.nonempty
    count = int(mask.sum())
    if count == 0:
        logger.info("roi has no data roi=%r grid=%s", roi.name, roi.grid)
        return RoiSummary(roi.name, roi.grid, None, None, 0)
    return RoiSummary(
        roi=roi.name,
        grid=roi.grid,
        mean_blind_spot_radius=float(np.mean(mean_radius.values[mask])),
        mean_detection_probability=float(np.mean(detection_probability.values[mask])),
        nonempty_cell_count=count,
    )

"""
조감도(bird's-eye) 격자 누적기

기준 점 q와 사각 반경 r의 쌍을 (x, y) 격자 칸과 수직 구간(slab)으로 나눠 모은다.
칸과 slab은 모두 반열린 구간 [min, max) 이다.
타임스텝마다 칸별 부분합을 bincount로 만들고 타임스텝 순서대로 더하므로
같은 입력 순서면 부동소수점 결과가 항상 같다.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from apps.geometry.exceptions import ContractViolation

logger = logging.getLogger(__name__)

AGGREGATIONS = ("mean", "max")
AVERAGINGS = ("pooled", "nested")
CELL_COUNT_SLACK = 1e-9


@dataclass(frozen=True)
class VerticalSlab:
    name: str
    z_min: float
    z_max: float

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ContractViolation(f"slab '{self.name}': z_min < z_max 조건 위반")

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (z >= self.z_min) & (z < self.z_max)


GROUND = VerticalSlab("ground", -0.5, 0.5)
OBSTACLES = VerticalSlab("obstacles", 0.5, 2.0)
DEFAULT_SLABS = {GROUND.name: GROUND, OBSTACLES.name: OBSTACLES}


@dataclass(frozen=True)
class GridSpec:
    """
    차량 좌표계 평면 격자 - 칸 수는 ceil(extent / cell_size)
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cell_size: float

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ContractViolation(f"cell_size는 양수여야 합니다: {self.cell_size}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ContractViolation("격자 범위(extent)는 양수여야 합니다.")

    @property
    def nx(self) -> int:
        return math.ceil((self.x_max - self.x_min) / self.cell_size - CELL_COUNT_SLACK)

    @property
    def ny(self) -> int:
        return math.ceil((self.y_max - self.y_min) / self.cell_size - CELL_COUNT_SLACK)

    @property
    def shape(self) -> tuple:
        return self.nx, self.ny

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.y_max - self.y_min)

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.cell_size

    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.cell_size

    def cell_of(self, x: float, y: float) -> tuple:
        """점이 속한 칸 (ix, iy), 격자 밖이면 None"""
        flat, inside = self.flat_indices(np.array([[x, y, 0.0]]))
        if not inside[0]:
            return None
        return divmod(int(flat[0]), self.ny)

    def flat_indices(self, points: np.ndarray) -> tuple:
        """(평탄화된 칸 인덱스, 격자 안 여부) - 격자 밖 점의 인덱스는 의미 없음"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        x, y = points[:, 0], points[:, 1]
        ix = np.floor((x - self.x_min) / self.cell_size).astype(np.int64)
        iy = np.floor((y - self.y_min) / self.cell_size).astype(np.int64)
        inside = (
            (x >= self.x_min)
            & (x < self.x_max)
            & (y >= self.y_min)
            & (y < self.y_max)
            & (ix >= 0)
            & (ix < self.nx)
            & (iy >= 0)
            & (iy < self.ny)
        )
        return ix * self.ny + iy, inside


@dataclass(frozen=True, eq=False)
class Raster:
    """
    완성된 격자 값 (nx, ny) - values[ix, iy], 데이터 없는 칸은 NaN
    """

    values: np.ndarray
    x_min: float
    y_min: float
    cell_size: float
    slab: str
    value_kind: str
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def nonempty(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def grid_spec(self) -> GridSpec:
        nx, ny = self.values.shape
        return GridSpec(
            self.x_min,
            self.x_min + nx * self.cell_size,
            self.y_min,
            self.y_min + ny * self.cell_size,
            self.cell_size,
        )

    def equals(self, other: "Raster") -> bool:
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
            and (self.x_min, self.y_min, self.cell_size, self.slab, self.value_kind)
            == (other.x_min, other.y_min, other.cell_size, other.slab, other.value_kind)
        )


@dataclass(frozen=True, eq=False)
class CoverageRasters:
    mean_radius: Raster
    detection_probability: Raster
    point_histogram: Raster

    def __iter__(self):
        return iter((self.mean_radius, self.detection_probability, self.point_histogram))


class CoverageGrid:
    """
    한 격자 x 한 slab의 누적기

    aggregation: "mean"(기본) 또는 "max"(칸별 최악 r)
    averaging: "pooled"(기본, 모든 타임스텝의 표본을 한데 모아 평균) 또는
               "nested"(칸을 관측한 타임스텝마다 평균을 낸 뒤 그 평균들의 평균)
    """

    def __init__(
        self,
        spec: GridSpec,
        slab: VerticalSlab,
        name: str = "",
        aggregation: str = "mean",
        averaging: str = "pooled",
    ):
        if aggregation not in AGGREGATIONS:
            raise ContractViolation(f"지원하지 않는 aggregation입니다: {aggregation}")
        if averaging not in AVERAGINGS:
            raise ContractViolation(f"지원하지 않는 averaging입니다: {averaging}")
        self.spec = spec
        self.slab = slab
        self.name = name or slab.name
        self.aggregation = aggregation
        self.averaging = averaging
        self.r_cap = spec.diagonal

        cells = spec.nx * spec.ny
        self.sum_r = np.zeros(cells)
        self.max_r = np.zeros(cells)
        self.hit_count = np.zeros(cells, dtype=np.int64)
        self.probe_count = np.zeros(cells, dtype=np.int64)
        self.sum_of_means = np.zeros(cells)
        self.sum_of_probabilities = np.zeros(cells)
        self.timesteps_with_probes = np.zeros(cells, dtype=np.int64)
        self.point_count = np.zeros(cells, dtype=np.int64)
        self.detection_frames = 0
        self.clamped = 0

    @property
    def cells(self) -> int:
        return self.sum_r.shape[0]

    def _select(self, points: np.ndarray) -> tuple:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        flat, inside = self.spec.flat_indices(points)
        keep = inside & self.slab.contains(points[:, 2])
        return flat[keep], keep

    def accumulate(self, points, radii, r_thresh: float) -> int:
        """
        한 타임스텝의 (q, r) 표본 누적 - 격자/slab 밖 표본은 무시, 누적한 표본 수 반환

        r은 격자 대각선 길이로 잘라서(clamp) 더하고, 임계값 비교는 자르기 전 r로 한다.
        """
        radii = np.asarray(radii, dtype=np.float64).reshape(-1)
        cell, keep = self._select(points)
        if cell.size == 0:
            return 0
        r = radii[keep]
        if np.any(r < 0) or np.any(np.isnan(r)):
            raise ContractViolation("사각 반경 r은 0 이상이어야 합니다.")

        over = r > self.r_cap
        self.clamped += int(over.sum())
        r_clamped = np.where(over, self.r_cap, r)
        hits = (r <= r_thresh).astype(np.float64)

        partial_sum = np.bincount(cell, weights=r_clamped, minlength=self.cells)
        partial_hits = np.bincount(cell, weights=hits, minlength=self.cells)
        partial_probes = np.bincount(cell, minlength=self.cells)

        self.sum_r += partial_sum
        self.hit_count += partial_hits.astype(np.int64)
        self.probe_count += partial_probes
        np.maximum.at(self.max_r, cell, r_clamped)

        probed = partial_probes > 0
        self.sum_of_means[probed] += partial_sum[probed] / partial_probes[probed]
        self.sum_of_probabilities[probed] += partial_hits[probed] / partial_probes[probed]
        self.timesteps_with_probes[probed] += 1
        return int(cell.size)

    def accumulate_detections(self, sensor_points) -> None:
        """한 타임스텝의 센서 검출점 분포 (point histogram)"""
        cell, _ = self._select(sensor_points)
        self.point_count += np.bincount(cell, minlength=self.cells)
        self.detection_frames += 1

    def merge(self, other: "CoverageGrid") -> None:
        """같은 설정의 누적기 합치기 - 호출 순서가 곧 합산 순서"""
        if other.spec != self.spec or other.slab != self.slab:
            raise ContractViolation("격자 또는 slab이 다른 누적기는 합칠 수 없습니다.")
        self.sum_r += other.sum_r
        np.maximum(self.max_r, other.max_r, out=self.max_r)
        self.hit_count += other.hit_count
        self.probe_count += other.probe_count
        self.sum_of_means += other.sum_of_means
        self.sum_of_probabilities += other.sum_of_probabilities
        self.timesteps_with_probes += other.timesteps_with_probes
        self.point_count += other.point_count
        self.detection_frames += other.detection_frames
        self.clamped += other.clamped

    def _raster(self, flat_values: np.ndarray, value_kind: str) -> Raster:
        return Raster(
            values=flat_values.reshape(self.spec.shape),
            x_min=self.spec.x_min,
            y_min=self.spec.y_min,
            cell_size=self.spec.cell_size,
            slab=self.slab.name,
            value_kind=value_kind,
        )

    def finalize(self) -> CoverageRasters:
        """평균 반경 / 검출 확률 / 점 분포 래스터 - 관측되지 않은 칸은 NaN"""
        mean = np.full(self.cells, np.nan)
        probability = np.full(self.cells, np.nan)
        probed = self.probe_count > 0

        if self.aggregation == "max":
            mean[probed] = self.max_r[probed]
        elif self.averaging == "nested":
            mean[probed] = self.sum_of_means[probed] / self.timesteps_with_probes[probed]
        else:
            mean[probed] = self.sum_r[probed] / self.probe_count[probed]

        if self.averaging == "nested":
            probability[probed] = (
                self.sum_of_probabilities[probed] / self.timesteps_with_probes[probed]
            )
        else:
            probability[probed] = self.hit_count[probed] / self.probe_count[probed]

        if self.detection_frames:
            histogram = self.point_count / self.detection_frames
        else:
            histogram = np.full(self.cells, np.nan)

        logger.debug(
            "grid finalized name=%s slab=%s probed_cells=%d clamped=%d",
            self.name,
            self.slab.name,
            int(probed.sum()),
            self.clamped,
        )
        return CoverageRasters(
            mean_radius=self._raster(mean, "mean_radius"),
            detection_probability=self._raster(probability, "detection_probability"),
            point_histogram=self._raster(histogram, "point_histogram"),
        )

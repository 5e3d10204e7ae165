"""
시나리오 실행 파이프라인

타임스텝 t마다: 월드 구성 → 센서 클라우드 합집합 → 기준 클라우드 → 기준 점별 사각 반경 r → 격자 누적.
타임스텝 계산은 스레드 풀에서 병렬로 돌리고, 격자 누적은 메인 스레드에서 타임스텝 순서대로 한다.
그래서 결과는 스레드 수와 무관하게 바이트 단위로 같다.
"""

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import metadata as importlib_metadata
from pathlib import Path

import numba
import numpy as np
import scipy

from apps.coverage.metrics import blind_spot_radii, summarize
from apps.geometry.clouds import VEHICLE, PointCloud
from apps.geometry.exceptions import ArtifactIOError, ScenarioError
from apps.reference.sampler import reference_scan
from apps.scene.actors import find_ego
from apps.scene.world import build_world
from apps.sensors.rig import rig_cloud

from .config import ScenarioConfig
from .ingest import ingest_cloud
from .rasters import emit_raster
from .reports import CoverageReport, compare_reports, format_comparison, write_report

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_FACTOR = 2
COMPARISON_FILE = "comparison.txt"


def resolve_threads(threads: int | None) -> int:
    """0 또는 None이면 CPU 개수"""
    return threads if threads and threads > 0 else (os.cpu_count() or 1)


def package_versions() -> dict:
    try:
        version = importlib_metadata.version("blindspot")
    except importlib_metadata.PackageNotFoundError:
        version = "unknown"
    return {
        "blindspot": version,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


@dataclass(frozen=True, eq=False)
class TimestepSamples:
    """
    한 타임스텝의 결과 - 기준 점, 점별 r, 센서 검출점 (모두 차량 좌표계)
    """

    timestep: int
    reference: PointCloud
    radii: np.ndarray
    sensors: PointCloud


class ScenarioRunner:
    """
    설정 하나(variant 하나)를 실행한다

    samples(t)는 읽기 전용 상태만 쓰므로 여러 스레드에서 동시에 불러도 된다.
    """

    def __init__(self, config: ScenarioConfig, sensors=None):
        self.config = config
        self.actors = config.build_actors()
        self.ego = find_ego(self.actors)
        self.sensors = config.build_sensors() if sensors is None else list(sensors)
        self.reference = config.build_reference()
        for actor in self.actors:
            if not actor.trajectory.defined_for(config.timesteps):
                raise ScenarioError(
                    f"액터 '{actor.actor_id}'의 궤적이 "
                    f"{config.timesteps} 타임스텝을 모두 덮지 않습니다."
                )

    def reference_cloud(self, world, t: int) -> PointCloud:
        if self.reference is None:
            return ingest_cloud(self.config.recorded_reference(t), VEHICLE, t)
        return reference_scan(self.reference, world, self.ego, t)

    def samples(self, t: int) -> TimestepSamples:
        world = build_world(self.actors, t)
        sensors = rig_cloud(self.sensors, world, self.ego.pose_at(t))
        reference = self.reference_cloud(world, t)
        radii = blind_spot_radii(reference, sensors)
        logger.debug(
            "timestep done t=%d reference=%d sensor=%d", t, len(reference), len(sensors)
        )
        return TimestepSamples(t, reference, radii, sensors)

    def iter_samples(self, threads: int = 1, chunk_factor: int = DEFAULT_CHUNK_FACTOR):
        """
        타임스텝 순서대로 결과를 내놓는다

        동시에 계산 중인 타임스텝은 threads x chunk_factor개 이하로 유지한다.
        """
        timesteps = range(self.config.timesteps)
        if threads <= 1:
            for t in timesteps:
                yield self.samples(t)
            return
        window = max(1, threads * chunk_factor)
        with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="timestep") as pool:
            for start in range(0, len(timesteps), window):
                futures = [pool.submit(self.samples, t) for t in timesteps[start : start + window]]
                for future in futures:
                    yield future.result()

    def run(
        self, out_dir, threads: int = 1, chunk_factor: int = DEFAULT_CHUNK_FACTOR
    ) -> CoverageReport:
        config = self.config
        out_dir = Path(out_dir)
        grids = config.build_grids()
        if not self.sensors:
            logger.info("empty sensor rig scenario=%s", config.label)

        started = time.perf_counter()
        logger.info(
            "run started scenario=%s timesteps=%d threads=%d seed=%d",
            config.label,
            config.timesteps,
            threads,
            config.seed,
        )
        for sample in self.iter_samples(threads, chunk_factor):
            for grid in grids:
                grid.accumulate(sample.reference.points, sample.radii, config.r_thresh)
                grid.accumulate_detections(sample.sensors.points)

        rasters = {}
        raster_files = {}
        for grid in grids:
            finalized = grid.finalize()
            rasters[grid.name] = finalized
            for raster in finalized:
                raster.metadata.update(config.metadata())
                stem = out_dir / f"{grid.name}_{raster.value_kind}"
                csv_path, image_path = emit_raster(raster, stem)
                raster_files[f"{grid.name}/{raster.value_kind}"] = {
                    "csv": csv_path.name,
                    "image": image_path.name,
                }

        summaries = [
            summarize(
                rasters[roi.grid].mean_radius, rasters[roi.grid].detection_probability, roi
            )
            for roi in config.build_rois()
        ]
        clamped = {grid.name: grid.clamped for grid in grids}
        for name, count in clamped.items():
            if count:
                logger.info("radii clamped grid=%s count=%d", name, count)

        report = CoverageReport(
            name=config.label,
            summaries=summaries,
            metadata={
                **config.metadata(),
                "scenario": config.name,
                "variant": config.variant,
                "source": config.source,
                "r_thresh": config.r_thresh,
                "aggregation": config.aggregation,
                "averaging": config.averaging,
                "reference_resolution": config.reference_resolution,
                "sensors": [spec.name for spec in self.sensors],
                "empty_sensor_rig": not self.sensors,
                "clamped": clamped,
                "probes": {grid.name: int(grid.probe_count.sum()) for grid in grids},
                "versions": package_versions(),
            },
            rasters=raster_files,
        )
        write_report(report, out_dir / "report.json")
        logger.info(
            "run finished scenario=%s elapsed=%.2fs out_dir=%s",
            config.label,
            time.perf_counter() - started,
            out_dir,
        )
        return report


def run_scenario(
    config: ScenarioConfig,
    out_dir,
    threads: int | None = 1,
    chunk_factor: int = DEFAULT_CHUNK_FACTOR,
) -> CoverageReport:
    return ScenarioRunner(config).run(out_dir, resolve_threads(threads), chunk_factor)


def run_suite(
    configs: list,
    out_dir,
    threads: int | None = 1,
    chunk_factor: int = DEFAULT_CHUNK_FACTOR,
) -> list:
    """
    variant별로 실행 - variant가 있으면 <out_dir>/<variant>/ 에 출력,
    정확히 두 개면 비교표(comparison.txt)도 쓴다
    """
    out_dir = Path(out_dir)
    reports = []
    for config in configs:
        target = out_dir / config.variant if config.variant else out_dir
        reports.append(run_scenario(config, target, threads, chunk_factor))

    if len(reports) == 2 and all(config.variant for config in configs):
        table = format_comparison(
            compare_reports(*reports), configs[0].variant, configs[1].variant
        )
        path = out_dir / COMPARISON_FILE
        try:
            path.write_text(table, encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"비교표를 쓸 수 없습니다: {path} ({e})") from e
        logger.info("comparison written path=%s", path)
    return reports

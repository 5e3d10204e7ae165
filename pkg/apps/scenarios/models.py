from django.db import models, transaction

from apps.coverage.metrics import RoiSummary

from .reports import CoverageReport


class ScenarioRunManager(models.Manager):
    """
    실행 기록 매니저 - 보고서 저장
    """

    def record(self, report: CoverageReport, output_dir: str = "") -> "ScenarioRun":
        """CoverageReport 하나를 실행 기록과 ROI 결과 행으로 저장"""
        meta = report.metadata
        with transaction.atomic():
            run = self.create(
                name=report.name,
                scenario=meta.get("scenario", report.name),
                variant=meta.get("variant", ""),
                config_sha256=meta.get("config_sha256", ""),
                seed=meta.get("seed", 0),
                timesteps=meta.get("timesteps", 0),
                r_thresh=meta.get("r_thresh", 0.0),
                reference_resolution=meta.get("reference_resolution", ""),
                output_dir=str(output_dir),
                metadata=meta,
                rasters=report.rasters,
            )
            RoiResult.objects.bulk_create(
                [
                    RoiResult(
                        run=run,
                        position=position,
                        roi=summary.roi,
                        grid=summary.grid,
                        mean_blind_spot_radius=summary.mean_blind_spot_radius,
                        mean_detection_probability=summary.mean_detection_probability,
                        nonempty_cell_count=summary.nonempty_cell_count,
                    )
                    for position, summary in enumerate(report.summaries)
                ]
            )
        return run


class ScenarioRun(models.Model):
    """
    시나리오 실행 기록
    센서 배치 후보들을 다시 돌리지 않고 비교할 수 있도록 보고서를 보관한다
    """

    name = models.CharField("실행 이름", max_length=200)
    scenario = models.CharField("시나리오", max_length=100)
    variant = models.CharField("variant", max_length=100, blank=True)
    config_sha256 = models.CharField("설정 해시", max_length=64, db_index=True)
    seed = models.PositiveBigIntegerField("seed", default=0)
    timesteps = models.PositiveIntegerField("타임스텝 수", default=0)
    r_thresh = models.FloatField("검출 임계 반경 (m)", default=0.4)
    reference_resolution = models.CharField("기준 센서 해상도", max_length=32, blank=True)
    output_dir = models.CharField("출력 디렉터리", max_length=500, blank=True)
    metadata = models.JSONField("메타데이터", default=dict)
    rasters = models.JSONField("래스터 파일", default=dict)
    created_at = models.DateTimeField("실행일", auto_now_add=True)

    objects = ScenarioRunManager()

    class Meta:
        db_table = "scenario_runs"
        verbose_name = "시나리오 실행"
        verbose_name_plural = "시나리오 실행들"
        ordering = ["-created_at", "-id"]

    def __str__(self):
        return f"{self.name} (seed={self.seed}, T={self.timesteps})"

    def to_report(self) -> CoverageReport:
        """저장된 행에서 CoverageReport 복원"""
        return CoverageReport(
            name=self.name,
            summaries=[result.to_summary() for result in self.roi_results.all()],
            metadata=dict(self.metadata),
            rasters=dict(self.rasters),
        )


class RoiResult(models.Model):
    """
    실행 기록의 ROI 요약 한 행 - 평균이 비어 있으면(NULL) 데이터 없음
    """

    run = models.ForeignKey(
        ScenarioRun, on_delete=models.CASCADE, related_name="roi_results", verbose_name="실행"
    )
    position = models.PositiveIntegerField("순서", default=0)
    roi = models.CharField("ROI", max_length=200)
    grid = models.CharField("격자", max_length=100)
    mean_blind_spot_radius = models.FloatField("평균 사각 반경 (m)", null=True, blank=True)
    mean_detection_probability = models.FloatField("평균 검출 확률", null=True, blank=True)
    nonempty_cell_count = models.PositiveIntegerField("데이터가 있는 칸 수", default=0)

    class Meta:
        db_table = "roi_results"
        verbose_name = "ROI 결과"
        verbose_name_plural = "ROI 결과들"
        ordering = ["run", "position"]
        constraints = [
            models.UniqueConstraint(fields=["run", "roi"], name="unique_roi_per_run"),
        ]

    def __str__(self):
        return f"{self.run.name} - {self.roi}"

    def to_summary(self) -> RoiSummary:
        return RoiSummary(
            roi=self.roi,
            grid=self.grid,
            mean_blind_spot_radius=self.mean_blind_spot_radius,
            mean_detection_probability=self.mean_detection_probability,
            nonempty_cell_count=self.nonempty_cell_count,
        )

# Generated by Django 5.2.4 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ScenarioRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("name", models.CharField(max_length=200, verbose_name="실행 이름")),
                ("scenario", models.CharField(max_length=100, verbose_name="시나리오")),
                (
                    "variant",
                    models.CharField(blank=True, max_length=100, verbose_name="variant"),
                ),
                (
                    "config_sha256",
                    models.CharField(db_index=True, max_length=64, verbose_name="설정 해시"),
                ),
                ("seed", models.PositiveBigIntegerField(default=0, verbose_name="seed")),
                (
                    "timesteps",
                    models.PositiveIntegerField(default=0, verbose_name="타임스텝 수"),
                ),
                (
                    "r_thresh",
                    models.FloatField(default=0.4, verbose_name="검출 임계 반경 (m)"),
                ),
                (
                    "reference_resolution",
                    models.CharField(blank=True, max_length=32, verbose_name="기준 센서 해상도"),
                ),
                (
                    "output_dir",
                    models.CharField(blank=True, max_length=500, verbose_name="출력 디렉터리"),
                ),
                ("metadata", models.JSONField(default=dict, verbose_name="메타데이터")),
                ("rasters", models.JSONField(default=dict, verbose_name="래스터 파일")),
                (
                    "created_at",
                    models.DateTimeField(auto_now_add=True, verbose_name="실행일"),
                ),
            ],
            options={
                "verbose_name": "시나리오 실행",
                "verbose_name_plural": "시나리오 실행들",
                "db_table": "scenario_runs",
                "ordering": ["-created_at", "-id"],
            },
        ),
        migrations.CreateModel(
            name="RoiResult",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("position", models.PositiveIntegerField(default=0, verbose_name="순서")),
                ("roi", models.CharField(max_length=200, verbose_name="ROI")),
                ("grid", models.CharField(max_length=100, verbose_name="격자")),
                (
                    "mean_blind_spot_radius",
                    models.FloatField(blank=True, null=True, verbose_name="평균 사각 반경 (m)"),
                ),
                (
                    "mean_detection_probability",
                    models.FloatField(blank=True, null=True, verbose_name="평균 검출 확률"),
                ),
                (
                    "nonempty_cell_count",
                    models.PositiveIntegerField(default=0, verbose_name="데이터가 있는 칸 수"),
                ),
                (
                    "run",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="roi_results",
                        to="scenarios.scenariorun",
                        verbose_name="실행",
                    ),
                ),
            ],
            options={
                "verbose_name": "ROI 결과",
                "verbose_name_plural": "ROI 결과들",
                "db_table": "roi_results",
                "ordering": ["run", "position"],
                "constraints": [
                    models.UniqueConstraint(fields=("run", "roi"), name="unique_roi_per_run")
                ],
            },
        ),
    ]

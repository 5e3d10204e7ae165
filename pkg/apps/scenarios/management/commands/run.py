import logging
from pathlib import Path

from django.conf import settings
from django.db import DatabaseError

from apps.scenarios.config import load_config
from apps.scenarios.management.base import CoverageCommand
from apps.scenarios.models import ScenarioRun
from apps.scenarios.pipeline import resolve_threads, run_suite
from apps.scenarios.reports import format_summary

logger = logging.getLogger(__name__)


class Command(CoverageCommand):
    help = "시나리오 설정(또는 내장 프리셋)을 실행해 래스터와 report.json을 만든다."

    def add_arguments(self, parser):
        parser.add_argument("config", help="설정 JSON 경로 또는 프리셋 이름")
        parser.add_argument("--seed", type=int, help="난수 seed 덮어쓰기")
        parser.add_argument("--timesteps", type=int, help="타임스텝 수 덮어쓰기")
        parser.add_argument("--r-thresh", type=float, dest="r_thresh", help="검출 임계 반경 (m)")
        parser.add_argument(
            "--threads",
            type=int,
            default=settings.COVERAGE_THREADS,
            help="작업 스레드 수 (0이면 CPU 개수)",
        )
        parser.add_argument(
            "--out-dir", dest="out_dir", default=settings.COVERAGE_OUTPUT_DIR, help="출력 디렉터리"
        )
        parser.add_argument(
            "--no-record",
            action="store_true",
            dest="no_record",
            help="실행 기록을 데이터베이스에 저장하지 않음",
        )

    def run_command(self, *args, **options):
        overrides = {
            "seed": options["seed"],
            "timesteps": options["timesteps"],
            "r_thresh": options["r_thresh"],
        }
        configs = load_config(options["config"], overrides)
        out_dir = Path(options["out_dir"])
        reports = run_suite(
            configs,
            out_dir,
            threads=resolve_threads(options["threads"]),
            chunk_factor=settings.COVERAGE_CHUNK_FACTOR,
        )

        record = settings.COVERAGE_RECORD_RUNS and not options["no_record"]
        for config, report in zip(configs, reports):
            target = out_dir / config.variant if config.variant else out_dir
            if record:
                try:
                    ScenarioRun.objects.record(report, output_dir=target)
                except DatabaseError as e:
                    logger.warning("run not recorded scenario=%s error=%s", report.name, e)
            self.stdout.write(format_summary(report))
            self.stdout.write(self.style.SUCCESS(f"완료: {target / 'report.json'}"))

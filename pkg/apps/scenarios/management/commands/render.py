from apps.scenarios.management.base import CoverageCommand
from apps.scenarios.rasters import STYLES, render


class Command(CoverageCommand):
    help = "래스터 CSV에서 조감도 이미지(PPM)를 다시 그린다."

    def add_arguments(self, parser):
        parser.add_argument("raster", help="래스터 CSV 경로")
        parser.add_argument("--style", choices=STYLES, help="값 대응 방식 (기본: value_kind에 따름)")
        parser.add_argument("--vmax", type=float, help="밝기 최대에 대응하는 값")
        parser.add_argument("--output", help="출력 이미지 경로 (기본: 같은 이름의 .ppm)")

    def run_command(self, *args, **options):
        path = render(options["raster"], options["style"], options["vmax"], options["output"])
        self.stdout.write(self.style.SUCCESS(f"이미지 저장: {path}"))

from apps.scenarios.management.base import CoverageCommand
from apps.scenarios.reports import compare_reports, format_comparison, read_report


class Command(CoverageCommand):
    help = "두 report.json을 ROI별로 비교한다 (이긴 쪽 값은 **굵게**)."

    def add_arguments(self, parser):
        parser.add_argument("report_a")
        parser.add_argument("report_b")

    def run_command(self, *args, **options):
        a = read_report(options["report_a"])
        b = read_report(options["report_b"])
        table = format_comparison(compare_reports(a, b), a.name or "A", b.name or "B")
        self.stdout.write(table)

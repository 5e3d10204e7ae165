"""
실행 보고서(report.json)와 두 보고서 비교표
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from apps.coverage.metrics import RoiSummary
from apps.geometry.exceptions import ArtifactIOError, ContractViolation, ParseError

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


@dataclass(eq=False)
class CoverageReport:
    """
    ROI 요약표 + 실행 메타데이터(config 해시, seed, 타임스텝 수, clamp 개수 등) + 래스터 경로
    """

    name: str
    summaries: list
    metadata: dict = field(default_factory=dict)
    rasters: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [summary.roi for summary in self.summaries]
        duplicated = sorted({n for n in names if names.count(n) > 1})
        if duplicated:
            raise ContractViolation(f"ROI가 중복되었습니다: {', '.join(duplicated)}")

    @property
    def roi_names(self) -> list:
        return [summary.roi for summary in self.summaries]

    def summary(self, roi: str) -> RoiSummary:
        for summary in self.summaries:
            if summary.roi == roi:
                return summary
        raise KeyError(roi)

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "name": self.name,
            "metadata": self.metadata,
            "rois": [summary.to_dict() for summary in self.summaries],
            "rasters": self.rasters,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoverageReport":
        return cls(
            name=data.get("name", ""),
            summaries=[RoiSummary.from_dict(row) for row in data.get("rois", [])],
            metadata=dict(data.get("metadata", {})),
            rasters=dict(data.get("rasters", {})),
        )


def write_report(report: CoverageReport, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    except OSError as e:
        raise ArtifactIOError(f"보고서를 쓸 수 없습니다: {path} ({e})") from e
    return path


def read_report(path) -> CoverageReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"보고서를 읽을 수 없습니다: {path} ({e})") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"보고서 JSON이 올바르지 않습니다: {e.msg}", path, e.lineno) from None
    try:
        return CoverageReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"보고서 형식이 올바르지 않습니다: {e}", path, 0) from None


@dataclass(frozen=True)
class ComparisonRow:
    """
    ROI 하나의 비교 - delta는 A - B, winner는 "A" / "B" / "tie" (데이터가 없으면 None)
    """

    roi: str
    probability_a: Optional[float]
    probability_b: Optional[float]
    probability_delta: Optional[float]
    probability_winner: Optional[str]
    radius_a: Optional[float]
    radius_b: Optional[float]
    radius_delta: Optional[float]
    radius_winner: Optional[str]


def _winner(a, b, higher_is_better: bool):
    if a is None or b is None:
        return None
    if a == b:
        return "tie"
    return "A" if (a > b) == higher_is_better else "B"


def _delta(a, b):
    return None if a is None or b is None else a - b


def compare_reports(a: CoverageReport, b: CoverageReport) -> list:
    """
    ROI별 차이와 승자 - 검출 확률은 높을수록, 사각 반경은 작을수록 좋다
    """
    if set(a.roi_names) != set(b.roi_names):
        missing = sorted(set(a.roi_names) ^ set(b.roi_names))
        raise ContractViolation(f"두 보고서의 ROI 집합이 다릅니다: {', '.join(missing)}")

    rows = []
    for roi in a.roi_names:
        left, right = a.summary(roi), b.summary(roi)
        pa, pb = left.mean_detection_probability, right.mean_detection_probability
        ra, rb = left.mean_blind_spot_radius, right.mean_blind_spot_radius
        rows.append(
            ComparisonRow(
                roi=roi,
                probability_a=pa,
                probability_b=pb,
                probability_delta=_delta(pa, pb),
                probability_winner=_winner(pa, pb, higher_is_better=True),
                radius_a=ra,
                radius_b=rb,
                radius_delta=_delta(ra, rb),
                radius_winner=_winner(ra, rb, higher_is_better=False),
            )
        )
    return rows


def _cell(value, bold: bool, scale: float = 1.0) -> str:
    if value is None:
        return "n/a"
    text = f"{value * scale:.2f}"
    return f"**{text}**" if bold else text


def format_comparison(rows: list, label_a: str = "A", label_b: str = "B") -> str:
    """
    비교표 텍스트 - 확률은 [%], 반경은 [m], 이긴 쪽 값은 **굵게**
    """
    width = max([len(row.roi) for row in rows] + [len("region of interest")])
    header = f"{'region of interest':<{width}}  {label_a:>12}  {label_b:>12}  {'delta':>10}"
    lines = []
    sections = (
        ("mean detection probability [%]", "probability", 100.0),
        ("mean blind spot radius [m]", "radius", 1.0),
    )
    for title, metric, scale in sections:
        lines.append(title)
        lines.append(header)
        for row in rows:
            a = getattr(row, f"{metric}_a")
            b = getattr(row, f"{metric}_b")
            delta = getattr(row, f"{metric}_delta")
            winner = getattr(row, f"{metric}_winner")
            lines.append(
                f"{row.roi:<{width}}  "
                f"{_cell(a, winner == 'A', scale):>12}  "
                f"{_cell(b, winner == 'B', scale):>12}  "
                f"{_cell(delta, False, scale):>10}"
            )
        lines.append("")
    return "\n".join(lines)


def format_summary(report: CoverageReport) -> str:
    """보고서 하나의 ROI 요약표 (확률 [%], 반경 [m])"""
    width = max([len(s.roi) for s in report.summaries] + [len("region of interest")])
    lines = [
        report.name,
        f"{'region of interest':<{width}}  {'p [%]':>8}  {'r [m]':>8}  {'cells':>6}",
    ]
    for s in report.summaries:
        p = _cell(s.mean_detection_probability, False, 100.0)
        r = _cell(s.mean_blind_spot_radius, False)
        lines.append(f"{s.roi:<{width}}  {p:>8}  {r:>8}  {s.nonempty_cell_count:>6}")
    return "\n".join(lines)

import logging
from dataclasses import asdict

from drf_spectacular.utils import extend_schema
from rest_framework import status, viewsets
from rest_framework.decorators import action, api_view, permission_classes
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from apps.geometry.exceptions import ContractViolation
from apps.scenarios.models import ScenarioRun
from apps.scenarios.reports import compare_reports

from .serializers import (
    ComparisonQuerySerializer,
    ComparisonRowSerializer,
    HealthCheckSerializer,
    ScenarioRunListSerializer,
    ScenarioRunSerializer,
)

logger = logging.getLogger(__name__)


# 헬스 체크용 뷰 (서버가 잘 돌아가는지 확인)
@extend_schema(responses=HealthCheckSerializer)
@api_view(["GET"])
@permission_classes([AllowAny])
def health_check(request):
    """
    API 서버 상태 확인용 엔드포인트
    """
    return Response(
        {"status": "ok", "message": "blindspot API server is running!"},
        status=status.HTTP_200_OK,
    )


class ScenarioRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    시나리오 실행 기록 조회 API

    기록은 run 명령이 만든다. API는 읽기와 비교만 한다.
    """

    queryset = ScenarioRun.objects.prefetch_related("roi_results")

    def get_serializer_class(self):
        if self.action == "list":
            return ScenarioRunListSerializer
        return ScenarioRunSerializer

    def list(self, request, *args, **kwargs):
        queryset = self.filter_queryset(self.get_queryset())
        scenario = request.query_params.get("scenario")
        if scenario:
            queryset = queryset.filter(scenario=scenario)
        page = self.paginate_queryset(queryset)
        if page is not None:
            serializer = self.get_serializer(page, many=True)
            data = self.get_paginated_response(serializer.data).data
        else:
            data = self.get_serializer(queryset, many=True).data
        return Response({"success": True, "data": data})

    def retrieve(self, request, *args, **kwargs):
        serializer = self.get_serializer(self.get_object())
        return Response({"success": True, "data": serializer.data})

    @extend_schema(parameters=[ComparisonQuerySerializer])
    @action(detail=False, methods=["get"])
    def compare(self, request):
        """
        두 실행 기록의 ROI별 비교 (?a=<id>&b=<id>)
        """
        query = ComparisonQuerySerializer(data=request.query_params)
        if not query.is_valid():
            return Response(
                {"success": False, "message": "a와 b에 실행 id를 지정해주세요."},
                status=status.HTTP_400_BAD_REQUEST,
            )
        ids = [query.validated_data["a"], query.validated_data["b"]]
        runs = {run.id: run for run in self.get_queryset().filter(id__in=ids)}
        try:
            run_a, run_b = runs[ids[0]], runs[ids[1]]
        except KeyError as e:
            return Response(
                {"success": False, "message": f"실행 기록이 없습니다: {e.args[0]}"},
                status=status.HTTP_404_NOT_FOUND,
            )

        try:
            rows = compare_reports(run_a.to_report(), run_b.to_report())
        except ContractViolation as e:
            logger.info("comparison rejected a=%d b=%d reason=%s", run_a.id, run_b.id, e)
            return Response(
                {"success": False, "message": str(e)},
                status=status.HTTP_400_BAD_REQUEST,
            )

        return Response(
            {
                "success": True,
                "data": {
                    "a": run_a.name,
                    "b": run_b.name,
                    "rows": ComparisonRowSerializer([asdict(row) for row in rows], many=True).data,
                },
            }
        )

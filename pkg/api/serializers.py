from rest_framework import serializers

from apps.scenarios.models import RoiResult, ScenarioRun


class HealthCheckSerializer(serializers.Serializer):
    """
    헬스 체크 응답용 Serializer
    """

    status = serializers.CharField()
    message = serializers.CharField()


class RoiResultSerializer(serializers.ModelSerializer):
    class Meta:
        model = RoiResult
        fields = [
            "roi",
            "grid",
            "mean_blind_spot_radius",
            "mean_detection_probability",
            "nonempty_cell_count",
        ]


class ScenarioRunListSerializer(serializers.ModelSerializer):
    """
    실행 기록 목록용 - ROI 결과 제외
    """

    class Meta:
        model = ScenarioRun
        fields = [
            "id",
            "name",
            "scenario",
            "variant",
            "config_sha256",
            "seed",
            "timesteps",
            "r_thresh",
            "reference_resolution",
            "created_at",
        ]


class ScenarioRunSerializer(ScenarioRunListSerializer):
    """
    실행 기록 상세 - 메타데이터, 래스터 파일, ROI 요약표 포함
    """

    roi_results = RoiResultSerializer(many=True, read_only=True)

    class Meta(ScenarioRunListSerializer.Meta):
        fields = ScenarioRunListSerializer.Meta.fields + [
            "output_dir",
            "metadata",
            "rasters",
            "roi_results",
        ]


class ComparisonQuerySerializer(serializers.Serializer):
    """비교 요청 쿼리 (?a=<run id>&b=<run id>)"""

    a = serializers.IntegerField(min_value=1)
    b = serializers.IntegerField(min_value=1)


class ComparisonRowSerializer(serializers.Serializer):
    roi = serializers.CharField()
    probability_a = serializers.FloatField(allow_null=True)
    probability_b = serializers.FloatField(allow_null=True)
    probability_delta = serializers.FloatField(allow_null=True)
    probability_winner = serializers.CharField(allow_null=True)
    radius_a = serializers.FloatField(allow_null=True)
    radius_b = serializers.FloatField(allow_null=True)
    radius_delta = serializers.FloatField(allow_null=True)
    radius_winner = serializers.CharField(allow_null=True)

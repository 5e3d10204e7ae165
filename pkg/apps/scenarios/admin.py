from django.contrib import admin

from .models import RoiResult, ScenarioRun


class RoiResultInline(admin.TabularInline):
    """
    ROI 결과 인라인
    """

    model = RoiResult
    extra = 0
    fields = [
        "roi",
        "grid",
        "mean_blind_spot_radius",
        "mean_detection_probability",
        "nonempty_cell_count",
    ]
    readonly_fields = fields


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    """
    시나리오 실행 기록 관리 어드민
    """

    list_display = [
        "name",
        "scenario",
        "variant",
        "seed",
        "timesteps",
        "r_thresh",
        "short_hash",
        "created_at",
    ]

    list_filter = ["scenario", "variant", "created_at"]

    search_fields = ["name", "scenario", "variant", "config_sha256"]

    readonly_fields = ["config_sha256", "metadata", "rasters", "created_at"]

    ordering = ["-created_at"]

    inlines = [RoiResultInline]

    def short_hash(self, obj):
        """설정 해시 앞부분만 표시"""
        return obj.config_sha256[:12]

    short_hash.short_description = "설정 해시"


@admin.register(RoiResult)
class RoiResultAdmin(admin.ModelAdmin):
    list_display = [
        "run",
        "roi",
        "mean_blind_spot_radius",
        "mean_detection_probability",
        "nonempty_cell_count",
    ]

    list_filter = ["grid"]

    search_fields = ["roi", "run__name"]

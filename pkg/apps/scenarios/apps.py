from django.apps import AppConfig


class ScenariosConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.scenarios"
    verbose_name = "센서 커버리지 시나리오"

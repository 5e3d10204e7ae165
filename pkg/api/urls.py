from django.urls import include, path
from rest_framework.routers import DefaultRouter

from . import views

# DRF Router 설정
router = DefaultRouter()
router.register(r"runs", views.ScenarioRunViewSet, basename="run")

urlpatterns = [
    # API root
    path("", include(router.urls)),
    path("health/", views.health_check, name="health_check"),
]

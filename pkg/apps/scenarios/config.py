"""
시나리오 설정 로드와 도메인 객체 구성

설정은 JSON 문서이며 serializers.ScenarioConfigSerializer로 검증한다.
variants와 명령행 덮어쓰기는 해시 계산 전에 적용하므로,
보고서와 래스터에 남는 config_sha256은 항상 실제로 실행된 설정을 가리킨다.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

from apps.coverage.grids import DEFAULT_SLABS, CoverageGrid, GridSpec, VerticalSlab
from apps.coverage.metrics import REGION_PRESETS, Roi
from apps.geometry.exceptions import ArtifactIOError, ConfigError
from apps.geometry.transforms import RigidTransform
from apps.reference.sampler import ReferenceSamplerConfig
from apps.scene.actors import (
    Actor,
    KeyframeTrajectory,
    LinearTrajectory,
    StaticTrajectory,
)
from apps.scene.meshes import box, ground_plane, hatchback, load_obj
from apps.sensors.camera import CameraSpec, DistortionModel, optical_mount
from apps.sensors.lidar import LidarSpec

from .ingest import RecordedSensor
from .serializers import ScenarioConfigSerializer

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / "presets"
DEFAULT_LIDAR_RANGE = 120.0
DEFAULT_CAMERA_RANGE = 100.0


def list_presets() -> list:
    return sorted(path.stem for path in PRESET_DIR.glob("*.json"))


def resolve_source(source) -> Path:
    """설정 파일 경로 또는 내장 프리셋 이름 → 파일 경로"""
    path = Path(source)
    if path.is_file():
        return path
    preset = PRESET_DIR / f"{source}.json"
    if preset.is_file():
        return preset
    raise ArtifactIOError(
        f"설정 파일이 없습니다: {source} (프리셋: {', '.join(list_presets())})"
    )


def parse_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON 문법 오류: {e.msg}", line=e.lineno, column=e.colno) from None
    if not isinstance(data, dict):
        raise ConfigError("설정 최상위는 객체여야 합니다.", line=1, column=1)
    return data


def flatten_errors(errors, prefix: str = "") -> list:
    """DRF 오류 트리 → [(점으로 구분된 필드 경로, 메시지), ...]"""
    flat = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            if key == "non_field_errors":
                name = prefix
            else:
                name = f"{prefix}.{key}" if prefix else str(key)
            flat.extend(flatten_errors(value, name))
    elif isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            flat.extend((prefix, str(item)) for item in errors)
        else:
            for index, item in enumerate(errors):
                if item:
                    flat.extend(flatten_errors(item, f"{prefix}.{index}" if prefix else str(index)))
    else:
        flat.append((prefix, str(errors)))
    return flat


def validate(data: dict) -> dict:
    serializer = ScenarioConfigSerializer(data=data)
    if not serializer.is_valid():
        problems = flatten_errors(serializer.errors)
        for field_name, message in problems:
            logger.warning("config invalid field=%s message=%s", field_name or "-", message)
        field_name, message = problems[0]
        raise ConfigError(message, field=field_name or None)
    return json.loads(json.dumps(serializer.validated_data))


def config_hash(data: dict) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def apply_overrides(data: dict, overrides: dict | None) -> dict:
    """최상위 키 교체 (값이 None인 항목은 무시)"""
    merged = copy.deepcopy(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = copy.deepcopy(value)
    return merged


def pose_from(data: dict) -> RigidTransform:
    return RigidTransform.from_xyz_ypr(data["xyz"], data["ypr_deg"])


def trajectory_from(data: dict):
    kind = data["kind"]
    if kind == "static":
        return StaticTrajectory(pose_from(data["pose"]))
    if kind == "linear":
        return LinearTrajectory(pose_from(data["start"]), data["velocity"], data["dt"])
    return KeyframeTrajectory({int(t): pose_from(pose) for t, pose in data["poses"].items()})


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """
    검증이 끝난 실행 단위 설정 (variant 하나)

    data: 기본값이 채워진 설정 (variants 제외), base_dir: 상대 경로 기준 디렉터리
    """

    data: dict
    base_dir: Path
    variant: str = ""
    source: str = ""

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def label(self) -> str:
        return f"{self.name}/{self.variant}" if self.variant else self.name

    @property
    def timesteps(self) -> int:
        return self.data["timesteps"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def r_thresh(self) -> float:
        return self.data["r_thresh"]

    @property
    def aggregation(self) -> str:
        return self.data["aggregation"]

    @property
    def averaging(self) -> str:
        return self.data["averaging"]

    @cached_property
    def sha256(self) -> str:
        return config_hash(self.data)

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.base_dir / path

    def check_files(self) -> None:
        """참조 파일(메시, 기록 클라우드)이 모두 있는지 확인"""
        scene = self.data["scene"]
        for actor in [scene["ego"], *scene["actors"]]:
            mesh = actor["mesh"]
            if mesh["kind"] == "obj" and not self.resolve(mesh["path"]).is_file():
                raise ArtifactIOError(f"메시 파일이 없습니다: {self.resolve(mesh['path'])}")
        templates = [s["path"] for s in self.data["sensors"] if s["kind"] == "recorded"]
        if not self.data["reference"]["enabled"]:
            templates.append(self.data["reference"]["recorded"])
        for template in templates:
            for t in range(self.timesteps):
                path = self.resolve(template.format(t=t))
                if not path.is_file():
                    raise ArtifactIOError(f"기록 클라우드 파일이 없습니다: {path}")

    def _mesh(self, data: dict):
        if data["kind"] == "box":
            return box(data["size"], data["center"])
        if data["kind"] == "obj":
            return load_obj(self.resolve(data["path"]))
        return hatchback()

    def build_actors(self) -> list:
        """ego, 다른 액터, 지면 순서의 액터 목록"""
        scene = self.data["scene"]
        ego = scene["ego"]
        actors = [
            Actor(ego["id"], self._mesh(ego["mesh"]), trajectory_from(ego["trajectory"]), True)
        ]
        for actor in scene["actors"]:
            actors.append(
                Actor(actor["id"], self._mesh(actor["mesh"]), trajectory_from(actor["trajectory"]))
            )
        ground = scene["ground"]
        if ground["enabled"]:
            actors.append(
                Actor(
                    "ground",
                    ground_plane(ground["extent"]),
                    StaticTrajectory(RigidTransform.from_translation([0.0, 0.0, ground["z"]])),
                )
            )
        return actors

    def _camera(self, data: dict) -> CameraSpec:
        common = {
            "max_range": data.get("max_range", DEFAULT_CAMERA_RANGE),
            "name": data["name"],
        }
        body_mount = pose_from(data["mount"])
        if all(key in data for key in ("fx", "fy", "cx", "cy")):
            spec = CameraSpec(
                width=data["width"],
                height=data["height"],
                fx=data["fx"],
                fy=data["fy"],
                cx=data["cx"],
                cy=data["cy"],
                mount=optical_mount(body_mount),
                **common,
            )
        else:
            spec = CameraSpec.from_fov(
                data["width"], data["height"], data["hfov_deg"], body_mount, **common
            )
        k = data["distortion"]["k"]
        if any(k):
            distortion = DistortionModel.radial(*k, max_radius=spec.image_corner_radius)
            spec = replace(spec, distortion=distortion)
        return spec

    def build_sensors(self) -> list:
        sensors = []
        for data in self.data["sensors"]:
            if data["kind"] == "lidar":
                sensors.append(
                    LidarSpec(
                        channels=data["channels"],
                        points_per_channel=data["points_per_channel"],
                        elevation_min=data["elevation_deg"][0],
                        elevation_max=data["elevation_deg"][1],
                        azimuth_min=data["azimuth_deg"][0],
                        azimuth_max=data["azimuth_deg"][1],
                        max_range=data.get("max_range", DEFAULT_LIDAR_RANGE),
                        mount=pose_from(data["mount"]),
                        name=data["name"],
                    )
                )
            elif data["kind"] == "camera":
                sensors.append(self._camera(data))
            else:
                sensors.append(RecordedSensor(data["name"], str(self.resolve(data["path"]))))
        return sensors

    def build_reference(self):
        """기준 센서 설정 - 기록 클라우드를 쓰면 None"""
        data = self.data["reference"]
        if not data["enabled"]:
            return None
        return ReferenceSamplerConfig(
            seed=self.seed,
            shell_margin_up=data["margin_up"],
            shell_margin_horizontal=data["margin_horizontal"],
            channels=data["channels"],
            points_per_channel=data["points_per_channel"],
            elevation_min=data["elevation_deg"][0],
            elevation_max=data["elevation_deg"][1],
            azimuth_span=data["azimuth_span_deg"],
            yaw_range=tuple(data["yaw_deg"]),
            pitch_range=tuple(data["pitch_deg"]),
            roll_range=tuple(data["roll_deg"]),
            max_range=data["max_range"],
            count=data["count"],
        )

    def recorded_reference(self, t: int) -> Path | None:
        data = self.data["reference"]
        if data["enabled"]:
            return None
        return self.resolve(data["recorded"].format(t=t))

    def build_grids(self) -> list:
        """새 누적기 목록 (호출할 때마다 새로 만든다)"""
        grids = []
        for data in self.data["grids"]:
            if "z" in data:
                slab = VerticalSlab(data["slab"], *data["z"])
            else:
                slab = DEFAULT_SLABS[data["slab"]]
            (x_min, x_max), (y_min, y_max) = data["x"], data["y"]
            spec = GridSpec(x_min, x_max, y_min, y_max, data["cell_size"])
            grids.append(CoverageGrid(spec, slab, data["name"], self.aggregation, self.averaging))
        return grids

    def build_rois(self) -> list:
        rois = []
        for data in self.data["rois"]:
            if "x" in data and "y" in data:
                x_min, x_max = data["x"]
                y_min, y_max = data["y"]
            else:
                x_min, x_max, y_min, y_max = REGION_PRESETS[data["region"]]
            rois.append(Roi(data["name"], data["grid"], x_min, x_max, y_min, y_max))
        return rois

    @property
    def reference_resolution(self) -> str:
        data = self.data["reference"]
        if not data["enabled"]:
            return "recorded"
        return f"{data['channels']}x{data['points_per_channel']}"

    def metadata(self) -> dict:
        return {
            "config_sha256": self.sha256,
            "seed": self.seed,
            "timesteps": self.timesteps,
        }


def load_config(source, overrides: dict | None = None) -> list:
    """
    설정 파일(또는 프리셋 이름)을 읽어 variant별 ScenarioConfig 목록을 돌려준다

    variants가 없으면 원소 하나. overrides(seed, timesteps, r_thresh 등)는 모든 variant에 적용한다.
    """
    path = resolve_source(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"설정 파일을 읽을 수 없습니다: {path} ({e})") from e

    raw = parse_json(text)
    base = validate(raw)
    variants = base.pop("variants")
    raw_base = {key: value for key, value in raw.items() if key != "variants"}

    configs = []
    for variant, variant_overrides in (variants or {"": {}}).items():
        effective = apply_overrides(apply_overrides(raw_base, variant_overrides), overrides)
        data = validate(effective)
        data.pop("variants")
        config = ScenarioConfig(data, path.parent, variant, str(source))
        config.check_files()
        configs.append(config)
        logger.info(
            "config loaded source=%s variant=%s sha256=%s", source, variant or "-", config.sha256
        )
    return configs

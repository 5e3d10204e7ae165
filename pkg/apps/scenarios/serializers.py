import math

from rest_framework import serializers

from apps.coverage.grids import AGGREGATIONS, AVERAGINGS, DEFAULT_SLABS
from apps.coverage.metrics import REGION_PRESETS


class FiniteFloatField(serializers.FloatField):
    """NaN/무한대를 거부하는 실수 필드"""

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            raise serializers.ValidationError("유한한 실수여야 합니다.")
        return value


def nested_default(serializer_class):
    """중첩 설정을 생략했을 때 하위 기본값까지 채운 값을 돌려주는 default"""

    def factory():
        serializer = serializer_class(data={})
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    return factory


def vec3(**kwargs):
    return serializers.ListField(
        child=FiniteFloatField(), min_length=3, max_length=3, **kwargs
    )


class RangeField(serializers.ListField):
    """
    [하한, 상한] 구간 (하한 ≤ 상한)
    """

    child = FiniteFloatField()

    def __init__(self, **kwargs):
        kwargs.setdefault("min_length", 2)
        kwargs.setdefault("max_length", 2)
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        low, high = super().to_internal_value(data)
        if low > high:
            raise serializers.ValidationError("하한이 상한보다 클 수 없습니다.")
        return [low, high]


class PoseSerializer(serializers.Serializer):
    """
    자세 - 위치(m)와 yaw/pitch/roll(degree)
    """

    xyz = vec3(default=[0.0, 0.0, 0.0])
    ypr_deg = vec3(default=[0.0, 0.0, 0.0])


class TrajectorySerializer(serializers.Serializer):
    """
    궤적 - static(pose) / linear(start, velocity, dt) / keyframes(poses)
    """

    kind = serializers.ChoiceField(choices=["static", "linear", "keyframes"], default="static")
    pose = PoseSerializer(required=False)
    start = PoseSerializer(required=False)
    velocity = vec3(required=False)
    dt = FiniteFloatField(default=0.1, min_value=1e-9)
    poses = serializers.DictField(child=PoseSerializer(), required=False)

    def validate(self, attrs):
        kind = attrs["kind"]
        if kind == "static":
            attrs.setdefault("pose", {"xyz": [0.0, 0.0, 0.0], "ypr_deg": [0.0, 0.0, 0.0]})
        elif kind == "linear":
            if "start" not in attrs or "velocity" not in attrs:
                raise serializers.ValidationError("linear 궤적에는 start와 velocity가 필요합니다.")
        else:
            poses = attrs.get("poses")
            if not poses:
                raise serializers.ValidationError({"poses": "keyframes 궤적에는 poses가 필요합니다."})
            for key in poses:
                if not key.isdigit():
                    raise serializers.ValidationError(
                        {"poses": f"타임스텝 키는 0 이상의 정수여야 합니다: {key}"}
                    )
        return attrs


class MeshSerializer(serializers.Serializer):
    """
    메시 - box(size, center) / obj(path, 설정 파일 기준 상대 경로) / hatchback
    """

    kind = serializers.ChoiceField(choices=["box", "obj", "hatchback"])
    size = vec3(required=False)
    center = vec3(default=[0.0, 0.0, 0.0])
    path = serializers.CharField(required=False)

    def validate(self, attrs):
        if attrs["kind"] == "box":
            size = attrs.get("size")
            if size is None or min(size) <= 0:
                raise serializers.ValidationError({"size": "box 크기는 양수 3개여야 합니다."})
        if attrs["kind"] == "obj" and not attrs.get("path"):
            raise serializers.ValidationError({"path": "obj 메시에는 path가 필요합니다."})
        return attrs


class ActorSerializer(serializers.Serializer):
    id = serializers.CharField()
    mesh = MeshSerializer()
    trajectory = TrajectorySerializer(default=nested_default(TrajectorySerializer))


class GroundSerializer(serializers.Serializer):
    enabled = serializers.BooleanField(default=True)
    extent = FiniteFloatField(default=1000.0, min_value=1e-3)
    z = FiniteFloatField(default=0.0)


class SceneSerializer(serializers.Serializer):
    ground = GroundSerializer(default=nested_default(GroundSerializer))
    ego = ActorSerializer()
    actors = ActorSerializer(many=True, default=list)

    def validate(self, attrs):
        ids = [attrs["ego"]["id"]] + [actor["id"] for actor in attrs["actors"]]
        if len(ids) != len(set(ids)):
            raise serializers.ValidationError("액터 id가 중복되었습니다.")
        if attrs["ground"]["enabled"] and "ground" in ids:
            raise serializers.ValidationError("액터 id 'ground'는 지면 전용입니다.")
        return attrs


class DistortionSerializer(serializers.Serializer):
    k = serializers.ListField(child=FiniteFloatField(), max_length=3, default=list)


class SensorSerializer(serializers.Serializer):
    """
    센서 - lidar / camera / recorded(외부에서 기록한 타임스텝별 클라우드 파일)
    """

    kind = serializers.ChoiceField(choices=["lidar", "camera", "recorded"])
    name = serializers.CharField()
    mount = PoseSerializer(default=nested_default(PoseSerializer))
    max_range = FiniteFloatField(required=False, min_value=1e-6)
    # lidar
    channels = serializers.IntegerField(required=False, min_value=1)
    points_per_channel = serializers.IntegerField(required=False, min_value=1)
    elevation_deg = RangeField(required=False)
    azimuth_deg = RangeField(default=[-180.0, 180.0])
    # camera
    width = serializers.IntegerField(required=False, min_value=1)
    height = serializers.IntegerField(required=False, min_value=1)
    hfov_deg = FiniteFloatField(required=False, min_value=1e-3, max_value=179.0)
    fx = FiniteFloatField(required=False, min_value=1e-9)
    fy = FiniteFloatField(required=False, min_value=1e-9)
    cx = FiniteFloatField(required=False)
    cy = FiniteFloatField(required=False)
    distortion = DistortionSerializer(default=nested_default(DistortionSerializer))
    # recorded
    path = serializers.CharField(required=False)

    def validate(self, attrs):
        kind = attrs["kind"]
        if kind == "lidar":
            missing = [
                name
                for name in ("channels", "points_per_channel", "elevation_deg")
                if name not in attrs
            ]
            if missing:
                raise serializers.ValidationError(
                    {name: "lidar 센서에 필요한 값입니다." for name in missing}
                )
        elif kind == "camera":
            missing = [name for name in ("width", "height") if name not in attrs]
            has_intrinsics = all(name in attrs for name in ("fx", "fy", "cx", "cy"))
            if not has_intrinsics and "hfov_deg" not in attrs:
                missing.append("hfov_deg")
            if missing:
                raise serializers.ValidationError(
                    {name: "camera 센서에 필요한 값입니다." for name in missing}
                )
        elif not attrs.get("path"):
            raise serializers.ValidationError({"path": "recorded 센서에는 path가 필요합니다."})
        return attrs


class ReferenceSerializer(serializers.Serializer):
    """
    기준 센서 - enabled가 false면 recorded 경로 템플릿({t})의 기록 클라우드를 쓴다
    """

    enabled = serializers.BooleanField(default=True)
    channels = serializers.IntegerField(default=1024, min_value=1)
    points_per_channel = serializers.IntegerField(default=1024, min_value=1)
    elevation_deg = RangeField(default=[-90.0, 0.0])
    azimuth_span_deg = FiniteFloatField(default=360.0, min_value=1e-3, max_value=360.0)
    margin_up = FiniteFloatField(default=0.5, min_value=1e-6)
    margin_horizontal = FiniteFloatField(default=0.5, min_value=1e-6)
    yaw_deg = RangeField(default=[-180.0, 180.0])
    pitch_deg = RangeField(default=[-45.0, 45.0])
    roll_deg = RangeField(default=[-45.0, 45.0])
    max_range = FiniteFloatField(default=200.0, min_value=1e-6)
    count = serializers.IntegerField(default=1, min_value=1)
    recorded = serializers.CharField(required=False)

    def validate(self, attrs):
        if not attrs["enabled"] and not attrs.get("recorded"):
            raise serializers.ValidationError(
                {"recorded": "기준 센서를 끄면 기록 클라우드 경로가 필요합니다."}
            )
        return attrs


class GridSerializer(serializers.Serializer):
    """
    격자 - slab은 ground/obstacles 기본값 또는 z 구간 직접 지정
    """

    name = serializers.CharField()
    slab = serializers.CharField(default="ground")
    z = RangeField(required=False)
    x = RangeField()
    y = RangeField()
    cell_size = FiniteFloatField(min_value=1e-6)

    def validate(self, attrs):
        if "z" not in attrs and attrs["slab"] not in DEFAULT_SLABS:
            raise serializers.ValidationError(
                {"z": f"기본 slab({', '.join(DEFAULT_SLABS)})이 아니면 z 구간이 필요합니다."}
            )
        for axis in ("x", "y", "z"):
            if axis in attrs and attrs[axis][0] == attrs[axis][1]:
                raise serializers.ValidationError({axis: "구간 길이가 0입니다."})
        return attrs


class RoiSerializer(serializers.Serializer):
    """
    ROI - region 프리셋 이름 또는 x/y 구간, 이름을 생략하면 "<region> <slab>"
    """

    name = serializers.CharField(required=False)
    grid = serializers.CharField()
    region = serializers.ChoiceField(choices=list(REGION_PRESETS), required=False)
    x = RangeField(required=False)
    y = RangeField(required=False)

    def validate(self, attrs):
        if "region" not in attrs and not ("x" in attrs and "y" in attrs):
            raise serializers.ValidationError("region 또는 x/y 구간이 필요합니다.")
        if "region" not in attrs and "name" not in attrs:
            raise serializers.ValidationError({"name": "x/y로 지정한 ROI에는 name이 필요합니다."})
        return attrs


class ScenarioConfigSerializer(serializers.Serializer):
    """
    시나리오 설정 최상위 스키마
    """

    name = serializers.CharField()
    description = serializers.CharField(default="", allow_blank=True)
    timesteps = serializers.IntegerField(default=4096, min_value=1)
    seed = serializers.IntegerField(default=0, min_value=0, max_value=2**63 - 1)
    r_thresh = FiniteFloatField(default=0.4, min_value=0.0)
    aggregation = serializers.ChoiceField(choices=list(AGGREGATIONS), default="mean")
    averaging = serializers.ChoiceField(choices=list(AVERAGINGS), default="pooled")
    scene = SceneSerializer()
    sensors = SensorSerializer(many=True, default=list)
    reference = ReferenceSerializer(default=nested_default(ReferenceSerializer))
    grids = GridSerializer(many=True, allow_empty=False)
    rois = RoiSerializer(many=True, default=list)
    variants = serializers.DictField(child=serializers.DictField(), default=dict)

    def validate_sensors(self, value):
        names = [sensor["name"] for sensor in value]
        if len(names) != len(set(names)):
            raise serializers.ValidationError("센서 이름이 중복되었습니다.")
        return value

    def validate_grids(self, value):
        names = [grid["name"] for grid in value]
        if len(names) != len(set(names)):
            raise serializers.ValidationError("격자 이름이 중복되었습니다.")
        return value

    def validate_variants(self, value):
        for name, overrides in value.items():
            if "variants" in overrides:
                raise serializers.ValidationError(f"variant '{name}' 안에 variants를 둘 수 없습니다.")
        return value

    def validate(self, attrs):
        grids = {grid["name"]: grid for grid in attrs["grids"]}
        roi_names = []
        for index, roi in enumerate(attrs["rois"]):
            grid = grids.get(roi["grid"])
            if grid is None:
                raise serializers.ValidationError(
                    {"rois": {index: {"grid": f"정의되지 않은 격자입니다: {roi['grid']}"}}}
                )
            if "name" not in roi:
                roi["name"] = f"{roi['region']} {grid['slab']}"
            roi_names.append(roi["name"])
        if len(roi_names) != len(set(roi_names)):
            raise serializers.ValidationError({"rois": "ROI 이름이 중복되었습니다."})
        return attrs

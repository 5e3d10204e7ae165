"""
깊이 카메라 모델 - 투영/역투영 체인

    카메라 좌표 → 렌즈 평면:   lens = (x / z, y / z),  z > 0
    렌즈 → 이미지 평면:         img = distortion(lens, k)
    이미지 → 픽셀:              px = (fx·img_x + cx, fy·img_y + cy)

역방향은 위 단계를 거꾸로 밟고, 깊이는 z-depth(광축 방향 거리)로 다룬다.
카메라 좌표계: z 전방, x 우측, y 하방. 픽셀 (u, v)의 광선은 정수 좌표 (u, v)를 지난다.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from apps.geometry.clouds import VEHICLE, PointCloud
from apps.geometry.exceptions import ContractViolation, NumericError
from apps.geometry.transforms import RigidTransform, compose
from apps.scene.world import WorldSnapshot, cast_rays

logger = logging.getLogger(__name__)

INVERSION_MAX_ITERATIONS = 50
INVERSION_TOLERANCE = 1e-10
BIJECTIVITY_RESIDUAL = 1e-8

# 광학 좌표계(z 전방, x 우측, y 하방) → 차체 좌표계(x 전방, y 좌측, z 상방)
OPTICAL_TO_BODY = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


class DistortionKind(Enum):
    NONE = "none"
    RADIAL = "radial"


@dataclass(frozen=True, eq=False)
class DistortionModel:
    """
    방사 다항식 왜곡 모델: img = lens · (1 + k1·r² + k2·r⁴ + k3·r⁶), r = |lens|

    max_radius는 보정된 시야의 렌즈 평면 반지름. 생성 시 이 범위의 표본 격자에서
    역변환 잔차가 1e-8 미만인지 확인한다.
    """

    kind: DistortionKind = DistortionKind.NONE
    k: tuple = (0.0, 0.0, 0.0)
    max_radius: float = 1.0

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.k) + (0.0,) * (3 - len(self.k))
        if len(coefficients) != 3:
            raise ContractViolation(f"방사 왜곡 계수는 최대 3개입니다: {self.k}")
        object.__setattr__(self, "k", coefficients)
        if self.kind is DistortionKind.RADIAL:
            self._check_bijective()

    @classmethod
    def none(cls) -> "DistortionModel":
        return cls()

    @classmethod
    def radial(cls, k1=0.0, k2=0.0, k3=0.0, max_radius=1.0) -> "DistortionModel":
        return cls(DistortionKind.RADIAL, (k1, k2, k3), max_radius)

    def scale(self, r2: np.ndarray) -> np.ndarray:
        k1, k2, k3 = self.k
        return 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))

    def forward(self, lens) -> np.ndarray:
        """렌즈 평면 → 왜곡된 이미지 평면"""
        lens = np.asarray(lens, dtype=np.float64)
        if self.kind is DistortionKind.NONE:
            return lens.copy()
        r2 = np.sum(lens * lens, axis=-1, keepdims=True)
        return lens * self.scale(r2)

    def _check_bijective(self):
        radii = np.linspace(0.0, self.max_radius, 64)
        # 반지름 방향으로 단조 증가해야 일대일
        distorted_radii = radii * self.scale(radii * radii)
        if np.any(np.diff(distorted_radii) <= 0):
            raise NumericError(
                f"왜곡 모델이 시야 반지름 {self.max_radius} 안에서 단조롭지 않습니다: k={self.k}"
            )
        angles = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        lens = np.stack(
            [
                (radii[:, None] * np.cos(angles)[None, :]).ravel(),
                (radii[:, None] * np.sin(angles)[None, :]).ravel(),
            ],
            axis=-1,
        )
        distorted = self.forward(lens)
        residual = np.abs(self.forward(invert_distortion(self, distorted)) - distorted).max()
        if residual >= BIJECTIVITY_RESIDUAL:
            raise NumericError(f"역왜곡 잔차가 너무 큽니다: {residual:.3e} (k={self.k})")


def invert_distortion(model: DistortionModel, distorted, pixels=None) -> np.ndarray:
    """
    왜곡된 이미지 평면 좌표 → 렌즈 평면 좌표 (고정점 반복)

    lens ← distorted / scale(|lens|²), 최대 50회, 허용 오차 1e-10.
    수렴하지 않는 점이 있으면 NumericError (pixels를 주면 해당 픽셀 좌표를 알려준다).
    """
    distorted = np.asarray(distorted, dtype=np.float64)
    if model.kind is DistortionKind.NONE:
        return distorted.copy()
    single = distorted.ndim == 1
    distorted = distorted.reshape(-1, 2)
    lens = distorted.copy()
    converged = np.zeros(len(lens), dtype=bool)
    for _ in range(INVERSION_MAX_ITERATIONS):
        r2 = np.sum(lens * lens, axis=-1, keepdims=True)
        updated = distorted / model.scale(r2)
        step = np.abs(updated - lens).max(axis=-1)
        lens = updated
        converged = step < INVERSION_TOLERANCE
        if converged.all():
            break
    if not converged.all():
        bad = int(np.argmin(converged))
        where = bad
        if pixels is not None:
            where = tuple(np.asarray(pixels).reshape(-1, 2)[bad].tolist())
        raise NumericError(
            f"역왜곡이 {INVERSION_MAX_ITERATIONS}회 안에 수렴하지 않았습니다", pixel=where
        )
    return lens[0] if single else lens


@dataclass(frozen=True, eq=False)
class CameraSpec:
    """
    깊이 카메라 사양 - 내부 파라미터는 픽셀 단위, mount는 카메라(광학)→차량 변환
    """

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: DistortionModel = field(default_factory=DistortionModel.none)
    max_range: float = 100.0
    mount: RigidTransform = field(default_factory=RigidTransform.identity)
    name: str = "camera"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ContractViolation("이미지 크기는 1 이상이어야 합니다.")
        if not (self.fx > 0 and self.fy > 0):
            raise ContractViolation(f"fx, fy는 양수여야 합니다: {self.fx}, {self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ContractViolation(f"주점이 이미지 밖에 있습니다: ({self.cx}, {self.cy})")
        if not self.max_range > 0:
            raise ContractViolation(f"max_range는 양수여야 합니다: {self.max_range}")

    @classmethod
    def from_fov(
        cls,
        width: int,
        height: int,
        hfov_deg: float,
        body_mount: RigidTransform | None = None,
        distortion: DistortionModel | None = None,
        **kwargs,
    ) -> "CameraSpec":
        """
        수평 시야각으로 정사각 픽셀 카메라 생성

        body_mount는 차체 규약(x 전방) 기준 자세 - 광학 축 회전을 덧붙여 mount로 쓴다.
        """
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        mount = optical_mount(body_mount or RigidTransform.identity())
        return cls(
            width=width,
            height=height,
            fx=fx,
            fy=fx,
            cx=(width - 1) / 2.0,
            cy=(height - 1) / 2.0,
            distortion=distortion or DistortionModel.none(),
            mount=mount,
            **kwargs,
        )

    @property
    def image_corner_radius(self) -> float:
        """이미지 모서리의 왜곡 평면 반지름 (시야 범위)"""
        u = np.array([-0.5, self.width - 0.5])
        v = np.array([-0.5, self.height - 0.5])
        x = np.abs((u - self.cx) / self.fx).max()
        y = np.abs((v - self.cy) / self.fy).max()
        return float(math.hypot(x, y))

    @cached_property
    def pixel_grid(self) -> np.ndarray:
        """(H, W, 2) 픽셀 중심 좌표 (u, v)"""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return np.stack([u, v], axis=-1).astype(np.float64)

    @cached_property
    def lens_grid(self) -> np.ndarray:
        """
        (H, W, 2) 픽셀별 렌즈 평면 좌표 - 사양마다 한 번만 계산해 재사용
        """
        pixels = self.pixel_grid.reshape(-1, 2)
        image_plane = np.stack(
            [(pixels[:, 0] - self.cx) / self.fx, (pixels[:, 1] - self.cy) / self.fy], axis=-1
        )
        lens = invert_distortion(self.distortion, image_plane, pixels=pixels)
        lens = lens.reshape(self.height, self.width, 2)
        lens.setflags(write=False)
        return lens

    def project(self, camera_points) -> np.ndarray:
        """카메라 좌표 점 (N, 3) → 픽셀 좌표 (N, 2), z > 0 필요"""
        camera_points = np.asarray(camera_points, dtype=np.float64).reshape(-1, 3)
        if np.any(camera_points[:, 2] <= 0):
            raise ContractViolation("카메라 뒤쪽(z ≤ 0) 점은 투영할 수 없습니다.")
        lens = camera_points[:, :2] / camera_points[:, 2:3]
        image_plane = self.distortion.forward(lens)
        return np.stack(
            [self.fx * image_plane[:, 0] + self.cx, self.fy * image_plane[:, 1] + self.cy],
            axis=-1,
        )

    def unproject(self, pixels, depth) -> np.ndarray:
        """픽셀 좌표 (N, 2) + z-depth (N,) → 카메라 좌표 점 (N, 3)"""
        pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
        depth = np.asarray(depth, dtype=np.float64).reshape(-1)
        image_plane = np.stack(
            [(pixels[:, 0] - self.cx) / self.fx, (pixels[:, 1] - self.cy) / self.fy], axis=-1
        )
        lens = invert_distortion(self.distortion, image_plane, pixels=pixels)
        return np.stack([lens[:, 0] * depth, lens[:, 1] * depth, depth], axis=-1)


def optical_mount(body_mount: RigidTransform) -> RigidTransform:
    """차체 규약 자세에 광학 좌표계 회전을 덧붙인 카메라→차량 변환"""
    return compose(body_mount, RigidTransform(OPTICAL_TO_BODY, np.zeros(3)))


@dataclass(frozen=True, eq=False)
class DepthImage:
    """
    픽셀별 z-depth (m), 반환 없음은 NaN
    """

    depth: np.ndarray
    timestep: int = 0

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        if depth.ndim != 2:
            raise ContractViolation(f"깊이 이미지는 2차원이어야 합니다: {depth.shape}")
        if np.any(np.isinf(depth)) or np.any(depth[np.isfinite(depth)] <= 0):
            raise ContractViolation("깊이 값은 (0, max_range] 범위여야 합니다.")
        depth.setflags(write=False)
        object.__setattr__(self, "depth", depth)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)


def render_depth(
    spec: CameraSpec, world: WorldSnapshot, ego_pose: RigidTransform, threads: int = 1
) -> DepthImage:
    """
    픽셀 중심을 지나는 광선으로 z-depth 이미지 렌더링 - max_range 너머는 반환 없음
    """
    lens = spec.lens_grid.reshape(-1, 2)
    rays = np.concatenate([lens, np.ones((lens.shape[0], 1))], axis=1)
    norms = np.linalg.norm(rays, axis=1)
    world_from_camera = compose(ego_pose, spec.mount)
    hits = cast_rays(
        world,
        world_from_camera.translation,
        world_from_camera.apply_direction(rays / norms[:, None]),
        spec.max_range * norms,
        threads=threads,
    )
    depth = np.where(hits.hit, hits.distances / norms, np.nan)
    logger.debug(
        "depth rendered camera=%s t=%d pixels=%d returns=%d",
        spec.name,
        world.timestep,
        depth.size,
        int(hits.hit.sum()),
    )
    return DepthImage(depth.reshape(spec.height, spec.width), world.timestep)


def unproject_depth(spec: CameraSpec, image: DepthImage) -> PointCloud:
    """
    깊이 이미지 → 차량 좌표계 포인트 클라우드 (반환 없는 픽셀은 제외)

    미리 계산한 렌즈 좌표로 cam_p = (lens_x·z, lens_y·z, z)를 만든 뒤 mount로 옮긴다.
    """
    if (image.height, image.width) != (spec.height, spec.width):
        raise ContractViolation(
            f"이미지 크기 불일치: {image.width}x{image.height} != {spec.width}x{spec.height}"
        )
    valid = image.valid
    depth = image.depth[valid]
    lens = spec.lens_grid[valid]
    camera_points = np.stack([lens[:, 0] * depth, lens[:, 1] * depth, depth], axis=-1)
    return PointCloud(spec.mount.apply(camera_points), VEHICLE, image.timestep)

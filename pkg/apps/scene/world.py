"""
타임스텝별 월드 스냅샷과 광선 투사
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from apps.geometry.exceptions import ContractViolation
from apps.geometry.transforms import as_vec3

from .actors import Actor
from .bvh import Bvh, build_bvh, trace_brute_force, trace_bvh, triangle_edges

logger = logging.getLogger(__name__)

# 광선 진입 epsilon (m) - 센서가 ego 표면에 붙어 있어도 자기 교차하지 않도록
RAY_EPSILON = 1e-6
UNIT_TOLERANCE = 1e-12
# 스레드 하나가 처리하는 최소 광선 수
MIN_CHUNK = 16384


@dataclass(frozen=True, eq=False)
class Ray:
    """월드 좌표 광선 (단위 방향, max_range > 0)"""

    origin: np.ndarray
    direction: np.ndarray
    max_range: float

    def __post_init__(self):
        object.__setattr__(self, "origin", as_vec3(self.origin))
        direction = as_vec3(self.direction)
        if abs(np.linalg.norm(direction) - 1.0) > UNIT_TOLERANCE:
            raise ContractViolation(f"광선 방향은 단위 벡터여야 합니다: {direction.tolist()}")
        if not self.max_range > 0:
            raise ContractViolation(f"max_range는 양수여야 합니다: {self.max_range}")
        object.__setattr__(self, "direction", direction)


@dataclass(frozen=True, eq=False)
class Hit:
    point: np.ndarray
    distance: float
    actor_id: str


@dataclass(frozen=True, eq=False)
class RayHits:
    """
    일괄 광선 투사 결과

    distances: 교차 거리, 빗나가면 inf
    triangles: 삼각형 인덱스, 빗나가면 -1
    actors: 액터 인덱스 (WorldSnapshot.actor_ids 기준), 빗나가면 -1
    """

    distances: np.ndarray
    triangles: np.ndarray
    actors: np.ndarray

    @property
    def hit(self) -> np.ndarray:
        return self.triangles >= 0


@dataclass(frozen=True, eq=False)
class WorldSnapshot:
    """
    한 타임스텝의 월드 - 모든 액터 삼각형(월드 좌표)과 BVH

    생성 후 변경하지 않으므로 여러 스레드에서 동시에 광선을 투사해도 된다.
    """

    timestep: int
    corners: np.ndarray
    triangle_actor: np.ndarray
    actor_ids: tuple
    ego_index: int
    bvh: Bvh
    edges: tuple

    def __len__(self):
        return self.corners.shape[0]

    @property
    def triangle_is_ego(self) -> np.ndarray:
        return self.triangle_actor == self.ego_index

    def actor_index(self, actor_id: str) -> int:
        return self.actor_ids.index(actor_id)


def build_world(actors: "list[Actor]", t: int) -> WorldSnapshot:
    """
    타임스텝 t의 월드 스냅샷 구성

    궤적이 정의되지 않은 액터가 있으면 ScenarioError. BVH는 매 타임스텝 새로 만든다.
    """
    actors = list(actors)
    blocks, owners = [], []
    ego_index = -1
    for index, actor in enumerate(actors):
        if actor.is_ego:
            ego_index = index
        pose = actor.pose_at(t)
        corners = actor.mesh.corners()
        if corners.size == 0:
            continue
        blocks.append(pose.apply(corners.reshape(-1, 3)).reshape(-1, 3, 3))
        owners.append(np.full(corners.shape[0], index, dtype=np.int64))

    if blocks:
        corners = np.concatenate(blocks)
        triangle_actor = np.concatenate(owners)
    else:
        corners = np.empty((0, 3, 3))
        triangle_actor = np.empty(0, dtype=np.int64)

    bvh = build_bvh(corners)
    logger.debug(
        "world built t=%d actors=%d triangles=%d bvh_nodes=%d",
        t,
        len(actors),
        corners.shape[0],
        bvh.size,
    )
    return WorldSnapshot(
        timestep=t,
        corners=corners,
        triangle_actor=triangle_actor,
        actor_ids=tuple(actor.actor_id for actor in actors),
        ego_index=ego_index,
        bvh=bvh,
        edges=triangle_edges(corners),
    )


def _trace_chunk(world: WorldSnapshot, origins, directions, max_ranges, brute_force: bool):
    out_t = np.empty(origins.shape[0], dtype=np.float64)
    out_tri = np.empty(origins.shape[0], dtype=np.int64)
    v0, e1, e2 = world.edges
    if brute_force:
        trace_brute_force(origins, directions, max_ranges, RAY_EPSILON, v0, e1, e2, out_t, out_tri)
    else:
        bvh = world.bvh
        trace_bvh(
            origins,
            directions,
            max_ranges,
            RAY_EPSILON,
            v0,
            e1,
            e2,
            bvh.node_min,
            bvh.node_max,
            bvh.node_left,
            bvh.node_right,
            bvh.node_start,
            bvh.node_count,
            bvh.order,
            out_t,
            out_tri,
        )
    return out_t, out_tri


def cast_rays(
    world: WorldSnapshot,
    origins,
    directions,
    max_range,
    threads: int = 1,
    brute_force: bool = False,
) -> RayHits:
    """
    광선 일괄 투사

    origins/directions: (N, 3) 월드 좌표, directions는 단위 벡터
    max_range: 스칼라 또는 (N,) 광선별 최대 거리
    threads > 1 이면 광선을 나눠 스레드 풀에서 추적한다 (결과는 스레드 수와 무관).
    """
    directions = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
    origins = np.ascontiguousarray(
        np.broadcast_to(np.asarray(origins, dtype=np.float64), directions.shape)
    )
    max_ranges = np.ascontiguousarray(
        np.broadcast_to(np.asarray(max_range, dtype=np.float64), directions.shape[:1])
    )
    n = directions.shape[0]

    chunks = max(1, min(threads, math.ceil(n / MIN_CHUNK)))
    if chunks == 1:
        out_t, out_tri = _trace_chunk(world, origins, directions, max_ranges, brute_force)
    else:
        bounds = np.linspace(0, n, chunks + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            parts = list(
                pool.map(
                    lambda k: _trace_chunk(
                        world,
                        origins[bounds[k] : bounds[k + 1]],
                        directions[bounds[k] : bounds[k + 1]],
                        max_ranges[bounds[k] : bounds[k + 1]],
                        brute_force,
                    ),
                    range(chunks),
                )
            )
        out_t = np.concatenate([p[0] for p in parts])
        out_tri = np.concatenate([p[1] for p in parts])

    actors = np.full(n, -1, dtype=np.int64)
    hit = out_tri >= 0
    actors[hit] = world.triangle_actor[out_tri[hit]]
    return RayHits(out_t, out_tri, actors)


def cast_ray(world: WorldSnapshot, ray: Ray):
    """가장 가까운 교차 Hit, 없으면 None"""
    hits = cast_rays(world, ray.origin[None], ray.direction[None], ray.max_range)
    if not hits.hit[0]:
        return None
    distance = float(hits.distances[0])
    return Hit(
        point=ray.origin + distance * ray.direction,
        distance=distance,
        actor_id=world.actor_ids[hits.actors[0]],
    )

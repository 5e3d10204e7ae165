"""
BVH (bounding volume hierarchy) 구성과 광선 추적 커널

구성은 numpy, 순회는 numba 커널(nogil)로 처리한다. 커널은 GIL을 놓기 때문에
여러 스레드에서 같은 BVH를 동시에 순회할 수 있다.

교차 규칙 (BVH와 전수 검사가 동일):
    - 거리 t ∈ (eps, max_range] 인 교차만 인정
    - 가장 가까운 교차, 같은 거리면 삼각형 인덱스가 작은 쪽
"""

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

logger = logging.getLogger(__name__)

LEAF_SIZE = 4
STACK_SIZE = 256
# 노드 박스 여유 (좌표 크기에 비례) - 경계 위 교차가 슬랩 테스트에서 잘리지 않도록
BOX_PADDING = 1e-9


@dataclass(frozen=True, eq=False)
class Bvh:
    """
    평탄화된 BVH

    내부 노드: left/right 자식 인덱스, count = 0
    리프 노드: order[start:start + count] 가 담긴 삼각형, left = right = -1
    """

    node_min: np.ndarray
    node_max: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_start: np.ndarray
    node_count: np.ndarray
    order: np.ndarray

    @property
    def size(self) -> int:
        return self.node_min.shape[0]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.node_count > 0)


def build_bvh(corners: np.ndarray, leaf_size: int = LEAF_SIZE) -> Bvh:
    """
    삼각형 (T, 3, 3) 위에 BVH 구성

    가장 넓게 퍼진 축의 무게중심 중앙값으로 분할한다. 모든 삼각형은 정확히
    하나의 리프에 들어가고, 부모 박스는 자식 박스를 포함한다.
    """
    n = corners.shape[0]
    order = np.arange(n, dtype=np.int64)
    if n == 0:
        empty_bounds = np.empty((0, 3))
        empty_index = np.empty(0, dtype=np.int64)
        return Bvh(
            empty_bounds, empty_bounds, empty_index, empty_index, empty_index, empty_index, order
        )

    tri_min = corners.min(axis=1)
    tri_max = corners.max(axis=1)
    centroid = corners.mean(axis=1)

    mins, maxs, lefts, rights, starts, counts = [], [], [], [], [], []

    def new_node(start, end):
        members = order[start:end]
        lo = tri_min[members].min(axis=0)
        hi = tri_max[members].max(axis=0)
        pad = BOX_PADDING * max(1.0, float(np.abs(lo).max()), float(np.abs(hi).max()))
        mins.append(lo - pad)
        maxs.append(hi + pad)
        lefts.append(-1)
        rights.append(-1)
        starts.append(start)
        counts.append(0)
        return len(mins) - 1

    root = new_node(0, n)
    stack = [(root, 0, n)]
    while stack:
        node, start, end = stack.pop()
        members = order[start:end]
        spread = centroid[members].max(axis=0) - centroid[members].min(axis=0)
        axis = int(np.argmax(spread))
        if end - start <= leaf_size or spread[axis] <= 0.0:
            counts[node] = end - start
            continue
        mid = (end - start) // 2
        split = np.argpartition(centroid[members, axis], mid)
        order[start:end] = members[split]
        left = new_node(start, start + mid)
        right = new_node(start + mid, end)
        lefts[node], rights[node] = left, right
        stack.append((right, start + mid, end))
        stack.append((left, start, start + mid))

    return Bvh(
        np.array(mins),
        np.array(maxs),
        np.array(lefts, dtype=np.int64),
        np.array(rights, dtype=np.int64),
        np.array(starts, dtype=np.int64),
        np.array(counts, dtype=np.int64),
        order,
    )


def triangle_edges(corners: np.ndarray):
    """커널 입력용 (v0, e1, e2) - 연속 메모리 float64"""
    v0 = np.ascontiguousarray(corners[:, 0], dtype=np.float64)
    e1 = np.ascontiguousarray(corners[:, 1] - corners[:, 0], dtype=np.float64)
    e2 = np.ascontiguousarray(corners[:, 2] - corners[:, 0], dtype=np.float64)
    return v0, e1, e2


@njit(nogil=True, cache=True, error_model="numpy")
def _hit_distance(ox, oy, oz, dx, dy, dz, v0, e1, e2, tri):
    # Möller-Trumbore, 경계 포함 (u, v ≥ 0, u + v ≤ 1) - 공유 모서리에서 틈이 없도록
    e1x, e1y, e1z = e1[tri, 0], e1[tri, 1], e1[tri, 2]
    e2x, e2y, e2z = e2[tri, 0], e2[tri, 1], e2[tri, 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if det == 0.0:
        return -1.0
    inv_det = 1.0 / det
    tx = ox - v0[tri, 0]
    ty = oy - v0[tri, 1]
    tz = oz - v0[tri, 2]
    u = (tx * px + ty * py + tz * pz) * inv_det
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < 0.0 or u + v > 1.0:
        return -1.0
    return (e2x * qx + e2y * qy + e2z * qz) * inv_det


@njit(nogil=True, cache=True, error_model="numpy")
def _slab_axis(o, d, lo, hi, t_near, t_far):
    if d == 0.0:
        if o < lo or o > hi:
            return 1.0, 0.0
        return t_near, t_far
    inv = 1.0 / d
    t1 = (lo - o) * inv
    t2 = (hi - o) * inv
    if t1 > t2:
        t1, t2 = t2, t1
    return max(t_near, t1), min(t_far, t2)


@njit(nogil=True, cache=True, error_model="numpy")
def trace_bvh(
    origins,
    directions,
    max_ranges,
    eps,
    v0,
    e1,
    e2,
    node_min,
    node_max,
    node_left,
    node_right,
    node_start,
    node_count,
    order,
    out_t,
    out_tri,
):
    """광선마다 가장 가까운 교차 (out_t: 거리 또는 inf, out_tri: 삼각형 또는 -1)"""
    n_nodes = node_min.shape[0]
    stack = np.empty(STACK_SIZE, dtype=np.int64)
    for i in range(origins.shape[0]):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = directions[i, 0], directions[i, 1], directions[i, 2]
        best_t = max_ranges[i]
        best_tri = -1
        sp = 0
        if n_nodes > 0:
            stack[0] = 0
            sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            t_near, t_far = _slab_axis(ox, dx, node_min[node, 0], node_max[node, 0], 0.0, best_t)
            t_near, t_far = _slab_axis(oy, dy, node_min[node, 1], node_max[node, 1], t_near, t_far)
            t_near, t_far = _slab_axis(oz, dz, node_min[node, 2], node_max[node, 2], t_near, t_far)
            if t_near > t_far:
                continue
            count = node_count[node]
            if count > 0:
                start = node_start[node]
                for k in range(start, start + count):
                    tri = order[k]
                    t = _hit_distance(ox, oy, oz, dx, dy, dz, v0, e1, e2, tri)
                    if t > eps and (
                        t < best_t or (t == best_t and (best_tri < 0 or tri < best_tri))
                    ):
                        best_t = t
                        best_tri = tri
            else:
                stack[sp] = node_right[node]
                stack[sp + 1] = node_left[node]
                sp += 2
        if best_tri >= 0:
            out_t[i] = best_t
        else:
            out_t[i] = np.inf
        out_tri[i] = best_tri


@njit(nogil=True, cache=True, error_model="numpy")
def trace_brute_force(origins, directions, max_ranges, eps, v0, e1, e2, out_t, out_tri):
    """모든 삼각형을 검사하는 기준 구현 (테스트 오라클)"""
    for i in range(origins.shape[0]):
        ox, oy, oz = origins[i, 0], origins[i, 1], origins[i, 2]
        dx, dy, dz = directions[i, 0], directions[i, 1], directions[i, 2]
        best_t = max_ranges[i]
        best_tri = -1
        for tri in range(v0.shape[0]):
            t = _hit_distance(ox, oy, oz, dx, dy, dz, v0, e1, e2, tri)
            if t > eps and (t < best_t or (t == best_t and (best_tri < 0 or tri < best_tri))):
                best_t = t
                best_tri = tri
        if best_tri >= 0:
            out_t[i] = best_t
        else:
            out_t[i] = np.inf
        out_tri[i] = best_tri

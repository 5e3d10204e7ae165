"""
정확한 최근접 이웃(k-d tree) 검색

scipy cKDTree(중앙값 분할, 가장 넓게 퍼진 축 기준)를 감싸고 다음 규칙을 더한다.
  - 거리는 제곱 거리를 성분별로 계산한 뒤 경계에서만 제곱근을 취한다.
  - 같은 거리의 점이 여러 개면 가장 작은 인덱스를 고른다.
  - 점이 없는 트리는 모든 질의에 거리 inf, 인덱스 -1을 돌려준다.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

LEAF_SIZE = 32
# 상대 오차 안의 2순위 후보가 있으면 동률 후보를 반경 질의로 다시 모은다
TIE_TOLERANCE = 1e-9
TIE_ABSOLUTE = 1e-12
BRUTE_FORCE_BLOCK = 1 << 22


def _as_points(values) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        return np.empty((0, 3), dtype=np.float64)
    return np.ascontiguousarray(array.reshape(-1, 3))


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """성분별 제곱 거리 - 트리와 brute force가 같은 덧셈 순서를 쓴다"""
    dx = a[..., 0] - b[..., 0]
    dy = a[..., 1] - b[..., 1]
    dz = a[..., 2] - b[..., 2]
    return dx * dx + dy * dy + dz * dz


@dataclass(frozen=True)
class NnResult:
    distance: float
    index: int


@dataclass(frozen=True, eq=False)
class NnBatch:
    """
    일괄 질의 결과 - 질의 순서와 같은 순서의 distances/indices 배열
    """

    distances: np.ndarray
    indices: np.ndarray

    def __len__(self):
        return self.distances.shape[0]

    def __getitem__(self, i) -> NnResult:
        return NnResult(float(self.distances[i]), int(self.indices[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


class KdTree:
    """
    생성 후 변경하지 않는 k-d tree

    query는 읽기 전용이므로 여러 스레드에서 동시에 호출해도 된다.
    """

    def __init__(self, points, leaf_size: int = LEAF_SIZE):
        self.points = _as_points(points)
        self.points.setflags(write=False)
        self.leaf_size = leaf_size
        self._tree = (
            cKDTree(self.points, leafsize=leaf_size, balanced_tree=True, compact_nodes=True)
            if len(self)
            else None
        )

    def __len__(self):
        return self.points.shape[0]

    def query(self, queries, workers: int = 1) -> NnBatch:
        queries = _as_points(queries)
        m = queries.shape[0]
        if m == 0 or self._tree is None:
            return NnBatch(np.full(m, np.inf), np.full(m, -1, dtype=np.int64))

        k = [1, 2] if len(self) > 1 else [1]
        kd_distances, kd_indices = self._tree.query(queries, k=k, workers=workers)
        indices = kd_indices[:, 0].astype(np.int64)

        if len(self) > 1:
            near_tie = kd_distances[:, 1] <= kd_distances[:, 0] * (1 + TIE_TOLERANCE) + TIE_ABSOLUTE
            rows = np.flatnonzero(near_tie)
            if rows.size:
                indices[rows] = self._resolve_ties(queries[rows], kd_distances[rows, 0], workers)

        best_squared = squared_distances(self.points[indices], queries)
        return NnBatch(np.sqrt(best_squared), indices)

    def _resolve_ties(self, queries: np.ndarray, radii: np.ndarray, workers: int) -> np.ndarray:
        """동률 후보 중 정확한 제곱 거리 최소, 그중 최소 인덱스"""
        candidates = self._tree.query_ball_point(
            queries, radii * (1 + TIE_TOLERANCE) + TIE_ABSOLUTE, workers=workers
        )
        resolved = np.empty(queries.shape[0], dtype=np.int64)
        for row, found in enumerate(candidates):
            found = np.sort(np.asarray(found, dtype=np.int64))
            squared = squared_distances(self.points[found], queries[row])
            resolved[row] = found[int(np.argmin(squared))]
        logger.debug("kd-tree tie resolution queries=%d", queries.shape[0])
        return resolved


def build(points, leaf_size: int = LEAF_SIZE) -> KdTree:
    return KdTree(points, leaf_size=leaf_size)


def nearest(tree: KdTree, q) -> NnResult:
    return tree.query(q)[0]


def nearest_batch(tree: KdTree, queries, workers: int = 1) -> NnBatch:
    """
    질의 일괄 처리 - workers는 scipy 질의 스레드 수 (-1이면 전체 CPU)

    결과는 workers 값과 무관하게 같다.
    """
    return tree.query(queries, workers=workers)


def brute_force_nearest(points, queries) -> NnBatch:
    """
    전수 비교 기준 구현 - 블록 단위로 (질의 x 점) 제곱 거리 행렬을 만들어 argmin
    """
    points = _as_points(points)
    queries = _as_points(queries)
    m, n = queries.shape[0], points.shape[0]
    if n == 0:
        return NnBatch(np.full(m, np.inf), np.full(m, -1, dtype=np.int64))

    indices = np.empty(m, dtype=np.int64)
    block = max(1, BRUTE_FORCE_BLOCK // n)
    for start in range(0, m, block):
        chunk = queries[start : start + block]
        squared = squared_distances(points[None, :, :], chunk[:, None, :])
        indices[start : start + chunk.shape[0]] = np.argmin(squared, axis=1)
    return NnBatch(np.sqrt(squared_distances(points[indices], queries)), indices)

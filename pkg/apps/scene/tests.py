import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.geometry.exceptions import ArtifactIOError, ContractViolation, ParseError, ScenarioError
from apps.geometry.transforms import RigidTransform
from apps.scene.actors import (
    Actor,
    KeyframeTrajectory,
    LinearTrajectory,
    StaticTrajectory,
    find_ego,
)
from apps.scene.bvh import build_bvh
from apps.scene.meshes import TriangleMesh, box, ground_plane, hatchback, load_obj
from apps.scene.world import Ray, build_world, cast_ray, cast_rays


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture
def box_world():
    actors = [
        Actor("ego", box([2.0, 2.0, 1.0], [0.0, 0.0, 0.5]), is_ego=True),
        Actor(
            "target",
            box([1.0, 1.0, 1.0]),
            StaticTrajectory(RigidTransform.from_translation([10.0, 0.0, 0.5])),
        ),
        Actor("ground", ground_plane(100.0)),
    ]
    return build_world(actors, 0)


class TestMeshes:
    def test_box_has_twelve_outward_triangles(self):
        mesh = box([2.0, 4.0, 6.0], [1.0, 0.0, 0.0])
        assert len(mesh) == 12
        corners = mesh.corners()
        normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        outward = corners.mean(axis=1) - np.array([1.0, 0.0, 0.0])
        assert np.all(np.sum(normals * outward, axis=1) > 0)

    def test_box_rejects_non_positive_size(self):
        with pytest.raises(ContractViolation):
            box([1.0, 0.0, 1.0])

    def test_rejects_degenerate_triangle(self):
        with pytest.raises(ContractViolation):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ContractViolation):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])

    def test_ground_plane_covers_extent(self):
        mesh = ground_plane(50.0)
        assert len(mesh) == 2
        np.testing.assert_array_equal(mesh.vertices.min(axis=0), [-50.0, -50.0, 0.0])

    def test_hatchback_sits_on_ground_around_origin(self):
        vertices = hatchback().vertices
        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
        assert lo[2] > 0
        assert lo[0] == pytest.approx(-hi[0])
        assert lo[1] == pytest.approx(-hi[1])

    def test_load_obj(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("# triangle\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1 2/2 -1\n")
        mesh = load_obj(path)
        assert len(mesh) == 1
        np.testing.assert_array_equal(mesh.triangles, [[0, 1, 2]])

    def test_load_obj_rejects_quads_with_line_number(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ParseError) as excinfo:
            load_obj(path)
        assert excinfo.value.offset == 5

    def test_load_obj_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            load_obj(tmp_path / "missing.obj")


class TestTrajectories:
    def test_linear_keeps_heading(self):
        start = RigidTransform.from_xyz_ypr([1.0, 2.0, 0.0], [30.0, 0.0, 0.0])
        trajectory = LinearTrajectory(start, [10.0, 0.0, 0.0], dt=0.1)
        pose = trajectory.pose_at(5)
        np.testing.assert_allclose(pose.translation, [6.0, 2.0, 0.0])
        np.testing.assert_array_equal(pose.rotation, start.rotation)

    def test_linear_rejects_non_positive_dt(self):
        with pytest.raises(ContractViolation):
            LinearTrajectory(RigidTransform.identity(), [1.0, 0.0, 0.0], dt=0.0)

    def test_keyframe_missing_timestep(self):
        identity = RigidTransform.identity()
        trajectory = KeyframeTrajectory({0: identity, 2: identity})
        assert not trajectory.defined_for(3)
        assert trajectory.defined_for(1)
        with pytest.raises(ScenarioError):
            trajectory.pose_at(1)

    def test_find_ego_requires_exactly_one(self):
        mesh = box([1.0, 1.0, 1.0])
        with pytest.raises(ScenarioError):
            find_ego([Actor("a", mesh)])
        with pytest.raises(ScenarioError):
            find_ego([Actor("a", mesh, is_ego=True), Actor("b", mesh, is_ego=True)])
        assert find_ego([Actor("a", mesh), Actor("b", mesh, is_ego=True)]).actor_id == "b"


class TestWorld:
    def test_snapshot_places_actor_triangles(self, box_world):
        assert len(box_world) == 12 + 12 + 2
        assert box_world.actor_index("target") == 1
        assert box_world.ego_index == 0
        target = box_world.corners[box_world.triangle_actor == 1]
        np.testing.assert_allclose(target.reshape(-1, 3).min(axis=0), [9.5, -0.5, 0.0])

    def test_cast_ray_hits_nearest_face(self, box_world):
        hit = cast_ray(box_world, Ray([3.0, 0.0, 0.5], [1.0, 0.0, 0.0], 50.0))
        assert hit.actor_id == "target"
        assert hit.distance == pytest.approx(6.5)
        np.testing.assert_allclose(hit.point, [9.5, 0.0, 0.5])

    def test_cast_ray_downward_hits_ground(self, box_world):
        hit = cast_ray(box_world, Ray([20.0, 0.0, 2.0], [0.0, 0.0, -1.0], 50.0))
        assert hit.actor_id == "ground"
        assert hit.distance == pytest.approx(2.0)

    def test_max_range_limits_hits(self, box_world):
        down = ([20.0, 0.0, 2.0], [0.0, 0.0, -1.0])
        assert cast_ray(box_world, Ray(*down, 2.0 + 1e-9)) is not None
        assert cast_ray(box_world, Ray(*down, 1.999)) is None

    def test_ray_starting_on_surface_does_not_hit_itself(self, box_world):
        # 박스 앞면(x = 1) 위에서 바깥으로
        hit = cast_ray(box_world, Ray([1.0, 0.0, 0.5], [1.0, 0.0, 0.0], 50.0))
        assert hit.actor_id == "target"

    def test_ray_through_shared_edge_is_not_lost(self, box_world):
        # 지면 두 삼각형의 공유 대각선 위
        hit = cast_ray(box_world, Ray([30.0, 30.0, 1.0], [0.0, 0.0, -1.0], 5.0))
        assert hit is not None and hit.actor_id == "ground"

    def test_ray_requires_unit_direction(self):
        with pytest.raises(ContractViolation):
            Ray([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], 10.0)

    def test_empty_world_misses_everything(self):
        world = build_world([], 0)
        hits = cast_rays(world, [0.0, 0.0, 0.0], unit([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), 10.0)
        assert not hits.hit.any()
        assert np.all(np.isinf(hits.distances))
        assert np.all(hits.actors == -1)

    def test_threaded_cast_matches_single_thread(self, box_world):
        rng = np.random.default_rng(3)
        directions = unit(rng.normal(size=(40000, 3)))
        single = cast_rays(box_world, [0.0, 0.0, 3.0], directions, 80.0, threads=1)
        threaded = cast_rays(box_world, [0.0, 0.0, 3.0], directions, 80.0, threads=4)
        np.testing.assert_array_equal(single.distances, threaded.distances)
        np.testing.assert_array_equal(single.triangles, threaded.triangles)


class TestBvh:
    def random_soup(self, seed, count):
        rng = np.random.default_rng(seed)
        centers = rng.uniform(-20.0, 20.0, size=(count, 1, 3))
        return centers + rng.uniform(-1.5, 1.5, size=(count, 3, 3))

    def test_every_triangle_in_exactly_one_leaf(self):
        corners = self.random_soup(0, 500)
        bvh = build_bvh(corners)
        members = np.concatenate(
            [
                bvh.order[bvh.node_start[n] : bvh.node_start[n] + bvh.node_count[n]]
                for n in bvh.leaves()
            ]
        )
        np.testing.assert_array_equal(np.sort(members), np.arange(500))

    def test_parent_boxes_contain_children(self):
        bvh = build_bvh(self.random_soup(1, 300))
        for node in range(bvh.size):
            for child in (bvh.node_left[node], bvh.node_right[node]):
                if child >= 0:
                    assert np.all(bvh.node_min[node] <= bvh.node_min[child])
                    assert np.all(bvh.node_max[node] >= bvh.node_max[child])

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.integers(min_value=1, max_value=5000),
    )
    def test_traversal_matches_brute_force(self, seed, count):
        corners = self.random_soup(seed, count)
        mesh = TriangleMesh(corners.reshape(-1, 3), np.arange(count * 3).reshape(-1, 3))
        world = build_world([Actor("soup", mesh)], 0)
        rng = np.random.default_rng(seed + 1)
        origins = rng.uniform(-30.0, 30.0, size=(10_000, 3))
        directions = unit(rng.normal(size=(10_000, 3)))
        fast = cast_rays(world, origins, directions, 100.0)
        slow = cast_rays(world, origins, directions, 100.0, brute_force=True)
        np.testing.assert_array_equal(fast.triangles, slow.triangles)
        np.testing.assert_array_equal(fast.distances, slow.distances)

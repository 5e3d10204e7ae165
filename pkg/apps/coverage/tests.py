import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.coverage.grids import (
    GROUND,
    OBSTACLES,
    CoverageGrid,
    GridSpec,
    Raster,
    VerticalSlab,
)
from apps.coverage.metrics import (
    REGION_PRESETS,
    Roi,
    RoiSummary,
    blind_spot_radii,
    roi_preset,
    summarize,
)
from apps.geometry.clouds import VEHICLE, Frame, PointCloud
from apps.geometry.exceptions import ContractViolation

R_THRESH = 0.4
SMALL = GridSpec(0.0, 4.0, 0.0, 3.0, 1.0)


def micro_timesteps(seed=0, steps=8, per_step=60):
    """격자 안팎, slab 안팎, 대각선보다 먼 r과 inf가 섞인 표본"""
    rng = np.random.default_rng(seed)
    frames = []
    for t in range(steps):
        points = np.column_stack(
            [
                rng.uniform(-1.0, 5.0, per_step),
                rng.uniform(-1.0, 4.0, per_step),
                rng.uniform(-1.0, 1.0, per_step),
            ]
        )
        radii = rng.choice([0.0, 0.1, 0.4, 0.41, 2.0, 7.5, np.inf], per_step) * (t % 3 + 1)
        frames.append((points, radii))
    return frames


def naive_cell(spec, slab, point):
    x, y, z = point
    if not (spec.x_min <= x < spec.x_max and spec.y_min <= y < spec.y_max):
        return None
    if not (slab.z_min <= z < slab.z_max):
        return None
    ix = math.floor((x - spec.x_min) / spec.cell_size)
    iy = math.floor((y - spec.y_min) / spec.cell_size)
    return ix, iy


def naive_rasters(spec, slab, frames, r_thresh):
    """칸마다 타임스텝별 부분합을 먼저 만들고 타임스텝 순서로 더하는 이중 루프"""
    cap = spec.diagonal
    shape = spec.shape
    pooled_sum = np.zeros(shape)
    probes = np.zeros(shape, dtype=np.int64)
    hits = np.zeros(shape, dtype=np.int64)
    worst = np.zeros(shape)
    mean_sum = np.zeros(shape)
    probability_sum = np.zeros(shape)
    observed = np.zeros(shape, dtype=np.int64)

    for points, radii in frames:
        step_sum = np.zeros(shape)
        step_probes = np.zeros(shape, dtype=np.int64)
        step_hits = np.zeros(shape, dtype=np.int64)
        for point, r in zip(points, radii):
            cell = naive_cell(spec, slab, point)
            if cell is None:
                continue
            clamped = min(r, cap)
            step_sum[cell] += clamped
            step_probes[cell] += 1
            step_hits[cell] += int(r <= r_thresh)
            worst[cell] = max(worst[cell], clamped)
        for ix in range(shape[0]):
            for iy in range(shape[1]):
                cell = (ix, iy)
                pooled_sum[cell] += step_sum[cell]
                probes[cell] += step_probes[cell]
                hits[cell] += step_hits[cell]
                if step_probes[cell]:
                    mean_sum[cell] += step_sum[cell] / step_probes[cell]
                    probability_sum[cell] += step_hits[cell] / step_probes[cell]
                    observed[cell] += 1

    expected = {
        key: np.full(shape, np.nan) for key in ("pooled", "nested", "max", "p", "p_nested")
    }
    for ix in range(shape[0]):
        for iy in range(shape[1]):
            cell = (ix, iy)
            if probes[cell]:
                expected["pooled"][cell] = pooled_sum[cell] / probes[cell]
                expected["max"][cell] = worst[cell]
                expected["p"][cell] = hits[cell] / probes[cell]
                expected["nested"][cell] = mean_sum[cell] / observed[cell]
                expected["p_nested"][cell] = probability_sum[cell] / observed[cell]
    return expected


def run_grid(frames, **kwargs):
    grid = CoverageGrid(SMALL, GROUND, **kwargs)
    for points, radii in frames:
        grid.accumulate(points, radii, R_THRESH)
    return grid


def raster(values, slab="ground", kind="mean_radius", x_min=0.0, y_min=0.0, cell=1.0):
    return Raster(np.asarray(values, dtype=np.float64), x_min, y_min, cell, slab, kind)


class TestGridSpec:
    def test_cell_count_rounds_up(self):
        assert GridSpec(0.0, 10.1, 0.0, 5.0, 1.0).shape == (11, 5)
        assert GridSpec(-10.0, 20.0, -10.0, 10.0, 0.2).shape == (150, 100)

    def test_cells_are_half_open(self):
        assert SMALL.cell_of(0.0, 0.0) == (0, 0)
        assert SMALL.cell_of(1.0, 2.999) == (1, 2)
        assert SMALL.cell_of(3.999, 0.5) == (3, 0)
        assert SMALL.cell_of(4.0, 0.5) is None
        assert SMALL.cell_of(-1e-12, 0.5) is None

    def test_diagonal(self):
        assert SMALL.diagonal == pytest.approx(5.0)

    @pytest.mark.parametrize(
        "args", [(0.0, 1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 0.0, 1.0, 0.1), (0.0, 1.0, 2.0, 1.0, 0.1)]
    )
    def test_rejects_invalid_spec(self, args):
        with pytest.raises(ContractViolation):
            GridSpec(*args)

    def test_slabs_are_half_open(self):
        assert GROUND.contains(-0.5) and not GROUND.contains(0.5)
        assert OBSTACLES.contains(0.5) and not OBSTACLES.contains(2.0)
        with pytest.raises(ContractViolation):
            VerticalSlab("flat", 1.0, 1.0)


class TestAccumulation:
    @pytest.mark.parametrize(
        "options, mean_key, probability_key",
        [
            ({}, "pooled", "p"),
            ({"averaging": "nested"}, "nested", "p_nested"),
            ({"aggregation": "max"}, "max", "p"),
        ],
    )
    def test_micro_scenario_matches_naive_loop(self, options, mean_key, probability_key):
        frames = micro_timesteps()
        expected = naive_rasters(SMALL, GROUND, frames, R_THRESH)
        rasters = run_grid(frames, **options).finalize()
        np.testing.assert_array_equal(rasters.mean_radius.values, expected[mean_key])
        np.testing.assert_array_equal(
            rasters.detection_probability.values, expected[probability_key]
        )

    def test_pooled_and_nested_differ_when_sample_counts_differ(self):
        grid = {name: CoverageGrid(SMALL, GROUND, averaging=name) for name in ("pooled", "nested")}
        for g in grid.values():
            g.accumulate([[0.5, 0.5, 0.0]], [1.0], R_THRESH)
            g.accumulate([[0.5, 0.5, 0.0]] * 3, [3.0, 3.0, 3.0], R_THRESH)
        assert grid["pooled"].finalize().mean_radius.values[0, 0] == pytest.approx(2.5)
        assert grid["nested"].finalize().mean_radius.values[0, 0] == pytest.approx(2.0)

    def test_radius_is_clamped_to_diagonal(self):
        grid = CoverageGrid(SMALL, GROUND)
        grid.accumulate([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]], [np.inf, 1.0], R_THRESH)
        assert grid.clamped == 1
        assert grid.finalize().mean_radius.values[0, 0] == pytest.approx(3.0)

    def test_threshold_uses_unclamped_radius(self):
        tiny = GridSpec(0.0, 1.0, 0.0, 1.0, 1.0)
        grid = CoverageGrid(tiny, GROUND)
        grid.accumulate([[0.5, 0.5, 0.0]], [1.5], r_thresh=2.0)
        rasters = grid.finalize()
        assert rasters.detection_probability.values[0, 0] == 1.0
        assert rasters.mean_radius.values[0, 0] == pytest.approx(math.sqrt(2.0))

    def test_threshold_is_inclusive(self):
        grid = CoverageGrid(SMALL, GROUND)
        grid.accumulate([[0.5, 0.5, 0.0]] * 2, [R_THRESH, np.nextafter(R_THRESH, 1.0)], R_THRESH)
        assert grid.finalize().detection_probability.values[0, 0] == 0.5

    def test_samples_outside_grid_or_slab_are_ignored(self):
        grid = CoverageGrid(SMALL, OBSTACLES)
        count = grid.accumulate(
            [[0.5, 0.5, 0.0], [0.5, 0.5, 1.0], [9.0, 0.5, 1.0], [0.5, 0.5, 2.0]],
            [1.0, 2.0, 3.0, 4.0],
            R_THRESH,
        )
        assert count == 1
        assert grid.probe_count.sum() == 1

    @pytest.mark.parametrize("bad", [-0.1, np.nan])
    def test_rejects_negative_or_nan_radius(self, bad):
        grid = CoverageGrid(SMALL, GROUND)
        with pytest.raises(ContractViolation):
            grid.accumulate([[0.5, 0.5, 0.0]], [bad], R_THRESH)

    def test_unknown_modes(self):
        with pytest.raises(ContractViolation):
            CoverageGrid(SMALL, GROUND, aggregation="median")
        with pytest.raises(ContractViolation):
            CoverageGrid(SMALL, GROUND, averaging="weighted")

    def test_unobserved_cells_are_nan(self):
        grid = CoverageGrid(SMALL, GROUND)
        grid.accumulate([[0.5, 0.5, 0.0]], [0.1], R_THRESH)
        rasters = grid.finalize()
        assert rasters.mean_radius.nonempty.sum() == 1
        assert rasters.detection_probability.nonempty.sum() == 1

    def test_point_histogram_averages_over_frames(self):
        grid = CoverageGrid(SMALL, GROUND)
        assert np.isnan(grid.finalize().point_histogram.values).all()
        grid.accumulate_detections([[0.5, 0.5, 0.0], [0.5, 0.6, 0.1], [3.5, 2.5, 0.0]])
        grid.accumulate_detections([[0.5, 0.5, 0.0]])
        histogram = grid.finalize().point_histogram.values
        assert histogram[0, 0] == 1.5
        assert histogram[3, 2] == 0.5
        assert histogram[1, 1] == 0.0

    def test_merge_matches_sequential_accumulation(self):
        frames = micro_timesteps(seed=3)
        sequential = run_grid(frames, averaging="nested")
        first = run_grid(frames[:4], averaging="nested")
        first.merge(run_grid(frames[4:], averaging="nested"))
        for a, b in zip(sequential.finalize(), first.finalize()):
            # 합산 순서가 달라 마지막 자리는 다를 수 있다
            np.testing.assert_allclose(a.values, b.values, rtol=1e-12, equal_nan=True)

    def test_merge_rejects_other_grid(self):
        with pytest.raises(ContractViolation):
            CoverageGrid(SMALL, GROUND).merge(CoverageGrid(SMALL, OBSTACLES))


class TestBlindSpotRadii:
    def test_distance_to_nearest_detection(self):
        reference = PointCloud([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]], VEHICLE, 2)
        sensors = PointCloud([[3.0, 4.0, 0.0], [10.0, 0.0, 1.0]], VEHICLE, 2)
        np.testing.assert_allclose(blind_spot_radii(reference, sensors), [5.0, 1.0])

    def test_empty_rig_gives_infinite_radius(self):
        reference = PointCloud([[0.0, 0.0, 0.0]], VEHICLE, 0)
        assert np.isinf(blind_spot_radii(reference, PointCloud.empty(VEHICLE, 0))).all()

    def test_frames_must_match(self):
        reference = PointCloud([[0.0, 0.0, 0.0]], VEHICLE, 0)
        with pytest.raises(ContractViolation):
            blind_spot_radii(reference, PointCloud([[1.0, 0.0, 0.0]], Frame.sensor("a"), 0))
        with pytest.raises(ContractViolation):
            blind_spot_radii(reference, PointCloud([[1.0, 0.0, 0.0]], VEHICLE, 1))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_adding_a_sensor_never_grows_radius(self, seed):
        rng = np.random.default_rng(seed)
        reference = PointCloud(rng.uniform(-20, 20, size=(300, 3)), VEHICLE, 0)
        a = rng.uniform(-20, 20, size=(int(rng.integers(1, 200)), 3))
        b = rng.uniform(-20, 20, size=(int(rng.integers(0, 200)), 3))
        alone = blind_spot_radii(reference, PointCloud(a, VEHICLE, 0))
        together = blind_spot_radii(reference, PointCloud(np.vstack([a, b]), VEHICLE, 0))
        assert np.all(together <= alone)


class TestRoi:
    def test_mask_includes_cells_by_center(self):
        roi = Roi("front", "ground", 0.5, 1.5, 0.0, 3.0)
        mask = roi.cell_mask(raster(np.zeros((4, 3))))
        assert mask[:, 0].tolist() == [True, True, False, False]
        assert mask.all(axis=1).tolist() == [True, True, False, False]

    def test_roi_outside_grid_is_rejected(self):
        roi = Roi("far", "ground", 0.0, 10.0, 0.0, 1.0)
        with pytest.raises(ContractViolation):
            roi.cell_mask(raster(np.zeros((4, 3))))

    def test_summary_uses_nonempty_cells_only(self):
        mean = raster([[1.0, np.nan], [3.0, 5.0]])
        probability = raster([[1.0, np.nan], [0.5, 0.0]], kind="detection_probability")
        summary = summarize(mean, probability, Roi("all", "ground", 0.0, 2.0, 0.0, 2.0))
        assert summary.nonempty_cell_count == 3
        assert summary.mean_blind_spot_radius == pytest.approx(3.0)
        assert summary.mean_detection_probability == pytest.approx(0.5)

    def test_summary_without_data(self):
        empty = raster(np.full((2, 2), np.nan))
        summary = summarize(empty, empty, Roi("all", "ground", 0.0, 2.0, 0.0, 2.0))
        assert not summary.has_data
        assert summary.mean_blind_spot_radius is None
        assert summary.mean_detection_probability is None
        assert RoiSummary.from_dict(summary.to_dict()) == summary

    def test_summary_rejects_mismatched_rasters(self):
        with pytest.raises(ContractViolation):
            summarize(raster(np.zeros((2, 2))), raster(np.zeros((2, 3))), Roi("a", "g", 0, 1, 0, 1))

    def test_presets_are_named_by_region_and_slab(self):
        roi = roi_preset("close range (20 m)", "obstacles", "obstacles-fine")
        assert roi.name == "close range (20 m) obstacles"
        assert roi.grid == "obstacles-fine"
        assert (roi.x_max - roi.x_min) == 2 * (roi.y_max - roi.y_min)
        assert roi_preset("surround (10 m)", "ground").grid == "ground"
        assert set(REGION_PRESETS) >= {"close range (20 m)", "long range (160 m)"}
        with pytest.raises(ContractViolation):
            roi_preset("everywhere", "ground")

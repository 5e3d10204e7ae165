import copy
import json
import os
import time
from io import StringIO

import numpy as np
import pytest
from PIL import Image

from django.core.management import CommandError, call_command

from apps.coverage.grids import Raster
from apps.coverage.metrics import RoiSummary
from apps.geometry.clouds import VEHICLE
from apps.geometry.exceptions import (
    ArtifactIOError,
    ConfigError,
    ContractViolation,
    ParseError,
    ScenarioError,
)
from apps.scenarios.config import (
    apply_overrides,
    config_hash,
    flatten_errors,
    list_presets,
    load_config,
    parse_json,
)
from apps.scenarios.ingest import ingest_cloud, parse_bspc, parse_xyz, write_bspc, write_xyz
from apps.scenarios.models import ScenarioRun
from apps.scenarios.pipeline import COMPARISON_FILE, ScenarioRunner, run_scenario, run_suite
from apps.scenarios.rasters import (
    NO_DATA_COLOR,
    emit_raster,
    parse_raster_csv,
    raster_image,
    raster_to_csv,
    read_raster_csv,
    render,
    value_range,
)
from apps.scenarios.reports import (
    CoverageReport,
    compare_reports,
    format_comparison,
    format_summary,
    read_report,
    write_report,
)

GRILLE_LIDAR = {
    "kind": "lidar",
    "name": "grille",
    "mount": {"xyz": [2.3, 0.0, 0.55], "ypr_deg": [0.0, 0.0, 0.0]},
    "channels": 64,
    "points_per_channel": 512,
    "elevation_deg": [-30.0, -1.0],
    "azimuth_deg": [-60.0, 60.0],
    "max_range": 50.0,
}
FRONT_CAMERA = {
    "kind": "camera",
    "name": "front-cam",
    "mount": {"xyz": [0.6, 0.0, 1.45], "ypr_deg": [0.0, 10.0, 0.0]},
    "width": 32,
    "height": 24,
    "hfov_deg": 90.0,
}
# 지면 위 폭 40 m, 높이 1 m의 벽 (전면 x = 10)
LOW_WALL = {
    "id": "wall",
    "mesh": {"kind": "box", "size": [0.5, 40.0, 1.0], "center": [10.25, 0.0, 0.5]},
}
FRONT_POINTS = [[x, y, 0.0] for x in (4.0, 5.0, 6.0, 7.0, 8.0) for y in (-1.0, 0.0, 1.0)]
BEHIND_POINTS = [[x, y, 0.0] for x in (14.0, 16.0, 18.0) for y in (-1.0, 0.0, 1.0)]


def scenario(**changes):
    data = {
        "name": "micro",
        "timesteps": 4,
        "seed": 11,
        "scene": {
            "ground": {"extent": 200.0},
            "ego": {"id": "ego", "mesh": {"kind": "hatchback"}},
            "actors": [LOW_WALL],
        },
        "sensors": [GRILLE_LIDAR],
        "reference": {"channels": 16, "points_per_channel": 32},
        "grids": [
            {
                "name": "ground",
                "slab": "ground",
                "x": [0.0, 20.0],
                "y": [-5.0, 5.0],
                "cell_size": 1.0,
            }
        ],
        "rois": [
            {"name": "front", "grid": "ground", "x": [3.5, 9.0], "y": [-2.0, 2.0]},
            {"name": "behind", "grid": "ground", "x": [12.0, 19.0], "y": [-2.0, 2.0]},
        ],
    }
    data.update(copy.deepcopy(changes))
    return data


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


@pytest.fixture
def shadow_config(tmp_path, write_config):
    """기준 클라우드를 기록 파일로 고정한 벽 그림자 시나리오"""
    for t in range(4):
        write_xyz(tmp_path / f"ref_{t}.xyz", FRONT_POINTS + BEHIND_POINTS)
    data = scenario(reference={"enabled": False, "recorded": "ref_{t}.xyz"})
    [config] = load_config(write_config(data))
    return config


def summary(roi, p, r, cells=1, grid="ground"):
    return RoiSummary(roi, grid, r, p, cells)


class TestConfig:
    def test_defaults_are_filled_in(self, write_config):
        [config] = load_config(write_config(scenario()))
        assert config.r_thresh == 0.4
        assert config.aggregation == "mean"
        assert config.averaging == "pooled"
        assert config.data["reference"]["margin_up"] == 0.5
        assert config.reference_resolution == "16x32"
        assert config.variant == ""
        assert len(config.sha256) == 64

    def test_missing_field_is_named(self, write_config):
        data = scenario()
        del data["name"]
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_config(data))
        assert excinfo.value.field == "name"

    def test_nested_field_path(self, write_config):
        lidar = dict(GRILLE_LIDAR)
        del lidar["channels"]
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_config(scenario(sensors=[lidar])))
        assert excinfo.value.field == "sensors.0.channels"

    def test_roi_must_reference_known_grid(self, write_config):
        rois = [{"grid": "nowhere", "region": "close range (20 m)"}]
        with pytest.raises(ConfigError) as excinfo:
            load_config(write_config(scenario(rois=rois)))
        assert excinfo.value.field == "rois.0.grid"

    def test_roi_name_defaults_to_region_and_slab(self, write_config):
        [config] = load_config(
            write_config(scenario(rois=[{"grid": "ground", "region": "surround (10 m)"}]))
        )
        [roi] = config.build_rois()
        assert roi.name == "surround (10 m) ground"
        assert (roi.x_min, roi.x_max) == (-10.0, 10.0)

    def test_json_syntax_error_has_position(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_json('{\n  "name": "x",\n  oops\n}')
        assert (excinfo.value.line, excinfo.value.column) == (3, 3)

    def test_top_level_must_be_object(self):
        with pytest.raises(ConfigError):
            parse_json("[1, 2]")

    def test_missing_source(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            load_config(tmp_path / "missing.json")

    def test_missing_recorded_cloud(self, write_config):
        recorded = {"kind": "recorded", "name": "external", "path": "cloud_{t}.bspc"}
        with pytest.raises(ArtifactIOError):
            load_config(write_config(scenario(sensors=[recorded])))

    def test_variants_and_overrides(self, write_config):
        low = dict(GRILLE_LIDAR, elevation_deg=[-45.0, -5.0])
        data = scenario(variants={"grille": {}, "low": {"sensors": [low]}})
        configs = load_config(write_config(data), {"seed": 99, "timesteps": None})
        assert [c.variant for c in configs] == ["grille", "low"]
        assert [c.label for c in configs] == ["micro/grille", "micro/low"]
        assert all(c.seed == 99 and c.timesteps == 4 for c in configs)
        assert configs[0].sha256 != configs[1].sha256
        assert configs[1].build_sensors()[0].elevation_min == -45.0

    def test_hash_tracks_effective_config(self, write_config):
        path = write_config(scenario())
        [base] = load_config(path)
        [again] = load_config(path)
        [reseeded] = load_config(path, {"seed": 12})
        assert base.sha256 == again.sha256
        assert base.sha256 != reseeded.sha256
        assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})

    def test_apply_overrides_skips_none(self):
        merged = apply_overrides({"seed": 1, "timesteps": 8}, {"seed": 2, "timesteps": None})
        assert merged == {"seed": 2, "timesteps": 8}

    def test_flatten_errors(self):
        errors = {"grids": [{}, {"cell_size": ["양수여야 합니다."]}], "non_field_errors": ["x"]}
        assert flatten_errors(errors) == [("grids.1.cell_size", "양수여야 합니다."), ("", "x")]

    def test_presets_load(self):
        assert list_presets() == ["camera-trio", "lidar-resolution", "roof-vs-grille"]
        grille, roof = load_config("roof-vs-grille")
        assert (grille.variant, roof.variant) == ("grille", "roof")
        np.testing.assert_allclose(grille.build_sensors()[0].mount.translation, [2.3, 0.0, 0.55])
        np.testing.assert_allclose(roof.build_sensors()[0].mount.translation, [0.5, 0.0, 1.75])
        assert len(load_config("lidar-resolution")) == 3
        [trio] = load_config("camera-trio")
        assert [spec.name for spec in trio.build_sensors()] == [
            "front",
            "mirror-left",
            "mirror-right",
        ]


class TestIngest:
    def test_bspc_file(self, tmp_path):
        points = np.array([[1.0, 2.0, 3.0], [-4.5, 0.25, 1e-3]])
        cloud = ingest_cloud(write_bspc(tmp_path / "c.bspc", points), VEHICLE, 7)
        np.testing.assert_array_equal(cloud.points, points)
        assert cloud.timestep == 7

    def test_truncated_bspc_reports_length(self):
        data = b"BSPC" + (2).to_bytes(4, "little") + bytes(24)
        with pytest.raises(ParseError) as excinfo:
            parse_bspc(data)
        assert excinfo.value.offset == len(data)

    def test_bspc_trailing_bytes(self):
        data = b"BSPC" + (1).to_bytes(4, "little") + bytes(24) + b"\x00"
        with pytest.raises(ParseError) as excinfo:
            parse_bspc(data)
        assert excinfo.value.offset == 32

    def test_bspc_bad_magic(self):
        with pytest.raises(ParseError) as excinfo:
            parse_bspc(b"PCD1" + bytes(4))
        assert excinfo.value.offset == 0

    def test_xyz_skips_comments_and_blank_lines(self):
        points = parse_xyz("# x y z\n\n1 2 3\n  4.5 -1 0  \n")
        np.testing.assert_array_equal(points, [[1.0, 2.0, 3.0], [4.5, -1.0, 0.0]])

    @pytest.mark.parametrize("text, line", [("1 2 3\n1 2\n", 2), ("# c\n1 2 3\n1 two 3\n", 3)])
    def test_xyz_errors_report_line(self, text, line):
        with pytest.raises(ParseError) as excinfo:
            parse_xyz(text)
        assert excinfo.value.offset == line

    def test_non_finite_points_are_rejected(self, tmp_path):
        path = tmp_path / "bad.xyz"
        path.write_text("nan 0 0\n")
        with pytest.raises(ParseError):
            ingest_cloud(path)

    def test_empty_xyz_is_empty_cloud(self, tmp_path):
        path = tmp_path / "empty.xyz"
        path.write_text("# nothing\n")
        assert ingest_cloud(path).is_empty

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            ingest_cloud(tmp_path / "nope.bspc")


class TestRasters:
    @pytest.fixture
    def probability(self):
        return Raster(
            np.array([[0.0, 0.5, np.nan], [0.25, 0.75, 1.0]]),
            x_min=-1.0,
            y_min=-2.0,
            cell_size=0.5,
            slab="ground",
            value_kind="detection_probability",
            metadata={"config_sha256": "abc", "seed": 3},
        )

    def test_csv_layout(self, probability):
        assert raster_to_csv(probability) == (
            "# config_sha256=abc,seed=3\n"
            "x_min,y_min,cell_size,slab,value_kind\n"
            "-1.0,-2.0,0.5,ground,detection_probability\n"
            "0.0,0.5,nan\n"
            "0.25,0.75,1.0\n"
        )

    def test_csv_parses_back(self, probability):
        parsed = parse_raster_csv(raster_to_csv(probability))
        assert parsed.equals(probability)
        assert parsed.metadata == {"config_sha256": "abc", "seed": "3"}

    @pytest.mark.parametrize(
        "text, line",
        [
            ("a,b\n0,0,1,g,k\n1.0\n", 1),
            ("x_min,y_min,cell_size,slab,value_kind\n0,0,1,g,k\n1.0,2.0\n3.0\n", 4),
            ("x_min,y_min,cell_size,slab,value_kind\n0,0,1,g,k\n1.0,abc\n", 3),
        ],
    )
    def test_csv_errors(self, text, line):
        with pytest.raises(ParseError) as excinfo:
            parse_raster_csv(text)
        assert excinfo.value.offset == line

    def test_image_orientation(self, probability):
        image = raster_image(probability)
        assert image.size == (3, 2)
        # 위쪽이 +x, 왼쪽이 +y
        assert image.getpixel((0, 0)) == (255, 255, 255)
        assert image.getpixel((1, 0)) == (191, 191, 191)
        assert image.getpixel((0, 1)) == NO_DATA_COLOR
        assert image.getpixel((2, 1)) == (0, 0, 0)

    def test_value_range(self, probability):
        assert value_range(probability, "probability") == (0.0, 1.0)
        radius = Raster(np.array([[2.0, np.nan], [8.0, 4.0]]), 0.0, 0.0, 1.0, "g", "mean_radius")
        assert value_range(radius, "radius") == (0.0, 8.0)
        assert value_range(radius, "radius", vmax=5.0) == (0.0, 5.0)
        with pytest.raises(ContractViolation):
            value_range(radius, "rainbow")
        with pytest.raises(ContractViolation):
            value_range(radius, "radius", vmax=0.0)

    def test_emit_and_render(self, probability, tmp_path):
        csv_path, image_path = emit_raster(probability, tmp_path / "out" / "ground_p")
        assert csv_path.name == "ground_p.csv" and image_path.name == "ground_p.ppm"
        assert read_raster_csv(csv_path).equals(probability)
        rendered = render(csv_path, style="radius", vmax=0.5, output=tmp_path / "again.ppm")
        with Image.open(rendered) as image:
            assert image.convert("RGB").getpixel((1, 0)) == (255, 255, 255)

    def test_read_missing_csv(self, tmp_path):
        with pytest.raises(ArtifactIOError):
            read_raster_csv(tmp_path / "missing.csv")


class TestReports:
    @pytest.fixture
    def pair(self):
        a = CoverageReport(
            "roof",
            [summary("close", 0.8, 0.3), summary("far", 0.5, 1.0), summary("empty", None, None, 0)],
        )
        b = CoverageReport(
            "grille",
            [summary("close", 0.6, 0.5), summary("far", 0.5, 1.0), summary("empty", 0.1, 2.0)],
        )
        return a, b

    def test_winners_and_deltas(self, pair):
        close, far, empty = compare_reports(*pair)
        assert close.probability_winner == "A" and close.radius_winner == "A"
        assert close.probability_delta == pytest.approx(0.2)
        assert close.radius_delta == pytest.approx(-0.2)
        assert far.probability_winner == "tie" and far.radius_winner == "tie"
        assert empty.probability_winner is None and empty.radius_delta is None

    def test_mismatched_rois(self, pair):
        a, _ = pair
        with pytest.raises(ContractViolation):
            compare_reports(a, CoverageReport("other", [summary("close", 0.1, 0.1)]))

    def test_duplicate_rois(self):
        with pytest.raises(ContractViolation):
            CoverageReport("dup", [summary("a", 0.1, 0.1), summary("a", 0.2, 0.2)])

    def test_comparison_table(self, pair):
        table = format_comparison(compare_reports(*pair), "roof", "grille")
        assert "mean detection probability [%]" in table
        assert "**80.00**" in table and "60.00" in table
        assert "**0.30**" in table
        assert "n/a" in table

    def test_summary_table(self, pair):
        text = format_summary(pair[0])
        assert text.splitlines()[0] == "roof"
        assert "80.00" in text and "n/a" in text

    def test_report_file(self, pair, tmp_path):
        path = write_report(pair[0], tmp_path / "report.json")
        loaded = read_report(path)
        assert loaded.name == "roof"
        assert loaded.summaries == pair[0].summaries

    def test_broken_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text("{\n  broken")
        with pytest.raises(ParseError) as excinfo:
            read_report(path)
        assert excinfo.value.offset == 2


class TestPipeline:
    def test_wall_casts_blind_spot(self, shadow_config, tmp_path):
        report = run_scenario(shadow_config, tmp_path / "out")
        front, behind = report.summary("front"), report.summary("behind")
        assert front.nonempty_cell_count == 15 and behind.nonempty_cell_count == 9
        assert front.mean_detection_probability > 0.5
        assert behind.mean_detection_probability == 0.0
        assert behind.mean_blind_spot_radius > 3.0 > front.mean_blind_spot_radius
        assert (tmp_path / "out" / "report.json").is_file()
        assert (tmp_path / "out" / "ground_mean_radius.csv").is_file()
        assert (tmp_path / "out" / "ground_point_histogram.ppm").is_file()

    def test_raster_matches_manual_accumulation(self, shadow_config, tmp_path):
        run_scenario(shadow_config, tmp_path / "out")
        [grid] = shadow_config.build_grids()
        for sample in ScenarioRunner(shadow_config).iter_samples():
            grid.accumulate(sample.reference.points, sample.radii, shadow_config.r_thresh)
        written = read_raster_csv(tmp_path / "out" / "ground_mean_radius.csv")
        np.testing.assert_array_equal(written.values, grid.finalize().mean_radius.values)
        assert written.metadata["config_sha256"] == shadow_config.sha256

    def test_output_is_identical_across_thread_counts(self, write_config, tmp_path):
        [config] = load_config(write_config(scenario(timesteps=6)))
        run_scenario(config, tmp_path / "single", threads=1)
        run_scenario(config, tmp_path / "pool", threads=3, chunk_factor=1)
        for name in ("ground_mean_radius.csv", "ground_detection_probability.csv"):
            single = (tmp_path / "single" / name).read_bytes()
            assert single == (tmp_path / "pool" / name).read_bytes()

    def test_recorded_reference_reproduces_live_run(self, write_config, tmp_path):
        [live] = load_config(write_config(scenario()))
        runner = ScenarioRunner(live)
        for t in range(live.timesteps):
            write_bspc(tmp_path / f"ref_{t}.bspc", runner.samples(t).reference.points)
        recorded_data = scenario(reference={"enabled": False, "recorded": "ref_{t}.bspc"})
        [recorded] = load_config(write_config(recorded_data, "recorded.json"))
        assert recorded.reference_resolution == "recorded"

        live_report = run_scenario(live, tmp_path / "live")
        recorded_report = run_scenario(recorded, tmp_path / "recorded")
        assert [row.to_dict() for row in recorded_report.summaries] == [
            row.to_dict() for row in live_report.summaries
        ]
        for name in ("ground_mean_radius.csv", "ground_detection_probability.csv"):
            np.testing.assert_array_equal(
                read_raster_csv(tmp_path / "recorded" / name).values,
                read_raster_csv(tmp_path / "live" / name).values,
            )

    def test_adding_a_sensor_never_grows_radius(self, write_config):
        [config] = load_config(
            write_config(scenario(sensors=[GRILLE_LIDAR, FRONT_CAMERA], timesteps=32))
        )
        both = ScenarioRunner(config)
        lidar_only = ScenarioRunner(config, sensors=both.sensors[:1])
        for t in range(config.timesteps):
            with_camera = both.samples(t)
            without = lidar_only.samples(t)
            np.testing.assert_array_equal(with_camera.reference.points, without.reference.points)
            assert np.all(with_camera.radii <= without.radii)

    def test_empty_rig_reports_no_detection(self, write_config, tmp_path):
        [config] = load_config(write_config(scenario(sensors=[], timesteps=2)))
        report = run_scenario(config, tmp_path / "out")
        assert report.metadata["empty_sensor_rig"] is True
        assert report.metadata["clamped"]["ground"] > 0
        for row in report.summaries:
            if row.has_data:
                assert row.mean_detection_probability == 0.0

    def test_trajectory_must_cover_all_timesteps(self, write_config):
        ego = {
            "id": "ego",
            "mesh": {"kind": "hatchback"},
            "trajectory": {"kind": "keyframes", "poses": {"0": {}}},
        }
        data = scenario()
        data["scene"]["ego"] = ego
        [config] = load_config(write_config(data))
        with pytest.raises(ScenarioError):
            ScenarioRunner(config)

    def test_suite_writes_variant_dirs_and_comparison(self, write_config, tmp_path):
        low = dict(GRILLE_LIDAR, elevation_deg=[-45.0, -5.0])
        data = scenario(timesteps=2, variants={"grille": {}, "low": {"sensors": [low]}})
        reports = run_suite(load_config(write_config(data)), tmp_path / "suite")
        assert [r.name for r in reports] == ["micro/grille", "micro/low"]
        assert (tmp_path / "suite" / "grille" / "report.json").is_file()
        assert (tmp_path / "suite" / "low" / "report.json").is_file()
        table = (tmp_path / "suite" / COMPARISON_FILE).read_text(encoding="utf-8")
        assert "front" in table and "behind" in table


class TestCommands:
    def test_run_prints_summary(self, shadow_config, tmp_path):
        out = StringIO()
        call_command(
            "run",
            str(tmp_path / "scenario.json"),
            "--out-dir",
            str(tmp_path / "out"),
            "--threads",
            "1",
            "--no-record",
            stdout=out,
        )
        assert "front" in out.getvalue()
        assert (tmp_path / "out" / "report.json").is_file()

    @pytest.mark.django_db
    def test_run_records_history(self, shadow_config, tmp_path):
        call_command(
            "run",
            str(tmp_path / "scenario.json"),
            "--out-dir",
            str(tmp_path / "out"),
            "--threads",
            "1",
            stdout=StringIO(),
        )
        run = ScenarioRun.objects.get()
        assert run.config_sha256 == shadow_config.sha256
        assert [r.roi for r in run.roi_results.all()] == ["front", "behind"]
        assert run.to_report().summary("front").has_data

    def test_invalid_config_exits_with_2(self, write_config, tmp_path):
        data = scenario()
        del data["grids"]
        with pytest.raises(CommandError) as excinfo:
            call_command("run", str(write_config(data)), "--no-record", stdout=StringIO())
        assert excinfo.value.returncode == 2

    def test_missing_config_exits_with_3(self, tmp_path):
        with pytest.raises(CommandError) as excinfo:
            call_command("run", str(tmp_path / "missing.json"), "--no-record", stdout=StringIO())
        assert excinfo.value.returncode == 3

    def test_compare_prints_table(self, tmp_path):
        write_report(CoverageReport("a", [summary("close", 0.9, 0.2)]), tmp_path / "a.json")
        write_report(CoverageReport("b", [summary("close", 0.7, 0.4)]), tmp_path / "b.json")
        out = StringIO()
        call_command("compare", str(tmp_path / "a.json"), str(tmp_path / "b.json"), stdout=out)
        assert "**90.00**" in out.getvalue()

    def test_compare_mismatched_rois_exits_with_2(self, tmp_path):
        write_report(CoverageReport("a", [summary("close", 0.9, 0.2)]), tmp_path / "a.json")
        write_report(CoverageReport("b", [summary("far", 0.7, 0.4)]), tmp_path / "b.json")
        with pytest.raises(CommandError) as excinfo:
            call_command("compare", str(tmp_path / "a.json"), str(tmp_path / "b.json"))
        assert excinfo.value.returncode == 2

    def test_render_missing_csv_exits_with_3(self, tmp_path):
        with pytest.raises(CommandError) as excinfo:
            call_command("render", str(tmp_path / "missing.csv"))
        assert excinfo.value.returncode == 3


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["roof-vs-grille", "lidar-resolution", "camera-trio"])
def test_preset_runs_end_to_end(preset, tmp_path):
    configs = load_config(preset, {"timesteps": 8})
    reports = run_suite(configs, tmp_path, threads=0)
    for report in reports:
        assert report.metadata["timesteps"] == 8
        assert any(row.has_data for row in report.summaries)


@pytest.mark.slow
def test_preset_outputs_do_not_depend_on_threads(tmp_path):
    configs = load_config("camera-trio", {"timesteps": 8})
    run_suite(configs, tmp_path / "one", threads=1)
    run_suite(configs, tmp_path / "four", threads=4)
    csvs = sorted(path.name for path in (tmp_path / "one").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


@pytest.mark.slow
def test_hood_leaves_ground_blind_spot(tmp_path):
    [config] = load_config("camera-trio", {"timesteps": 16})
    run_scenario(config, tmp_path, threads=0)
    raster = read_raster_csv(tmp_path / "ground-fine_detection_probability.csv")
    nx, ny = raster.shape
    x = raster.x_min + (np.arange(nx) + 0.5) * raster.cell_size
    y = raster.y_min + (np.arange(ny) + 0.5) * raster.cell_size
    # 보닛 앞 끝(x = 2.25)과 전면 카메라 시선이 지면에 닿는 곳(x ~ 5.4) 사이
    ahead = ((x >= 2.6) & (x <= 4.6))[:, None] & (np.abs(y) <= 0.6)[None, :]
    probed = raster.values[ahead & raster.nonempty]
    assert probed.size > 0
    assert np.all(probed == 0.0)


CLOSE_GROUND = "close range (20 m) ground"
CLOSE_OBSTACLES = "close range (20 m) obstacles"
FAR_ROIS = [
    "medium range (80 m) ground",
    "medium range (80 m) obstacles",
    "long range (160 m) ground",
    "long range (160 m) obstacles",
]


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_grille_wins_close_range_and_roof_wins_far(seed, tmp_path):
    grille, roof = run_suite(load_config("roof-vs-grille", {"seed": seed}), tmp_path, threads=0)
    assert (
        grille.summary(CLOSE_GROUND).mean_blind_spot_radius
        < roof.summary(CLOSE_GROUND).mean_blind_spot_radius
    )
    for roi in FAR_ROIS:
        assert roof.summary(roi).mean_blind_spot_radius < grille.summary(roi).mean_blind_spot_radius
        assert (
            roof.summary(roi).mean_detection_probability
            > grille.summary(roi).mean_detection_probability
        )


@pytest.mark.slow
def test_more_channels_never_hurt(tmp_path):
    reports = run_suite(load_config("lidar-resolution"), tmp_path, threads=0)
    assert [report.metadata["variant"] for report in reports] == ["32ch", "64ch", "128ch"]
    for roi in reports[0].roi_names:
        radii = [report.summary(roi).mean_blind_spot_radius for report in reports]
        probabilities = [report.summary(roi).mean_detection_probability for report in reports]
        assert radii == sorted(radii, reverse=True)
        assert probabilities == sorted(probabilities)

    def spread(roi):
        values = [report.summary(roi).mean_detection_probability for report in reports]
        return max(values) - min(values)

    assert spread(CLOSE_OBSTACLES) < 0.05
    assert spread(CLOSE_GROUND) > 0.15


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="8코어 이상에서만 측정")
def test_roof_preset_sustains_ten_timesteps_per_second():
    [_, roof] = load_config("roof-vs-grille", {"timesteps": 64})
    assert roof.variant == "roof"
    runner = ScenarioRunner(roof)
    runner.samples(0)  # numba 컴파일
    started = time.perf_counter()
    count = sum(1 for _ in runner.iter_samples(threads=8))
    elapsed = time.perf_counter() - started
    assert count == 64
    assert count / elapsed >= 10.0

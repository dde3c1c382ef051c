"""Tests for src/multipath/reflection.py and src/multipath/correction.py."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from shapely.geometry import box

from src.geometry.regions import Region2
from src.multipath.correction import (
    CorrectionStatus,
    build_enhanced_mixture,
    estimate_corrections,
    write_multipath_debug_csv,
)
from src.multipath.reflection import (
    PropagationPath,
    find_paths,
    reflection_candidate_faces,
    shortest_path,
)
from src.scene.model import Building, Epoch, SatelliteObservation, Scene
from src.shadow.matching import Mode, ModeSet
from src.spc.mixture import build_spc_mixture
from src.spc.planes import exact_range_offset
from tests.conftest import far_sat, street_epoch, street_sats

ORIGIN = np.zeros(3)


@pytest.fixture
def single_wall_scene() -> Scene:
    """One long 30 m block whose south wall lies on y = 10."""
    block = Building("W", box(-50.0, 10.0, 50.0, 20.0), 0.0, 30.0)
    aoi = Region2.from_polygon([[-50, -40], [50, -40], [50, 5], [-50, 5]])
    return Scene((block,), aoi)


def origin_mode() -> Mode:
    return Mode(0, Region2((box(-1.0, -1.0, 1.0, 1.0),)), (0.0, 0.0))


def canyon_epoch() -> tuple[Epoch, dict[str, np.ndarray]]:
    """
    Receiver at the origin of the canyon with a 100 m clock bias.

    G01 (north, 60°) only arrives off the south block's north wall (y = -10),
    G02 (east, along the street) is direct and G03 (north, 30°) is blocked
    with no surviving reflection.
    """
    sats = {"G01": far_sat(0.0, 60.0), "G02": far_sat(90.0, 45.0), "G03": far_sat(0.0, 30.0)}
    s1 = sats["G01"]
    image = np.array([s1[0], -20.0 - s1[1], s1[2]])
    obs = (
        SatelliteObservation("G01", sats["G01"], float(np.linalg.norm(image)) + 100.0),
        SatelliteObservation("G02", sats["G02"], float(np.linalg.norm(sats["G02"])) + 100.0),
        SatelliteObservation("G03", sats["G03"], float(np.linalg.norm(sats["G03"])) + 107.0),
    )
    return Epoch(obs), sats


class TestReflectionPaths:

    def test_single_wall_image_method(self, single_wall_scene):
        sat = far_sat(180.0, 30.0)
        obs = SatelliteObservation("G01", sat, 2.2e7)
        paths = find_paths(single_wall_scene, ORIGIN, obs)
        assert len(paths) == 1
        path = paths[0]
        image = np.array([sat[0], 20.0 - sat[1], sat[2]])
        np.testing.assert_allclose(path.mirrored_sat, image, rtol=1e-15, atol=1e-6)
        assert abs(path.length - float(np.linalg.norm(image))) <= 1e-9 * path.length
        # bounce on the wall plane, along the straight line from the receiver to the image
        t = 10.0 / image[1]
        np.testing.assert_allclose(path.reflection_point, t * image, atol=1e-6)
        # plane-wave excess delay: 2 · wall distance · (unit line of sight · wall normal)
        delay = path.length - float(np.linalg.norm(sat))
        assert abs(delay - 2.0 * 10.0 * np.cos(np.radians(30.0))) < 1e-3

    def test_randomised_single_wall_placements(self):
        """Path length equals |receiver − mirrored satellite| and obeys the specular law."""
        rng = np.random.default_rng(2024)
        for _ in range(100):
            y0 = rng.uniform(5.0, 20.0)
            wall = Building("W", box(-1000.0, y0, 1000.0, y0 + 10.0), 0.0, 500.0)
            scene = Scene((wall,), Region2.from_polygon([[-50, -50], [50, -50], [50, 0], [-50, 0]]))
            receiver = np.array([rng.uniform(-20, 20), rng.uniform(y0 - 30.0, y0 - 1.0), 0.0])
            sat = far_sat(rng.uniform(100, 260), rng.uniform(10, 70), r=rng.uniform(2.0e7, 2.6e7))
            paths = find_paths(scene, receiver, SatelliteObservation("G01", sat, 2.2e7))
            assert len(paths) == 1
            path = paths[0]
            image = np.array([sat[0], 2.0 * y0 - sat[1], sat[2]])
            np.testing.assert_allclose(path.length, np.linalg.norm(receiver - image), rtol=1e-14, atol=1e-9)
            # incoming and outgoing unit vectors are mirror images about the wall normal
            to_rx = receiver - path.reflection_point
            to_sat = sat - path.reflection_point
            bisector = to_rx / np.linalg.norm(to_rx) + to_sat / np.linalg.norm(to_sat)
            assert abs(bisector[0]) < 1e-7 and abs(bisector[2]) < 1e-7

    def test_only_walls_facing_the_satellite(self, canyon_scene):
        faces = reflection_candidate_faces(canyon_scene, far_sat(0.0, 60.0))
        assert len(faces) == 2
        for face_id in faces:
            face = canyon_scene.faces_by_id[face_id]
            assert not face.is_top
            assert face.normal[1] > 0.99

    def test_blocked_second_leg_drops_path(self, canyon_scene):
        obs = SatelliteObservation("G03", far_sat(0.0, 30.0), 2.2e7)
        assert find_paths(canyon_scene, ORIGIN, obs) == []

    def test_canyon_reflection_off_opposite_wall(self, canyon_scene):
        obs = SatelliteObservation("G01", far_sat(0.0, 60.0), 2.2e7)
        paths = find_paths(canyon_scene, ORIGIN, obs)
        assert len(paths) == 1
        assert paths[0].face_id.startswith("S0:wall")
        assert abs(paths[0].reflection_point[1] + 10.0) < 1e-6

    def test_shortest_path_tie_breaks_on_face_id(self):
        def p(face: str, length: float) -> PropagationPath:
            return PropagationPath("G01", face, ORIGIN, length, ORIGIN)

        assert shortest_path([p("b", 5.0), p("a", 5.0), p("c", 7.0)]).face_id == "a"
        assert shortest_path([p("b", 4.0), p("a", 5.0)]).face_id == "b"
        assert shortest_path([]) is None


class TestCorrections:

    def test_statuses(self, canyon_scene):
        epoch, _ = canyon_epoch()
        estimates = {e.sat_id: e for e in estimate_corrections(canyon_scene, origin_mode(), epoch)}
        assert estimates["G01"].status is CorrectionStatus.CORRECTED
        assert estimates["G02"].status is CorrectionStatus.LOS
        assert estimates["G03"].status is CorrectionStatus.NO_PATH
        assert estimates["G02"].corrected_pseudorange == epoch.observation("G02").pseudorange
        assert estimates["G03"].corrected_pseudorange == epoch.observation("G03").pseudorange
        assert estimates["G02"].delay is None and estimates["G03"].delay is None
        assert estimates["G01"].n_paths == 1

    def test_delay_matches_plane_wave(self, canyon_scene):
        epoch, _ = canyon_epoch()
        g01 = estimate_corrections(canyon_scene, origin_mode(), epoch)[0]
        assert abs(g01.delay - 2.0 * 10.0 * np.cos(np.radians(60.0))) < 1e-3

    def test_noise_free_corrected_offsets_equal_clock_bias(self, canyon_scene):
        epoch, _ = canyon_epoch()
        estimates = estimate_corrections(canyon_scene, origin_mode(), epoch)
        corrected = epoch.with_pseudoranges({e.sat_id: e.corrected_pseudorange for e in estimates})
        for sat_id in ("G01", "G02"):
            offset = float(exact_range_offset(corrected.observation(sat_id), 0.0, 0.0, 0.0))
            assert abs(offset - 100.0) < 1e-6

    def test_enhanced_mixture_centres_on_clock_bias(self, canyon_scene):
        epoch, _ = canyon_epoch()
        mode = origin_mode()
        modes = ModeSet((mode,), 0.0)
        model = build_enhanced_mixture(canyon_scene, modes, epoch, mode)
        g01 = model.intervals[0][0]
        assert g01.lo - 0.01 <= 100.0 <= g01.hi + 0.01
        assert abs(model.integral() - 1.0) < 1e-12

    def test_true_mode_correction_tightens_midpoints(self, canyon_scene, street_modes):
        epoch = street_epoch(street_sats(), reflected=("G04",))
        west = street_modes[0]

        def spread(model) -> float:
            mids = [row[west.id].midpoint for row in model.intervals]
            return max(mids) - min(mids)

        raw = build_spc_mixture(epoch, street_modes, canyon_scene.anchor)
        corrected = build_enhanced_mixture(canyon_scene, street_modes, epoch, west)
        assert spread(raw) > 8.0
        assert spread(corrected) < 0.01
        assert spread(corrected) <= spread(raw)

    def test_all_line_of_sight_leaves_the_model_unchanged(self, canyon_scene, street_modes):
        sats = {
            "G01": far_sat(90.0, 45.0),
            "G02": far_sat(270.0, 45.0),
            "G03": far_sat(0.0, 80.0),
            "G04": far_sat(180.0, 80.0),
        }
        epoch = street_epoch(sats)
        baseline = build_spc_mixture(epoch, street_modes, canyon_scene.anchor)
        for mode in street_modes:
            estimates = estimate_corrections(canyon_scene, mode, epoch)
            assert all(e.status is CorrectionStatus.LOS for e in estimates)
            assert [e.corrected_pseudorange for e in estimates] == [o.pseudorange for o in epoch.observations]
            enhanced = build_enhanced_mixture(canyon_scene, street_modes, epoch, mode, estimates=estimates)
            assert [[(iv.lo, iv.hi) for iv in row] for row in enhanced.intervals] == [
                [(iv.lo, iv.hi) for iv in row] for row in baseline.intervals
            ]

    def test_foreign_mode_rejected(self, canyon_scene):
        epoch, _ = canyon_epoch()
        modes = ModeSet((origin_mode(),), 0.0)
        with pytest.raises(ValueError, match="not part of the mode set"):
            build_enhanced_mixture(canyon_scene, modes, epoch, origin_mode())

    def test_debug_csv(self, canyon_scene, tmp_path):
        epoch, _ = canyon_epoch()
        estimates = estimate_corrections(canyon_scene, origin_mode(), epoch)
        path = write_multipath_debug_csv({0: estimates}, tmp_path / "mp.csv")
        df = pd.read_csv(path)
        assert list(df.columns) == ["sat_id", "mode_id", "status", "delay_m", "n_paths"]
        assert list(df["status"]) == ["corrected", "LOS", "no_path"]
        assert df["delay_m"].isna().sum() == 2

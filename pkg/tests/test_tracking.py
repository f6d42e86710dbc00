import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from qmot.graph import Matching
from qmot.qubo import build_multiplexed_qubo, decode, encode
from qmot.solvers import SolverConfig, run_solver
from qmot.tracking import (BoundingBox, Detection, FrameDetections, KalmanBoxFilter, LocationCode,
                           Tracker, TrackerConfig, TrackingError, build_frame_graphs, hamming,
                           hash_similarity, iou, location_code, perceptual_hash, predict_tracks,
                           warm_start)
from qmot.tracking.phash import crop_hash, hash_to_hex, hex_to_hash, load_gray
from qmot.tracking.tracker import merge_blocks

from reference import dct_matrix, scalar_kalman_x


def box(cx, cy, w=40.0, h=40.0):
    return BoundingBox(cx - w / 2, cy - h / 2, w, h)


def frame(t, *dets):
    return FrameDetections(t, tuple(d if isinstance(d, Detection) else Detection(d) for d in dets))


class TestGeometry:
    def test_box_validation(self):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 0, 1)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 1, -1)

    def test_xyah_round_trip(self):
        b = BoundingBox(10, 20, 30, 60)
        assert b.to_xyah() == (25, 50, 0.5, 60)
        back = BoundingBox.from_xyah(*b.to_xyah())
        assert (back.x, back.y, back.w, back.h) == pytest.approx((10, 20, 30, 60))

    def test_iou_identical_and_disjoint(self):
        a = BoundingBox(0, 0, 1, 1)
        assert iou(a, a) == 1.0
        assert iou(a, BoundingBox(2, 2, 1, 1)) == 0.0
        assert iou(a, BoundingBox(1, 0, 1, 1)) == 0.0

    def test_iou_half_offset(self):
        assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(0.5, 0, 1, 1)) == pytest.approx(1 / 3)

    @settings(max_examples=200, deadline=None)
    @given(st.tuples(*[st.floats(0, 100)] * 2, *[st.floats(0.1, 50)] * 2),
           st.tuples(*[st.floats(0, 100)] * 2, *[st.floats(0.1, 50)] * 2))
    def test_iou_bounds_and_symmetry(self, a, b):
        a, b = BoundingBox(*a), BoundingBox(*b)
        v = iou(a, b)
        assert 0.0 <= v <= 1.0 + 1e-12
        assert v == pytest.approx(iou(b, a))

    def test_location_codes(self):
        dims = (640, 360)
        assert location_code(box(0.01, 0.01, 0.02, 0.02), dims) == LocationCode(0, 0)
        assert location_code(box(320, 180), dims) == LocationCode(2, 2)
        assert location_code(box(639.9, 359.9, 0.1, 0.1), dims) == LocationCode(3, 3)

    def test_location_code_clamps(self):
        assert location_code(box(-30, 400), (640, 360)) == LocationCode(3, 0)
        assert location_code(box(700, -5), (640, 360), (2, 5)) == LocationCode(0, 4, (2, 5))

    def test_location_code_validation(self):
        with pytest.raises(ValueError):
            LocationCode(4, 0, (4, 4))


class TestKalman:
    def test_single_observation_predicts_same_box(self):
        kf = KalmanBoxFilter()
        b = BoundingBox(100, 50, 40, 80)
        mean, cov = kf.predict(*kf.initiate(b))
        p = kf.box(mean)
        assert (p.x, p.y, p.w, p.h) == pytest.approx((100, 50, 40, 80))

    def test_two_observations_pin_velocity(self):
        kf = KalmanBoxFilter()
        mean, cov = kf.initiate(box(100, 100, 40, 40))
        mean, cov = kf.predict(mean, cov)
        mean, cov = kf.update(mean, cov, box(110, 100, 40, 40))
        mean, _ = kf.predict(mean, cov)
        cx = kf.box(mean).center[0]
        assert abs(cx - 120) < 1.0
        assert cx == pytest.approx(scalar_kalman_x([100, 110], 40.0), abs=1e-9)

    def test_matches_scalar_filter_over_a_track(self):
        kf = KalmanBoxFilter()
        xs = [50 + 7 * t + (-1) ** t * 0.8 for t in range(12)]
        mean, cov = kf.initiate(box(xs[0], 80, 30, 60))
        for x in xs[1:]:
            mean, cov = kf.predict(mean, cov)
            mean, cov = kf.update(mean, cov, box(x, 80, 30, 60))
        mean, _ = kf.predict(mean, cov)
        assert mean[0] == pytest.approx(scalar_kalman_x(xs, 60.0), abs=1e-9)

    def test_stationary_converges(self):
        kf = KalmanBoxFilter()
        rng = np.random.default_rng(0)
        truth = (200.0, 150.0)
        mean, cov = kf.initiate(box(*truth))
        for _ in range(10):
            mean, cov = kf.predict(mean, cov)
            mean, cov = kf.update(mean, cov, box(*(np.array(truth) + rng.normal(0, 0.3, 2))))
        mean, _ = kf.predict(mean, cov)
        assert np.hypot(mean[0] - truth[0], mean[1] - truth[1]) < 0.5

    def test_covariance_stays_symmetric_positive(self):
        kf = KalmanBoxFilter()
        mean, cov = kf.initiate(box(10, 10))
        for t in range(30):
            mean, cov = kf.predict(mean, cov)
            mean, cov = kf.update(mean, cov, box(10 + t, 10))
        assert np.allclose(cov, cov.T)
        assert np.all(np.linalg.eigvalsh(cov) > 0)


def disc_image(offset=80.0):
    yy, xx = np.mgrid[0:64, 0:64]
    img = offset + 1.5 * xx + 0.8 * yy + 60 * (((xx - 30) ** 2 + (yy - 34) ** 2) < 150)
    return np.clip(img, 0, 255)


class TestPerceptualHash:
    def test_identical(self):
        assert perceptual_hash(disc_image()) == perceptual_hash(disc_image().copy())

    def test_brightness_robust(self):
        img = disc_image()
        assert hamming(perceptual_hash(img), perceptual_hash(np.clip(img * 1.2, 0, 255))) <= 4

    def test_noise_pairs_near_half_distance(self):
        rng = np.random.default_rng(0)
        d = [hamming(perceptual_hash(rng.integers(0, 256, (48, 48))),
                     perceptual_hash(rng.integers(0, 256, (48, 48)))) for _ in range(100)]
        assert all(20 <= x <= 44 for x in d)
        assert abs(np.mean(d) - 32) < 2

    def test_matches_explicit_dct(self):
        img = disc_image()
        small = np.asarray(Image.fromarray(img.astype(np.float32)).resize(
            (32, 32), Image.Resampling.LANCZOS), dtype=np.float64)
        c = dct_matrix(32)
        low = (c @ small @ c.T)[1:9, 1:9]
        bits = (low > np.median(low)).ravel()
        expect = int("".join("1" if b else "0" for b in bits), 2)
        assert perceptual_hash(img) == expect
        assert bin(expect).count("1") == 32

    def test_flat_patch(self):
        assert perceptual_hash(np.full((16, 16), 77.0)) == 0

    def test_small_patch_rejected(self):
        with pytest.raises(ValueError):
            perceptual_hash(np.zeros((7, 20)))

    def test_similarity(self):
        assert hash_similarity(0xABC, 0xABC) == 1.0
        assert hash_similarity(0, (1 << 32) - 1) == pytest.approx(math.exp(-1))
        assert hash_similarity(0, (1 << 64) - 1) == pytest.approx(0.135335, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
    def test_similarity_range(self, a, b):
        s = hash_similarity(a, b)
        assert 0 < s <= 1
        assert (s == 1.0) == (a == b)

    def test_hex_round_trip(self):
        assert hash_to_hex(0xF) == "000000000000000f"
        assert hex_to_hash(hash_to_hex(2**64 - 2)) == 2**64 - 2
        with pytest.raises(ValueError):
            hex_to_hash("1" * 17)

    def test_crop_hash_and_loading(self, tmp_path):
        img = np.zeros((100, 120))
        img[10:74, 20:84] = disc_image()
        Image.fromarray(img.astype(np.uint8)).save(tmp_path / "f.pgm")
        gray = load_gray(tmp_path / "f.pgm")
        assert crop_hash(gray, BoundingBox(20, 10, 64, 64)) == perceptual_hash(disc_image().astype(np.uint8))
        # boxes smaller than 8 px or hanging off the frame still hash
        crop_hash(gray, BoundingBox(118, 98, 5, 5))


class TestFrameGraphs:
    def test_no_tracks(self):
        graphs = build_frame_graphs([], [], frame(1, box(10, 10)), ("iou", "hash"))
        assert [(g.n_left, g.n_right, g.num_edges) for g in graphs] == [(0, 1, 0)] * 2

    def test_single_overlap(self):
        g, = build_frame_graphs([box(50, 50)], [None], frame(1, box(50.5, 50)), ("iou",))
        assert g.edge_keys == [(0, 0)]
        assert g.weight((0, 0)) == pytest.approx(1.0, abs=0.03)

    def test_shared_gate_and_hash_weights(self):
        rng = np.random.default_rng(0)
        preds = [box(100 + 8 * k, 100) for k in range(3)]
        hashes = [int(rng.integers(0, 2**63)) for _ in range(3)]
        dets = frame(1, *(Detection(box(101 + 8 * k, 100), 1.0, hashes[k] ^ 1) for k in range(3)))
        g_iou, g_hash = build_frame_graphs(preds, hashes, dets, ("iou", "hash"))
        assert g_iou.edge_keys == g_hash.edge_keys
        assert g_iou.num_edges == 9
        for u, v in g_hash.edge_keys:
            assert g_hash.weight((u, v)) == pytest.approx(hash_similarity(hashes[u], hashes[v] ^ 1))
            assert g_iou.weight((u, v)) == pytest.approx(iou(preds[u], dets.detections[v].box))
            assert 0 <= g_hash.weight((u, v)) <= 1

    def test_gate(self):
        g, = build_frame_graphs([box(0, 0)], [None], frame(1, box(100, 100)), ("iou",))
        assert g.num_edges == 0

    def test_missing_hash_falls_back_to_overlap(self):
        g_iou, g_hash = build_frame_graphs([box(50, 50)], [None], frame(1, box(52, 50)))
        assert g_hash.edges == g_iou.edges


class TestWarmStart:
    def test_isolated_pairs_encode_the_truth(self):
        preds = [box(80, 45), box(400, 200), box(560, 300)]
        dets = frame(1, box(402, 201), box(81, 46), box(561, 301))
        graphs = build_frame_graphs(preds, [None] * 3, dets, ("iou", "hash"))
        q = build_multiplexed_qubo(graphs)
        x = warm_start(preds, dets, q)
        truth = [(0, 1), (1, 0), (2, 2)]
        assert np.array_equal(x, encode(q, [truth, truth]))

    def test_shared_cell_sets_all_colliding_bits(self):
        preds = [box(100, 60)]
        dets = frame(1, box(95, 60), box(110, 60))
        q = build_multiplexed_qubo(build_frame_graphs(preds, [None], dets, ("iou",)))
        x = warm_start(preds, dets, q)
        assert list(x) == [1, 1]
        assert not decode(q, x)[0].feasible


class TestCrossingDisambiguation:
    def test_hash_model_overrides_misleading_overlap(self):
        # each detection sits closer to the other track's prediction
        preds = [box(100, 100), box(130, 100)]
        h0, h1 = 0x0F0F0F0F0F0F0F0F, 0xF0F0F0F0F0F0F0F0
        dets = frame(5, Detection(box(127, 100), 1.0, h0), Detection(box(103, 100), 1.0, h1))
        graphs = build_frame_graphs(preds, [h0, h1], dets, ("iou", "hash"))
        q = build_multiplexed_qubo(graphs)
        blocks = [b.matching() for b in decode(q, run_solver(q, SolverConfig("oracle")).best_state)]
        assert blocks[0] == Matching.of((0, 1), (1, 0))
        assert blocks[1] == Matching.of((0, 0), (1, 1))
        assert merge_blocks("cyclic", graphs, blocks) == Matching.of((0, 0), (1, 1))
        assert merge_blocks("none", graphs, blocks) == blocks[0]


FAST = SolverConfig(sweeps=60, trials=5)


class TestTracker:
    def test_new_tracks_for_first_frame(self):
        tr = Tracker(TrackerConfig(solver=FAST))
        pairs = tr.step(frame(1, box(50, 50), box(300, 200), box(500, 100)))
        assert pairs == [(1, 0), (2, 1), (3, 2)]
        assert [t.id for t in tr.tracks] == [1, 2, 3]

    def test_identity_preserved(self):
        tr = Tracker(TrackerConfig(solver=FAST))
        tr.step(frame(1, box(50, 50)))
        assert tr.step(frame(2, box(53, 50))) == [(1, 0)]
        t = tr.tracks[0]
        assert t.age_since_update == 0 and t.hits == 2 and len(t.history) == 2

    def test_out_of_order(self):
        tr = Tracker(TrackerConfig(solver=FAST))
        tr.step(frame(3, box(50, 50)))
        with pytest.raises(TrackingError):
            tr.step(frame(3, box(50, 50)))
        with pytest.raises(TrackingError):
            tr.step(frame(2, box(50, 50)))

    def test_ageing_and_termination(self):
        tr = Tracker(TrackerConfig(solver=FAST, max_age=2))
        tr.step(frame(1, box(50, 50)))
        tr.step(frame(2, box(50, 50)))
        for t in (3, 4):
            tr.step(frame(t))
            assert [x.id for x in tr.tracks] == [1]
        tr.step(frame(5))
        assert tr.tracks == [] and [x.id for x in tr.finished] == [1]
        tr.step(frame(6, box(50, 50)))
        assert [x.id for x in tr.tracks] == [2]

    def test_frame_gap_counts_as_age(self):
        tr = Tracker(TrackerConfig(solver=FAST, max_age=3))
        tr.step(frame(1, box(50, 50)))
        tr.step(frame(10, box(400, 300)))
        assert [x.id for x in tr.tracks] == [2]

    def test_confirmation(self):
        tr = Tracker(TrackerConfig(solver=FAST, min_hits=2))
        tr.step(frame(1, box(50, 50), box(300, 300)))
        tr.step(frame(2, box(51, 50)))
        assert [t.id for t in tr.confirmed()] == [1]
        assert sorted(tr.output()) == [1, 2]
        assert [i for i, _ in tr.output()[1]] == [1]

    def test_config_validation(self):
        with pytest.raises(TrackingError):
            TrackerConfig(models=())
        with pytest.raises(TrackingError):
            TrackerConfig(models=("color",))
        with pytest.raises(TrackingError):
            TrackerConfig(integrator="vote")

    def test_predict_tracks_moves_with_velocity(self):
        tr = Tracker(TrackerConfig(solver=FAST))
        tr.step(frame(1, box(100, 100)))
        tr.step(frame(2, box(110, 100)))
        (tid, b), = predict_tracks(tr.tracks, tr.kf)
        assert tid == 1 and abs(b.center[0] - 120) < 1.0

    @pytest.mark.parametrize("integrator", ["none", "majority", "cyclic"])
    @pytest.mark.parametrize("solver", ["sa", "rsa", "sqa", "oracle"])
    def test_never_assigns_a_detection_twice(self, integrator, solver):
        rng = np.random.default_rng(1)
        cfg = TrackerConfig(integrator=integrator,
                            solver=SolverConfig(solver=solver, sweeps=30, trials=2))
        tr = Tracker(cfg)
        centers = rng.uniform(100, 300, (6, 2))
        for t in range(1, 9):
            dets = frame(t, *(Detection(box(*(c + rng.normal(0, 6, 2))), 1.0,
                                        int(rng.integers(0, 2**63))) for c in centers))
            pairs = tr.step(dets)
            assert len({d for _, d in pairs}) == len(pairs) == len(dets)
            assert len({i for i, _ in pairs}) == len(pairs)

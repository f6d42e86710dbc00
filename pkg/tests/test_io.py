import pytest

from qmot.config import ConfigError, load_config, parse_config
from qmot.mot_io import (DataError, Detection, FrameDetections, format_detections, format_hashes,
                         format_track_table, read_detections, read_hashes, read_mot,
                         read_track_table)
from qmot.scenario import ScenarioSpec, gen_scenario
from qmot.tracking import BoundingBox


def test_read_mot_skips_comments_and_blank_lines(tmp_path):
    p = tmp_path / "gt.txt"
    p.write_text("# header\n\n1,3,10,20,30,40,0.9,-1,-1,-1\n1,4, 0,0,5,5\n2.0,3,11,20,30,40,1\n")
    table = read_mot(p)
    assert sorted(table) == [1, 2]
    oid, box, conf = table[1][0]
    assert (oid, box.x, box.y, box.w, box.h, conf) == (3, 10, 20, 30, 40, 0.9)
    assert table[1][1][2] == 1.0
    assert read_track_table(p)[2] == [(3, BoundingBox(11, 20, 30, 40))]


@pytest.mark.parametrize("line", ["1,2,3,4,5\n", "1,2,x,4,5,6\n", "1,2,0,0,0,5\n"])
def test_read_mot_rejects_bad_rows(tmp_path, line):
    p = tmp_path / "bad.txt"
    p.write_text(line)
    with pytest.raises(DataError, match="bad.txt:1"):
        read_mot(p)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        read_mot(tmp_path / "nope.txt")


def test_track_table_round_trip(tmp_path):
    table = {2: [(5, BoundingBox(1.25, 2, 3, 4)), (1, BoundingBox(0, 0, 1, 1))],
             1: [(1, BoundingBox(0, 0, 1, 1))]}
    text = format_track_table(table)
    assert text.splitlines()[0] == "1,1,0.00,0.00,1.00,1.00,1,-1,-1,-1"
    assert text.splitlines()[1].startswith("2,1,")
    (tmp_path / "t.txt").write_text(text)
    back = read_track_table(tmp_path / "t.txt")
    assert back == {f: sorted(rows, key=lambda r: r[0]) for f, rows in table.items()}
    assert format_track_table({}) == ""


def test_detections_and_hashes_round_trip(tmp_path):
    sc = gen_scenario(ScenarioSpec(num_objects=3, frame_count=4), seed=2)
    sc.write(tmp_path)
    hashes = read_hashes(tmp_path / "hashes.txt")
    frames = read_detections(tmp_path / "det.txt", hashes)
    assert [f.frame for f in frames] == [f.frame for f in sc.frames]
    for a, b in zip(frames, sc.frames):
        assert [d.hash for d in a.detections] == [d.hash for d in b.detections]
        for da, db in zip(a.detections, b.detections):
            assert (da.box.x, da.box.w) == pytest.approx((db.box.x, db.box.w), abs=0.005)
    assert format_detections(frames) == (tmp_path / "det.txt").read_text()
    assert format_hashes(frames) == (tmp_path / "hashes.txt").read_text()


def test_detections_without_sidecar_have_no_hash(tmp_path):
    p = tmp_path / "det.txt"
    p.write_text("1,-1,0,0,5,5,1.7,-1,-1,-1\n")
    (fd,) = read_detections(p)
    assert fd.detections[0].hash is None
    assert fd.detections[0].confidence == 1.0


def test_bad_hash_sidecar(tmp_path):
    p = tmp_path / "h.txt"
    p.write_text("1,0,zz\n")
    with pytest.raises(DataError):
        read_hashes(p)


def test_detection_validation():
    with pytest.raises(ValueError):
        Detection(BoundingBox(0, 0, 1, 1), confidence=1.5)
    assert len(FrameDetections(1, ())) == 0


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# solver settings\nsolver = rsa\nsweeps=75  # short\n\ntrotter-slices = 8\n")
        assert cfg == {"solver": "rsa", "sweeps": "75", "trotter_slices": "8"}

    @pytest.mark.parametrize("text", ["solver rsa\n", " = 3\n"])
    def test_bad_lines(self, text):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config(text)

    def test_load(self, tmp_path):
        (tmp_path / "c.cfg").write_text("seed = 4\n")
        assert load_config(tmp_path / "c.cfg") == {"seed": "4"}
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.cfg")

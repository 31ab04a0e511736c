import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reefloop.dataset import (
    AttributeSet,
    DatasetError,
    KeyframeTrack,
    SequenceRecord,
    compute_auto_attributes,
    dump_toml,
    interpolate_track,
    load_dataset,
    load_sequence,
    resample_timeline,
    save_sequence,
    scale_annotations,
)
from reefloop.geometry import BBox


def write_sequence(root, seq_id, track, fps=30.0, resolution=(854, 480), attrs=None, keyframes=None):
    d = root / seq_id
    d.mkdir(parents=True)
    attr_lines = ""
    if attrs:
        attr_lines = "\n[attributes]\n" + "\n".join(
            f"{k} = {'true' if v else 'false'}" for k, v in attrs.items()
        )
    (d / "meta.toml").write_text(
        f'id = "{seq_id}"\nfps = {fps}\nresolution = [{resolution[0]}, {resolution[1]}]\n'
        f'animal = "shark"\nhabitat = "midwater"\nbehavior = "constant swim"\n' + attr_lines + "\n"
    )
    (d / "groundtruth.txt").write_text(
        "\n".join(",".join(repr(float(v)) for v in b.as_tuple()) for b in track) + "\n"
    )
    if keyframes:
        (d / "keyframes.txt").write_text(
            "\n".join(f"{i},{b.x},{b.y},{b.w},{b.h}" for i, b in keyframes) + "\n"
        )
    return d


class TestInterpolation:
    def test_midpoint(self):
        kf = KeyframeTrack(((0, BBox(0, 0, 10, 10)), (10, BBox(10, 20, 30, 10))))
        track = interpolate_track(kf, 11)
        assert track[5] == BBox(5, 10, 20, 10)

    def test_single_keyframe_constant(self):
        b = BBox(3, 4, 5, 6)
        track = interpolate_track(KeyframeTrack(((0, b),)), 7)
        assert all(t == b for t in track)

    def test_quarter_point(self):
        kf = KeyframeTrack(((0, BBox(0, 0, 10, 10)), (4, BBox(8, 0, 10, 10))))
        assert interpolate_track(kf, 5)[1] == BBox(2, 0, 10, 10)

    def test_holds_after_last_keyframe(self):
        kf = KeyframeTrack(((0, BBox(0, 0, 10, 10)), (2, BBox(4, 0, 10, 10))))
        track = interpolate_track(kf, 6)
        assert track[3] == track[4] == track[5] == BBox(4, 0, 10, 10)

    def test_rejects_short_frame_count(self):
        kf = KeyframeTrack(((0, BBox(0, 0, 10, 10)), (10, BBox(1, 1, 10, 10))))
        with pytest.raises(ValueError):
            interpolate_track(kf, 10)

    def test_rejects_empty_and_nonmonotone(self):
        with pytest.raises(ValueError):
            KeyframeTrack(())
        with pytest.raises(ValueError):
            KeyframeTrack(((0, BBox(0, 0, 1, 1)), (5, BBox(0, 0, 1, 1)), (3, BBox(0, 0, 1, 1))))
        with pytest.raises(ValueError):
            KeyframeTrack(((2, BBox(0, 0, 1, 1)),))

    def test_gap_over_15_warns_but_loads(self, caplog):
        with caplog.at_level(logging.WARNING):
            KeyframeTrack(((0, BBox(0, 0, 1, 1)), (20, BBox(5, 5, 1, 1))))
        assert any("gap" in r.message for r in caplog.records)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(1, 15), min_size=1, max_size=6), st.data())
    def test_convex_combination_property(self, gaps, data):
        indices = [0]
        for g in gaps:
            indices.append(indices[-1] + g)
        boxes = [
            BBox(
                data.draw(st.floats(0, 500)),
                data.draw(st.floats(0, 500)),
                data.draw(st.floats(1, 100)),
                data.draw(st.floats(1, 100)),
            )
            for _ in indices
        ]
        kf = KeyframeTrack(tuple(zip(indices, boxes)))
        track = interpolate_track(kf, indices[-1] + 1)
        for idx, box in kf.entries:
            assert track[idx] == box
        for (i, bi), (j, bj) in zip(kf.entries, kf.entries[1:]):
            for k in range(i, j + 1):
                t = (k - i) / (j - i)
                expect = [u + (v - u) * t for u, v in zip(bi.as_tuple(), bj.as_tuple())]
                got = track[k].as_tuple()
                assert all(abs(a - b) <= 1e-12 for a, b in zip(got, expect))


class TestAutoAttributes:
    def test_scale_variation_over_2(self):
        track = [BBox(0, 0, 50, 40), BBox(0, 0, 50 * 2.05, 40)]  # area ratio 2.05
        assert compute_auto_attributes(track)["SV"] is True

    def test_low_resolution(self):
        track = [BBox(0, 0, 100, 100), BBox(0, 0, 40, 20)]  # 800 px^2
        assert compute_auto_attributes(track)["LR"] is True

    def test_constant_track_all_false(self):
        track = [BBox(0, 0, 100, 50)] * 10  # area 5000
        flags = compute_auto_attributes(track)
        assert flags == {"SV": False, "ARC": False, "LR": False}

    def test_boundaries_are_strict(self):
        b0 = BBox(0, 0, 50, 40)  # area 2000, aspect 1.25
        exactly_double = BBox(0, 0, 100, 40)
        exactly_half = BBox(0, 0, 25, 40)
        assert compute_auto_attributes([b0, exactly_double])["SV"] is False
        assert compute_auto_attributes([b0, exactly_half])["SV"] is False
        assert compute_auto_attributes([b0, BBox(0, 0, 100, 40)])["ARC"] is False  # aspect ratio x2
        area_1000 = BBox(0, 0, 40, 25)
        assert compute_auto_attributes([area_1000, area_1000])["LR"] is False
        just_under = BBox(0, 0, 40, 24.999)
        assert compute_auto_attributes([area_1000, just_under])["LR"] is True

    def test_aspect_ratio_change(self):
        b0 = BBox(0, 0, 40, 40)
        squished = BBox(0, 0, 90, 40)  # aspect ratio 2.25x
        assert compute_auto_attributes([b0, squished])["ARC"] is True

    def test_sv_arc_scale_invariant_lr_not(self):
        track = [BBox(0, 0, 60, 40), BBox(10, 10, 90, 45)]
        scaled = [b.scaled(0.25, 0.25) for b in track]
        base = compute_auto_attributes(track)
        small = compute_auto_attributes(scaled)
        assert small["SV"] == base["SV"]
        assert small["ARC"] == base["ARC"]
        assert base["LR"] is False and small["LR"] is True  # 15x10 = 150 px^2


class TestResample:
    def test_integer_decimation(self):
        track = list(range(100))
        out = resample_timeline(track, 60, 30)
        assert out == list(range(0, 100, 2))

    def test_identity(self):
        track = list(range(17))
        assert resample_timeline(track, 30, 30) == track

    def test_30_to_10(self):
        track = list(range(90))
        out = resample_timeline(track, 30, 10)
        assert len(out) == 30
        assert out == list(range(0, 90, 3))

    def test_upsample_refused(self):
        with pytest.raises(ValueError):
            resample_timeline([1, 2, 3], 10, 30)

    def test_composition_with_integer_multiples(self):
        track = list(range(101))
        via_b = resample_timeline(resample_timeline(track, 60, 30), 30, 10)
        direct = resample_timeline(track, 60, 10)
        assert via_b == direct


class TestScaleAnnotations:
    def test_1080p_to_480p(self):
        (out,) = scale_annotations([BBox(100, 100, 200, 100)], (1920, 1080), (854, 480))
        assert out.x == pytest.approx(100 * 854 / 1920)
        assert out.y == pytest.approx(100 * 480 / 1080)
        assert out.w == pytest.approx(200 * 854 / 1920)
        assert out.h == pytest.approx(100 * 480 / 1080)

    def test_identity(self):
        b = BBox(1, 2, 3, 4)
        assert scale_annotations([b], (854, 480), (854, 480)) == [b]

    def test_doubling(self):
        (out,) = scale_annotations([BBox(1, 2, 3, 4)], (100, 100), (200, 200))
        assert out == BBox(2, 4, 6, 8)


class TestAttributeSet:
    def test_lighting_exclusive(self):
        with pytest.raises(ValueError):
            AttributeSet(active_lighting=True, passive_lighting=True)

    def test_seabed_subsets(self):
        with pytest.raises(ValueError):
            AttributeSet(coral_reef=True)
        AttributeSet(coral_reef=True, seabed=True)  # fine

    def test_code_roundtrip(self):
        a = AttributeSet.from_codes(["MW", "AL", "SV"])
        assert a.codes() == ("SV", "MW", "AL")
        assert a["MW"] and a["AL"] and not a["PL"]


class TestLoader:
    def make_track(self, n=20):
        return [BBox(10 + i, 20, 40, 40) for i in range(n)]

    def test_roundtrip_two_sequences(self, tmp_path):
        write_sequence(tmp_path, "seq-a", self.make_track(), attrs={"MW": True, "PL": True})
        write_sequence(tmp_path, "seq-b", self.make_track(31), fps=25.0)
        records = load_dataset(tmp_path)
        assert [r.id for r in records] == ["seq-a", "seq-b"]
        assert records[0].attributes["MW"] is True
        assert records[1].fps == 25.0
        assert records[1].frame_count == 31

    def test_parses_decimal_line(self, tmp_path):
        d = write_sequence(tmp_path, "s", [BBox(12.5, 30, 40, 20)] * 12)
        rec = load_sequence(d)
        assert rec.track[0] == BBox(12.5, 30, 40, 20)

    def test_auto_attr_mismatch_warns_not_fails(self, tmp_path, caplog):
        track = [BBox(0, 0, 50, 40), BBox(0, 0, 120, 40)]  # SV true (ratio 2.4)
        d = write_sequence(tmp_path, "s", track, attrs={"SV": False})
        with caplog.at_level(logging.WARNING):
            rec = load_sequence(d)
        assert rec.attributes["SV"] is True
        assert any("SV" in r.message for r in caplog.records)

    def test_missing_groundtruth(self, tmp_path):
        d = tmp_path / "s"
        d.mkdir()
        (d / "meta.toml").write_text('id = "s"\nfps = 30\nresolution = [854, 480]\n')
        with pytest.raises(DatasetError, match="ground-truth"):
            load_sequence(d)

    def test_malformed_line(self, tmp_path):
        d = write_sequence(tmp_path, "s", self.make_track())
        (d / "groundtruth.txt").write_text("1,2,3\n")
        with pytest.raises(DatasetError, match="expected 4"):
            load_sequence(d)

    def test_low_fps_rejected(self, tmp_path):
        d = write_sequence(tmp_path, "s", self.make_track(), fps=5.0)
        with pytest.raises(DatasetError, match="fps"):
            load_sequence(d)

    def test_keyframes_must_match(self, tmp_path):
        track = interpolate_track(
            KeyframeTrack(((0, BBox(0, 0, 10, 10)), (9, BBox(9, 0, 10, 10)))), 10
        )
        d = write_sequence(
            tmp_path, "s", track,
            keyframes=[(0, BBox(0, 0, 10, 10)), (9, BBox(9, 0, 10, 10))],
        )
        load_sequence(d)  # consistent: fine

        bad = list(track)
        bad[5] = BBox(50, 50, 10, 10)
        d2 = write_sequence(
            tmp_path, "s2", bad,
            keyframes=[(0, BBox(0, 0, 10, 10)), (9, BBox(9, 0, 10, 10))],
        )
        with pytest.raises(DatasetError, match="interpolation"):
            load_sequence(d2)

    def test_save_load_fixed_point(self, tmp_path):
        track = interpolate_track(
            KeyframeTrack(((0, BBox(0.25, 1, 130, 120)), (7, BBox(11, 5, 133, 121)))), 12
        )
        rec = SequenceRecord(
            id="s", fps=30.0, resolution=(854, 480), animal="squid",
            habitat="rocky seabed", behavior="medium swim",
            track=tuple(track),
            attributes=AttributeSet.from_codes(["SB", "IS", "PL"]),
        )
        out1 = tmp_path / "d1"
        save_sequence(rec, out1)
        rec2 = load_sequence(out1 / "s")
        assert rec2.track == rec.track
        assert rec2.attributes == rec.attributes
        out2 = tmp_path / "d2"
        save_sequence(rec2, out2)
        assert (out1 / "s" / "groundtruth.txt").read_bytes() == (out2 / "s" / "groundtruth.txt").read_bytes()
        assert (out1 / "s" / "meta.toml").read_bytes() == (out2 / "s" / "meta.toml").read_bytes()


def test_dump_toml_scalars():
    text = dump_toml({"a": 1, "b": 2.5, "c": "x\"y", "d": [1, 2], "sub": {"k": True}})
    import tomli

    back = tomli.loads(text)
    assert back == {"a": 1, "b": 2.5, "c": 'x"y', "d": [1, 2], "sub": {"k": True}}

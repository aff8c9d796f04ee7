from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facebench.errors import (
    DuplicateFrame,
    InvalidGeometry,
    MalformedBlock,
    MalformedRow,
    ParseError,
)
from facebench.formats import (
    Corpus,
    FrameAnnotation,
    FrameDetections,
    format_real,
    parse_csv_annotations,
    parse_csv_detections,
    parse_fddb_annotations,
    parse_fddb_detections,
    write_annotations_csv,
    write_detections,
)
from facebench.geometry import BoundingBox, Detection

from conftest import boxes, detections, frame_ids


def unique_frames(frame_strategy):
    return st.lists(frame_strategy, max_size=8).filter(
        lambda fs: len({f.frame_id for f in fs}) == len(fs)
    )


annotation_frames = st.builds(
    FrameAnnotation, frame_id=frame_ids, ground_truth=st.lists(boxes, max_size=5)
)
detection_frames = st.builds(
    FrameDetections, frame_id=frame_ids, detections=st.lists(detections, max_size=5)
)

annotation_corpora = st.builds(Corpus, frames=unique_frames(annotation_frames))
detection_corpora = st.builds(Corpus, frames=unique_frames(detection_frames))


class TestFormatReal:
    @given(x=st.floats(allow_nan=False, allow_infinity=False))
    def test_round_trips_exactly(self, x):
        s = format_real(x)
        assert float(s) == x
        assert "e" not in s and "E" not in s


class TestFddbAnnotations:
    def test_single_ellipse_block(self):
        corpus = parse_fddb_annotations("img/001\n1\n2.0 1.0 0.0 5.0 5.0 1\n")
        assert len(corpus) == 1
        frame = corpus.frames[0]
        assert frame.frame_id == "img/001"
        (box,) = frame.ground_truth
        assert (box.x, box.y, box.w, box.h) == (3.0, 4.0, 4.0, 2.0)

    def test_zero_face_frame(self):
        corpus = parse_fddb_annotations("img/002\n0\n")
        assert corpus.frames[0].ground_truth == ()

    def test_declared_count_mismatch(self):
        with pytest.raises(MalformedBlock) as exc:
            parse_fddb_annotations("img/001\n2\n2.0 1.0 0.0 5.0 5.0 1\n")
        assert exc.value.line_number == 4

    def test_non_numeric_field(self):
        with pytest.raises(MalformedBlock) as exc:
            parse_fddb_annotations("img/001\n1\n2.0 oops 0.0 5.0 5.0 1\n")
        assert exc.value.line_number == 3

    def test_bad_count_line(self):
        with pytest.raises(MalformedBlock) as exc:
            parse_fddb_annotations("img/001\nmany\n")
        assert exc.value.line_number == 2

    def test_duplicate_frame(self):
        text = "img/001\n0\nimg/001\n0\n"
        with pytest.raises(DuplicateFrame):
            parse_fddb_annotations(text)

    def test_trailing_whitespace_tolerated(self):
        corpus = parse_fddb_annotations("img/001  \n 1 \n2.0 1.0 0.0 5.0 5.0 1   \n\n\n")
        assert corpus.frames[0].frame_id == "img/001"


class TestFddbDetections:
    def test_direct_field_mapping(self):
        corpus = parse_fddb_detections("img/001\n1\n3 4 4 2 0.97\n")
        (det,) = corpus.frames[0].detections
        assert (det.box.x, det.box.y, det.box.w, det.box.h) == (3.0, 4.0, 4.0, 2.0)
        assert det.score == 0.97

    def test_zero_width_rejected(self):
        with pytest.raises(InvalidGeometry) as exc:
            parse_fddb_detections("img/001\n1\n3 4 0 2 0.97\n")
        assert exc.value.line_number == 3

    def test_scientific_notation_accepted(self):
        corpus = parse_fddb_detections("img/001\n1\n3 4 4 2 9.7e-1\n")
        assert corpus.frames[0].detections[0].score == 0.97

    def test_canonical_block_output(self):
        corpus = Corpus(
            (FrameDetections("img/001", (Detection(BoundingBox(3, 4, 4, 2), 0.97),)),)
        )
        assert write_detections(corpus, "fddb") == "img/001\n1\n3.0 4.0 4.0 2.0 0.97\n"

    @given(corpus=detection_corpora)
    @settings(max_examples=150)
    def test_fddb_round_trip(self, corpus):
        assert parse_fddb_detections(write_detections(corpus, "fddb")) == corpus

    @given(corpus=detection_corpora)
    @settings(max_examples=150)
    def test_csv_round_trip(self, corpus):
        assert parse_csv_detections(write_detections(corpus, "csv")) == corpus


class TestCsvAnnotations:
    def test_single_row(self):
        corpus = parse_csv_annotations("frame_id,x,y,w,h\nf0,10,10,20,20\n")
        assert len(corpus) == 1
        assert corpus.frames[0].ground_truth[0].w == 20.0

    def test_annotated_empty_frame(self):
        corpus = parse_csv_annotations("frame_id,x,y,w,h\nf0,,,,\n")
        assert corpus.frames[0].frame_id == "f0"
        assert corpus.frames[0].ground_truth == ()

    def test_grouping_matches_line_oracle(self):
        rows = [
            ("f1", 0.0, 0.0, 5.0, 5.0),
            ("f0", 1.0, 1.0, 2.0, 2.0),
            ("f1", 10.0, 0.0, 5.0, 5.0),
            ("f2", 0.0, 0.0, 1.0, 1.0),
            ("f1", 20.0, 0.0, 5.0, 5.0),
        ]
        text = "frame_id,x,y,w,h\n" + "".join(
            f"{fid},{x},{y},{w},{h}\n" for fid, x, y, w, h in rows
        )
        corpus = parse_csv_annotations(text)
        # oracle: walk rows once, group preserving first appearance
        expected_order = []
        expected_groups = {}
        for fid, x, y, w, h in rows:
            if fid not in expected_groups:
                expected_order.append(fid)
                expected_groups[fid] = []
            expected_groups[fid].append(BoundingBox(x, y, w, h))
        assert [f.frame_id for f in corpus.frames] == expected_order
        for frame in corpus.frames:
            assert list(frame.ground_truth) == expected_groups[frame.frame_id]

    def test_wrong_arity(self):
        with pytest.raises(MalformedRow) as exc:
            parse_csv_annotations("frame_id,x,y,w,h\nf0,1,2,3\n")
        assert exc.value.line_number == 2

    def test_partial_empty_fields(self):
        with pytest.raises(MalformedRow):
            parse_csv_annotations("frame_id,x,y,w,h\nf0,1,,3,4\n")

    def test_bad_geometry(self):
        with pytest.raises(InvalidGeometry) as exc:
            parse_csv_annotations("frame_id,x,y,w,h\nf0,1,2,-3,4\n")
        assert exc.value.line_number == 2

    def test_missing_header(self):
        with pytest.raises(MalformedRow):
            parse_csv_annotations("f0,1,2,3,4\n")

    @given(corpus=annotation_corpora)
    @settings(max_examples=150)
    def test_round_trip(self, corpus):
        assert parse_csv_annotations(write_annotations_csv(corpus)) == corpus


class TestWriteDetections:
    def test_empty_corpus(self):
        assert write_detections(Corpus(()), "fddb") == ""
        assert write_detections(Corpus(()), "csv") == "frame_id,x,y,w,h,score\n"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            write_detections(Corpus(()), "xml")

    def test_frame_and_detection_order_preserved(self):
        frames = tuple(
            FrameDetections(
                f"f{i}",
                tuple(
                    Detection(BoundingBox(j, 0, 1, 1), float(j)) for j in range(3)
                ),
            )
            for i in range(4)
        )
        corpus = Corpus(frames)
        for fmt, parse in (
            ("fddb", parse_fddb_detections),
            ("csv", parse_csv_detections),
        ):
            again = parse(write_detections(corpus, fmt))
            assert [f.frame_id for f in again.frames] == [f.frame_id for f in frames]
            for a, b in zip(again.frames, frames):
                assert a.detections == b.detections


SEED_TEXTS = [
    "img/001\n1\n2.0 1.0 0.0 5.0 5.0 1\n",
    "img/001\n1\n3 4 4 2 0.97\nimg/002\n0\n",
    "frame_id,x,y,w,h\nf0,10,10,20,20\nf0,,,,\n",
    "frame_id,x,y,w,h,score\nf0,10,10,20,20,0.5\n",
]

MUTATION_CHARS = "0123456789.,-+eE \t\n\x00\xff abcZ\"'"


def _mutate(text: str, rng: random.Random) -> str:
    chars = list(text)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(3)
        pos = rng.randrange(max(len(chars), 1))
        if op == 0 and chars:
            chars[pos % len(chars)] = rng.choice(MUTATION_CHARS)
        elif op == 1:
            chars.insert(pos, rng.choice(MUTATION_CHARS))
        elif op == 2 and chars:
            del chars[pos % len(chars)]
    return "".join(chars)


@pytest.mark.parametrize(
    "parser",
    [parse_fddb_annotations, parse_fddb_detections, parse_csv_annotations, parse_csv_detections],
)
def test_fuzzed_input_never_crashes(parser):
    rng = random.Random(1234)
    for _ in range(3000):
        text = _mutate(rng.choice(SEED_TEXTS), rng)
        try:
            corpus = parser(text)
        except ParseError as exc:
            assert exc.line_number is None or exc.line_number >= 1
        except InvalidGeometry as exc:
            assert exc.line_number is None or exc.line_number >= 1
        else:
            assert isinstance(corpus, Corpus)

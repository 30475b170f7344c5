import numpy as np
import pytest

from floordesc.corpus import ROOM_CLASSES, load_corpus
from floordesc.dsic import load_features_file
from floordesc.synth import (
    FIXTURE_SEED,
    IMAGE_SIZE,
    fixture_root,
    load_fixture,
    make_records,
    render_plan,
    write_fixture,
)
from floordesc.textprep import split_sentences


def test_make_records_deterministic():
    first = make_records()
    second = make_records()
    assert [r.paragraph for r in first] == [r.paragraph for r in second]
    assert [r.symbols for r in first] == [r.symbols for r in second]
    assert [r.regions for r in first] == [r.regions for r in second]


def test_make_records_shape():
    records = make_records()
    assert len(records) == 10
    assert len({r.record_id for r in records}) == 10
    for record in records:
        assert 2 <= len(record.regions) <= 3
        assert len(record.symbols) == len(record.regions)
        assert record.image_path is not None
        sentences = split_sentences(record.paragraph)
        assert len(sentences) == len(record.regions)


def test_symbols_sit_inside_their_rooms():
    for record in make_records():
        for symbol, region in zip(record.symbols, record.regions):
            room, decor = region.bbox, symbol.bbox
            assert room.x < decor.x
            assert room.y < decor.y
            assert decor.x + decor.width < room.x + room.width
            assert decor.y + decor.height < room.y + room.height


def test_each_region_caption_names_one_room():
    for record in make_records():
        labels = record.room_labels()
        assert len(labels) == len(record.regions)
        for _bbox, name in labels:
            assert name in ROOM_CLASSES


def test_other_seed_changes_content():
    assert [r.paragraph for r in make_records(seed=1)] != [
        r.paragraph for r in make_records()
    ]


def test_render_deterministic():
    record = make_records()[0]
    a = np.asarray(render_plan(record))
    b = np.asarray(render_plan(record))
    assert a.shape == (IMAGE_SIZE, IMAGE_SIZE)
    assert np.array_equal(a, b)


def test_write_fixture_roundtrip(tmp_path):
    written = write_fixture(tmp_path, n=3, feature_dim=8)
    loaded = load_corpus(tmp_path, "manifest.tsv")
    assert [r.record_id for r in loaded] == [r.record_id for r in written]
    assert [r.paragraph for r in loaded] == [r.paragraph for r in written]
    assert [r.symbols for r in loaded] == [r.symbols for r in written]
    for record in loaded:
        assert record.image_path is not None
        assert record.image_path.exists()
    features = load_features_file(tmp_path / "features.txt")
    for record in loaded:
        assert features[record.record_id].shape == (len(record.regions), 8)


def test_bundled_fixture_matches_generator(tmp_path):
    bundled_records, bundled_features = load_fixture()
    regenerated = write_fixture(tmp_path, n=10, seed=FIXTURE_SEED, feature_dim=24)
    assert [r.paragraph for r in bundled_records] == [r.paragraph for r in regenerated]
    assert [r.symbols for r in bundled_records] == [r.symbols for r in regenerated]
    fresh = load_features_file(tmp_path / "features.txt")
    for record_id, matrix in bundled_features.items():
        assert np.array_equal(matrix, fresh[record_id])


def test_load_fixture_aligned():
    records, features = load_fixture()
    assert len(records) == 10
    assert set(features) == {r.record_id for r in records}
    for record in records:
        assert features[record.record_id].shape[0] == len(record.regions)


def test_fixture_root_exists():
    root = fixture_root()
    assert (root / "manifest.tsv").exists()
    assert (root / "features.txt").exists()

"""Deterministic miniature corpus for overfit checks and demos.

Ten floor plans on a 96x96 canvas, each with two or three labeled rooms,
decor symbols inside them, short region captions, and a paragraph of two
or three sentences over a deliberately tiny vocabulary.  Everything is a
pure function of the seed, so training runs on the fixture are exactly
repeatable.
"""
from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np

from .corpus import (
    FloorPlanRecord,
    RegionCaption,
    SymbolAnnotation,
    write_manifest,
    write_record_files,
)
from .detect_eval import BBox

IMAGE_SIZE = 96
FIXTURE_SEED = 2024

_ROOMS = ("Bedroom", "Bathroom", "Kitchen", "Hall", "Living room")
_ROOM_WORDS = {
    "Bedroom": "bedroom",
    "Bathroom": "bathroom",
    "Kitchen": "kitchen",
    "Hall": "hall",
    "Living room": "living room",
}
_DECOR_FOR_ROOM = {
    "Bedroom": ("bed", "closet"),
    "Bathroom": ("bathtub", "sink"),
    "Kitchen": ("sink", "table"),
    "Hall": ("stairs", "door"),
    "Living room": ("sofa", "window"),
}
_ADJECTIVES = ("large", "small", "bright", "narrow")

# two-room plans split the canvas vertically, three-room plans add a
# bottom band; margins keep decor boxes strictly inside their room
_TWO_ROOM_BOXES = (BBox(4, 4, 42, 88), BBox(50, 4, 42, 88))
_THREE_ROOM_BOXES = (BBox(4, 4, 42, 56), BBox(50, 4, 42, 56), BBox(4, 64, 88, 28))


def _room_caption(rng: np.random.Generator, room: str) -> str:
    adjective = _ADJECTIVES[rng.integers(len(_ADJECTIVES))]
    return f"the {adjective} {_ROOM_WORDS[room]}"


def _room_sentence(rng: np.random.Generator, room: str, decor: str) -> str:
    word = _ROOM_WORDS[room]
    roll = rng.integers(3)
    adjective = _ADJECTIVES[rng.integers(len(_ADJECTIVES))]
    decor_word = decor.replace("_", " ")
    if roll == 0:
        return f"the {word} is {adjective}"
    if roll == 1:
        return f"the {word} has a {decor_word}"
    return f"a {decor_word} sits in the {adjective} {word}"


def make_records(n: int = 10, seed: int = FIXTURE_SEED) -> list[FloorPlanRecord]:
    rng = np.random.default_rng(seed)
    records = []
    for index in range(n):
        n_rooms = 2 + int(rng.integers(2))
        boxes = _TWO_ROOM_BOXES if n_rooms == 2 else _THREE_ROOM_BOXES
        rooms = list(rng.choice(len(_ROOMS), size=n_rooms, replace=False))
        rooms = [_ROOMS[i] for i in rooms]

        regions = []
        symbols = []
        sentences = []
        for room, box in zip(rooms, boxes):
            regions.append(RegionCaption(bbox=box, phrase=_room_caption(rng, room)))
            decor = _DECOR_FOR_ROOM[room][rng.integers(2)]
            dw = 10 + int(rng.integers(8))
            dh = 8 + int(rng.integers(6))
            dx = box.x + 2 + int(rng.integers(int(box.width) - dw - 4))
            dy = box.y + 2 + int(rng.integers(int(box.height) - dh - 4))
            symbols.append(SymbolAnnotation(label=decor, bbox=BBox(dx, dy, dw, dh)))
            sentences.append(_room_sentence(rng, room, decor))

        paragraph = ". ".join(sentences) + "."
        records.append(
            FloorPlanRecord(
                record_id=f"synth-{index:02d}",
                symbols=symbols,
                regions=regions,
                paragraph=paragraph,
                image_path=Path(f"synth-{index:02d}.png"),
            )
        )
    return records


def render_plan(record: FloorPlanRecord, seed: int = FIXTURE_SEED):
    """Grayscale drawing: speckled paper, dark room outlines, filled decors."""
    from PIL import Image, ImageDraw

    rng = np.random.default_rng(seed + zlib.crc32(record.record_id.encode()) % 10_000)
    noise = rng.integers(235, 256, size=(IMAGE_SIZE, IMAGE_SIZE), dtype=np.uint8)
    image = Image.fromarray(noise, mode="L")
    draw = ImageDraw.Draw(image)
    for region in record.regions:
        b = region.bbox
        # a per-plan interior shade plus scattered clutter keeps visually
        # similar layouts apart once cropped and downsampled
        fill = 120 + int(rng.integers(110))
        draw.rectangle(
            [b.x, b.y, b.x + b.width - 1, b.y + b.height - 1],
            fill=fill,
            outline=0,
            width=2,
        )
        for _ in range(4):
            cw = 4 + int(rng.integers(8))
            ch = 4 + int(rng.integers(8))
            cx = b.x + 3 + int(rng.integers(max(int(b.width) - cw - 6, 1)))
            cy = b.y + 3 + int(rng.integers(max(int(b.height) - ch - 6, 1)))
            shade = int(rng.integers(256))
            draw.rectangle([cx, cy, cx + cw - 1, cy + ch - 1], fill=shade)
    for symbol in record.symbols:
        b = symbol.bbox
        shade = 40 + (zlib.crc32(symbol.label.encode()) % 120)
        draw.rectangle([b.x, b.y, b.x + b.width - 1, b.y + b.height - 1], fill=shade)
    return image


def write_fixture(
    root, n: int = 10, seed: int = FIXTURE_SEED, feature_dim: int = 16
) -> list[FloorPlanRecord]:
    """Materialize manifest, XML/JSON/paragraph files, images, features."""
    from .dsic import extract_region_features, save_features_file

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    records = make_records(n, seed)
    rows = []
    for record in records:
        rows.append(write_record_files(root, record))
        render_plan(record, seed).save(root / record.image_path.name)
    write_manifest(root / "manifest.tsv", rows)

    features = {}
    for record in records:
        on_disk = FloorPlanRecord(
            record_id=record.record_id,
            symbols=record.symbols,
            regions=record.regions,
            paragraph=record.paragraph,
            image_path=root / record.image_path.name,
        )
        extracted = extract_region_features(
            on_disk, [r.bbox for r in record.regions], feature_dim
        )
        features[record.record_id] = np.stack([f.vector for f in extracted])
    save_features_file(root / "features.txt", features)
    return records


def fixture_root() -> Path:
    from importlib import resources

    return Path(str(resources.files("floordesc") / "data" / "fixture"))


def load_fixture():
    """The bundled copy: (records, record_id -> region feature matrix)."""
    from .corpus import load_corpus
    from .dsic import load_features_file

    root = fixture_root()
    records = load_corpus(root, "manifest.tsv")
    features = load_features_file(root / "features.txt")
    return records, features

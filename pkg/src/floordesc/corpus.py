"""Corpus I/O: symbol XML, region-caption JSON, paragraphs, manifests.

A record joins three files named by a manifest row: VOC-style symbol
annotations, a JSON file of captioned regions, and a plain-text
paragraph; an optional fourth path points at the plan image.  Parsers
validate eagerly and raise typed errors that name the offending element.
"""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .detect_eval import BBox, GroundTruth
from . import textprep


class CorpusError(Exception):
    """Base class for corpus file problems."""


class ParseError(CorpusError):
    """Structurally invalid file (bad XML/JSON syntax)."""


class SchemaError(CorpusError):
    """Well-formed file with missing or wrongly typed fields."""


class InvalidBoxError(CorpusError):
    """A bounding box with non-positive extent."""


class DuplicateIdError(CorpusError):
    """The same record id appears twice in a manifest."""


ROOM_CLASSES = ("Bathroom", "Bedroom", "Hall", "Kitchen", "Living room")

_ROOM_PATTERNS = {
    "Bathroom": ("bathroom",),
    "Bedroom": ("bedroom",),
    "Hall": ("hall",),
    "Kitchen": ("kitchen",),
    "Living room": ("living room",),
}

DEFAULT_DECOR_CLASSES = (
    "bathtub",
    "bed",
    "billiard",
    "chair",
    "closet",
    "cooking_range",
    "door",
    "kitchen_bar",
    "refrigerator",
    "shower",
    "sink",
    "sofa",
    "stairs",
    "table",
    "toilet",
    "window",
)


def load_decor_classes(path=None) -> tuple[str, ...]:
    """Decor class list, one name per line; defaults to the bundled set."""
    if path is None:
        path = Path(__file__).parent / "data" / "decor_classes.txt"
    names = [
        line.strip()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    if not names:
        raise SchemaError(f"decor class file {path} is empty")
    return tuple(names)


@dataclass(frozen=True)
class SymbolAnnotation:
    """A labeled symbol box from the XML side."""

    label: str
    bbox: BBox


@dataclass(frozen=True)
class RegionCaption:
    """A captioned region from the JSON side."""

    bbox: BBox
    phrase: str


@dataclass
class FloorPlanRecord:
    record_id: str
    symbols: list[SymbolAnnotation]
    regions: list[RegionCaption]
    paragraph: str
    image_path: Path | None = None

    def room_labels(self) -> list[tuple[BBox, str]]:
        """Regions whose caption names exactly one room class."""
        out = []
        for region in self.regions:
            phrase = region.phrase.lower()
            hits = [
                cls
                for cls, pats in _ROOM_PATTERNS.items()
                if any(_word_match(phrase, p) for p in pats)
            ]
            if len(hits) == 1:
                out.append((region.bbox, hits[0]))
        return out

    def ground_truths(self) -> list[GroundTruth]:
        return [
            GroundTruth(image_id=self.record_id, class_name=s.label, bbox=s.bbox)
            for s in self.symbols
        ]


def _word_match(text: str, keyword: str) -> bool:
    idx = 0
    while True:
        idx = text.find(keyword, idx)
        if idx < 0:
            return False
        before_ok = idx == 0 or not text[idx - 1].isalnum()
        end = idx + len(keyword)
        after_ok = end >= len(text) or not text[end].isalnum()
        if before_ok and after_ok:
            return True
        idx += 1


# ---------------------------------------------------------------------------
# symbol XML


def parse_symbol_xml(path) -> list[SymbolAnnotation]:
    """VOC-like annotation: object name plus xmin/ymin/xmax/ymax corners.

    Boxes convert to (x, y, w, h).  Malformed XML raises ParseError with
    the line number; a box with xmax <= xmin or ymax <= ymin raises
    InvalidBoxError naming the object index.
    """
    path = Path(path)
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"{path}: XML parse error at line {line}, column {col}") from exc
    root = tree.getroot()
    if root.tag != "annotation":
        raise SchemaError(f"{path}: root element is <{root.tag}>, expected <annotation>")
    out = []
    for index, obj in enumerate(root.findall("object")):
        name_el = obj.find("name")
        if name_el is None or not (name_el.text or "").strip():
            raise SchemaError(f"{path}: object {index} lacks a <name>")
        box_el = obj.find("bndbox")
        if box_el is None:
            raise SchemaError(f"{path}: object {index} lacks a <bndbox>")
        coords = {}
        for key in ("xmin", "ymin", "xmax", "ymax"):
            el = box_el.find(key)
            if el is None or el.text is None:
                raise SchemaError(f"{path}: object {index} bndbox lacks <{key}>")
            try:
                coords[key] = float(el.text)
            except ValueError as exc:
                raise SchemaError(
                    f"{path}: object {index} has non-numeric <{key}>: {el.text!r}"
                ) from exc
        if coords["xmax"] <= coords["xmin"] or coords["ymax"] <= coords["ymin"]:
            raise InvalidBoxError(
                f"{path}: object {index} has an empty box "
                f"(xmin={coords['xmin']}, xmax={coords['xmax']}, "
                f"ymin={coords['ymin']}, ymax={coords['ymax']})"
            )
        out.append(
            SymbolAnnotation(
                label=name_el.text.strip(),
                bbox=BBox(
                    x=coords["xmin"],
                    y=coords["ymin"],
                    width=coords["xmax"] - coords["xmin"],
                    height=coords["ymax"] - coords["ymin"],
                ),
            )
        )
    return out


def serialize_symbol_xml(symbols: Sequence[SymbolAnnotation]) -> str:
    root = ET.Element("annotation")
    for s in symbols:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = s.label
        box = ET.SubElement(obj, "bndbox")
        ET.SubElement(box, "xmin").text = _num(s.bbox.x)
        ET.SubElement(box, "ymin").text = _num(s.bbox.y)
        ET.SubElement(box, "xmax").text = _num(s.bbox.x + s.bbox.width)
        ET.SubElement(box, "ymax").text = _num(s.bbox.y + s.bbox.height)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# ---------------------------------------------------------------------------
# region JSON


def parse_region_json(path) -> tuple[str, list[RegionCaption]]:
    """Region file: {"id": ..., "regions": [{x, y, width, height, phrase}]}.

    Caption whitespace is normalized.  A region missing its phrase (or
    any geometry field) raises SchemaError naming the region index.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: JSON parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "id" not in data or "regions" not in data:
        raise SchemaError(f"{path}: expected an object with 'id' and 'regions'")
    if not isinstance(data["regions"], list):
        raise SchemaError(f"{path}: 'regions' must be a list")
    regions = []
    for index, entry in enumerate(data["regions"]):
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: region {index} is not an object")
        if "phrase" not in entry or not isinstance(entry["phrase"], str) or not entry["phrase"].strip():
            raise SchemaError(f"{path}: region {index} lacks a phrase")
        try:
            bbox = BBox(
                x=float(entry["x"]),
                y=float(entry["y"]),
                width=float(entry["width"]),
                height=float(entry["height"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: region {index} has bad geometry: {exc}") from exc
        if bbox.width <= 0 or bbox.height <= 0:
            raise InvalidBoxError(
                f"{path}: region {index} has non-positive extent "
                f"(width={bbox.width}, height={bbox.height})"
            )
        phrase = " ".join(entry["phrase"].split())
        regions.append(RegionCaption(bbox=bbox, phrase=phrase))
    return str(data["id"]), regions


def serialize_region_json(record_id: str, regions: Sequence[Region]) -> str:
    return (
        json.dumps(
            {
                "id": record_id,
                "regions": [
                    {
                        "x": r.bbox.x,
                        "y": r.bbox.y,
                        "width": r.bbox.width,
                        "height": r.bbox.height,
                        "phrase": r.phrase,
                    }
                    for r in regions
                ],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )


# ---------------------------------------------------------------------------
# manifest


def load_corpus(root, manifest) -> list[FloorPlanRecord]:
    """Load every record a manifest lists, resolving paths against root."""
    root = Path(root)
    manifest = Path(manifest)
    if not manifest.is_absolute():
        manifest = root / manifest
    return load_manifest(manifest, root=root)


def load_manifest(path, root=None) -> list[FloorPlanRecord]:
    """Tab-separated rows: id, symbol XML, region JSON, paragraph, [image].

    Relative paths resolve against the manifest's directory (or an
    explicit root).  A repeated id raises DuplicateIdError citing the id;
    a missing image path is allowed and leaves image_path None.
    """
    path = Path(path)
    root = path.parent if root is None else Path(root)
    records = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 4:
            raise SchemaError(
                f"{path}:{lineno}: expected at least 4 tab-separated fields, got {len(fields)}"
            )
        record_id = fields[0].strip()
        if not record_id:
            raise SchemaError(f"{path}:{lineno}: empty record id")
        if record_id in seen:
            raise DuplicateIdError(
                f"{path}:{lineno}: duplicate record id {record_id!r} "
                f"(first seen on line {seen[record_id]})"
            )
        seen[record_id] = lineno

        def resolve(p: str) -> Path:
            candidate = Path(p)
            return candidate if candidate.is_absolute() else root / candidate

        xml_path = resolve(fields[1].strip())
        json_path = resolve(fields[2].strip())
        paragraph_path = resolve(fields[3].strip())
        image_path = None
        if len(fields) >= 5 and fields[4].strip():
            image_path = resolve(fields[4].strip())

        symbols = parse_symbol_xml(xml_path)
        json_id, regions = parse_region_json(json_path)
        if json_id != record_id:
            raise SchemaError(
                f"{path}:{lineno}: region file id {json_id!r} does not match "
                f"manifest id {record_id!r}"
            )
        try:
            paragraph = paragraph_path.read_text(encoding="utf-8").strip()
        except FileNotFoundError as exc:
            raise SchemaError(f"{path}:{lineno}: paragraph file missing: {paragraph_path}") from exc
        records.append(
            FloorPlanRecord(
                record_id=record_id,
                symbols=symbols,
                regions=regions,
                paragraph=paragraph,
                image_path=image_path,
            )
        )
    return records


def write_record_files(directory, record: FloorPlanRecord) -> list[str]:
    """Write one record's files into directory; returns a manifest row."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    xml_name = f"{record.record_id}.xml"
    json_name = f"{record.record_id}.json"
    txt_name = f"{record.record_id}.txt"
    (directory / xml_name).write_text(serialize_symbol_xml(record.symbols), encoding="utf-8")
    (directory / json_name).write_text(
        serialize_region_json(record.record_id, record.regions), encoding="utf-8"
    )
    (directory / txt_name).write_text(record.paragraph + "\n", encoding="utf-8")
    row = [record.record_id, xml_name, json_name, txt_name]
    if record.image_path is not None:
        row.append(str(record.image_path))
    return row


def write_manifest(path, rows: Sequence[Sequence[str]]):
    lines = ["\t".join(row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# statistics


@dataclass
class CorpusStats:
    record_count: int
    mean_paragraph_words: float
    mean_sentences_per_paragraph: float
    vocabulary_size_at_cutoff: int
    cutoff: int = 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "record_count": self.record_count,
                "mean_paragraph_words": self.mean_paragraph_words,
                "mean_sentences_per_paragraph": self.mean_sentences_per_paragraph,
                "vocabulary_size_at_cutoff": self.vocabulary_size_at_cutoff,
                "cutoff": self.cutoff,
            },
            indent=2,
            sort_keys=True,
        )


def corpus_stats(records: Sequence[FloorPlanRecord], cutoff: int = 1) -> CorpusStats:
    """Word counts over whitespace tokens, sentences split on . ! ?,
    vocabulary counted with the package tokenizer at the given cutoff."""
    if not records:
        raise ValueError("corpus_stats: no records")
    word_counts = [len(r.paragraph.split()) for r in records]
    sentence_counts = [
        max(len(textprep.split_sentences(r.paragraph)), 0) for r in records
    ]
    token_lists = [textprep.tokenize(r.paragraph) for r in records]
    if any(token_lists):
        vocab = textprep.build_vocab(token_lists, min_count=cutoff)
        vocab_size = vocab.size - len(textprep.SPECIALS)
    else:
        vocab_size = 0
    return CorpusStats(
        record_count=len(records),
        mean_paragraph_words=sum(word_counts) / len(records),
        mean_sentences_per_paragraph=sum(sentence_counts) / len(records),
        vocabulary_size_at_cutoff=vocab_size,
        cutoff=cutoff,
    )

"""Fixed-structure paragraph baseline filled from room and decor labels.

One opening sentence aggregates room counts, one sentence per room class
lists the decors attached to it, and a closing sentence collects decors
that fall outside every labeled room.  The sentence patterns live in an
editable grammar file; the output is fully deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import ROOM_CLASSES, FloorPlanRecord, load_decor_classes

FALLBACK_SENTENCE = "No recognizable rooms were found."

_REQUIRED_KEYS = ("opening", "room-one", "room-many", "unattached", "fallback")


@dataclass
class TemplateGrammar:
    """Sentence patterns plus irregular plural forms."""

    opening: str
    room_one: str
    room_many: str
    unattached: str
    fallback: str
    plurals: dict[str, str] = field(default_factory=dict)

    def plural(self, name: str) -> str:
        """Default: trailing s on the last word; overridable per word."""
        head, _, last = name.rpartition(" ")
        if last in self.plurals:
            last = self.plurals[last]
        else:
            last = last + "s"
        return f"{head} {last}" if head else last


def parse_grammar(text: str, source: str = "<string>") -> TemplateGrammar:
    entries: dict[str, str] = {}
    plurals: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ValueError(f"{source} line {lineno}: expected `key: text`")
        if key == "plural":
            word, arrow, plural_form = value.partition("->")
            if not arrow:
                raise ValueError(
                    f"{source} line {lineno}: plural rules look like `plural: word -> words`"
                )
            plurals[word.strip()] = plural_form.strip()
            continue
        if key not in _REQUIRED_KEYS:
            raise ValueError(f"{source} line {lineno}: unknown template key {key!r}")
        if key in entries:
            raise ValueError(f"{source} line {lineno}: duplicate template key {key!r}")
        if not value:
            raise ValueError(f"{source} line {lineno}: empty template for {key!r}")
        entries[key] = value
    missing = [k for k in _REQUIRED_KEYS if k not in entries]
    if missing:
        raise ValueError(f"{source}: missing template keys {missing}")
    return TemplateGrammar(
        opening=entries["opening"],
        room_one=entries["room-one"],
        room_many=entries["room-many"],
        unattached=entries["unattached"],
        fallback=entries["fallback"],
        plurals=plurals,
    )


def load_grammar(path) -> TemplateGrammar:
    path = Path(path)
    return parse_grammar(path.read_text(encoding="utf-8"), source=str(path))


def default_grammar() -> TemplateGrammar:
    text = (
        resources.files("floordesc") / "data" / "template_grammar.txt"
    ).read_text(encoding="utf-8")
    return parse_grammar(text, source="template_grammar.txt")


@dataclass
class TemplateInput:
    """Room and decor multisets; attachments map each decor to a room class.

    attachments is parallel to decors; None marks a decor outside every
    labeled room.  Omitting it leaves every decor unattached.
    """

    rooms: list[str] = field(default_factory=list)
    decors: list[str] = field(default_factory=list)
    attachments: list[str | None] | None = None
    adjacency: list[tuple[str, str]] | None = None


def _validate(tinput: TemplateInput) -> list[str | None]:
    decor_classes = set(load_decor_classes())
    for room in tinput.rooms:
        if room not in ROOM_CLASSES:
            raise ValueError(f"unknown room class {room!r}")
    for decor in tinput.decors:
        if decor not in decor_classes:
            raise ValueError(f"unknown decor label {decor!r}")
    attachments = tinput.attachments
    if attachments is None:
        attachments = [None] * len(tinput.decors)
    if len(attachments) != len(tinput.decors):
        raise ValueError(
            f"{len(attachments)} attachments for {len(tinput.decors)} decors"
        )
    present = set(tinput.rooms)
    for target in attachments:
        if target is not None and target not in present:
            raise ValueError(f"decor attached to absent room class {target!r}")
    return attachments


def _counted(items: list[str]) -> list[tuple[str, int]]:
    """(count desc, name asc) ordering over a multiset."""
    counts: dict[str, int] = {}
    for item in items:
        counts[item] = counts.get(item, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _join(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _display(name: str) -> str:
    return name.lower().replace("_", " ")


def _count_item(grammar: TemplateGrammar, name: str, count: int) -> str:
    shown = _display(name)
    if count != 1:
        shown = grammar.plural(shown)
    return f"{count} {shown}"


def _decor_list(grammar: TemplateGrammar, decors: list[str]) -> str:
    return _join([_count_item(grammar, name, count) for name, count in _counted(decors)])


def generate_template_description(tinput: TemplateInput, grammar: TemplateGrammar) -> str:
    attachments = _validate(tinput)
    if not tinput.rooms and not tinput.decors:
        return grammar.fallback

    by_room: dict[str, list[str]] = {}
    loose: list[str] = []
    for decor, target in zip(tinput.decors, attachments):
        if target is None:
            loose.append(decor)
        else:
            by_room.setdefault(target, []).append(decor)

    sentences: list[str] = []
    room_counts = _counted(tinput.rooms)
    if room_counts:
        items = [_count_item(grammar, name, count) for name, count in room_counts]
        sentences.append(grammar.opening.replace("{rooms}", _join(items)))
    for name, count in room_counts:
        decors = by_room.get(name)
        if not decors:
            continue
        decor_text = _decor_list(grammar, decors)
        if count == 1:
            sentence = grammar.room_one.replace("{room}", _display(name))
        else:
            sentence = grammar.room_many.replace(
                "{count:room}", _count_item(grammar, name, count)
            )
        sentences.append(sentence.replace("{decors}", decor_text))
    if loose:
        sentences.append(grammar.unattached.replace("{decors}", _decor_list(grammar, loose)))
    return " ".join(sentences)


def _center_inside(bbox, cx: float, cy: float) -> bool:
    return (
        bbox.x <= cx <= bbox.x + bbox.width
        and bbox.y <= cy <= bbox.y + bbox.height
    )


def template_input_from_record(record: FloorPlanRecord) -> TemplateInput:
    """Rooms from caption labels, decors from symbol boxes; a decor joins
    the first labeled room whose box contains its center."""
    room_boxes = record.room_labels()
    rooms = [name for _bbox, name in room_boxes]
    decor_classes = set(load_decor_classes())
    decors: list[str] = []
    attachments: list[str | None] = []
    for symbol in record.symbols:
        if symbol.label not in decor_classes:
            continue
        cx = symbol.bbox.x + symbol.bbox.width / 2.0
        cy = symbol.bbox.y + symbol.bbox.height / 2.0
        target = None
        for bbox, name in room_boxes:
            if _center_inside(bbox, cx, cy):
                target = name
                break
        decors.append(symbol.label)
        attachments.append(target)
    return TemplateInput(rooms=rooms, decors=decors, attachments=attachments)

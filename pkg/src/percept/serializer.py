"""Canonical text form of a perception program.

``serialize`` emits a deterministic, byte-stable YAML-like block: fixed key
order (modality, images, grid, items, relations), LF endings, 2-space
indent, integer coordinates, scalar readouts at 3 decimals (half-even),
relations sorted by (subject, object), absent fields omitted. ``parse``
accepts that form plus tolerant variations (extra whitespace, reordered
mapping keys, 1-6 decimal places, redacted readouts) and nothing else; it
never raises anything but ParseError on bad input.
"""

from __future__ import annotations

import json
import re
from dataclasses import replace

from .core import (
    Confidence,
    Direction,
    ImageDims,
    Interval,
    Item,
    NormBox,
    NormCoord,
    PerceptionProgram,
    Point,
    Relation,
    Score,
    validate_program,
)
from .errors import InvalidProgram, ParseError

MAX_DOCUMENT_BYTES = 4 * 1024 * 1024

_BARE_TOKEN = re.compile(r"[A-Za-z0-9_.\-]+(?: [A-Za-z0-9_.\-]+)*\Z")
_INT = re.compile(r"[+-]?\d+\Z")
_FLOAT = re.compile(r"[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

TOP_KEYS = ("modality", "images", "grid", "items", "relations")
BLOCK_KEYS = ("images", "items", "relations")


def quantize_readout(value: float) -> float:
    """Round to the serializer's 3-decimal fixed-point representation."""
    return float(f"{value:.3f}")


def quantize(pp: PerceptionProgram) -> PerceptionProgram:
    """Canonical in-memory form: 3-decimal readouts, sorted relations.

    ``parse(serialize(pp)) == quantize(pp)`` for every valid program.
    """
    items = []
    for it in pp.items:
        r = it.r
        if isinstance(r, Interval):
            r = Interval(quantize_readout(r.lo), quantize_readout(r.hi))
        elif isinstance(r, Score):
            r = Score(quantize_readout(r.value))
        elif isinstance(r, Confidence):
            r = Confidence(quantize_readout(r.value))
        items.append(replace(it, r=r))
    relations = tuple(sorted(pp.relations, key=lambda rel: (rel.subject, rel.obj)))
    return replace(pp, items=tuple(items), relations=relations)


# ---------------------------------------------------------------------------
# emission


def _token(s: str) -> str:
    if _BARE_TOKEN.fullmatch(s):
        return s
    return json.dumps(s)


def _fmt_readout(r) -> str:
    if isinstance(r, Interval):
        return f"[{r.lo:.3f}, {r.hi:.3f}]"
    if isinstance(r, Direction):
        return r.label
    if isinstance(r, Point):
        return f"[{r.at.x}, {r.at.y}]"
    if isinstance(r, (Score, Confidence)):
        return f"{r.value:.3f}"
    raise InvalidProgram(f"unknown readout type {type(r).__name__}")


def _fmt_location(c) -> str:
    if isinstance(c, NormCoord):
        return f"[{c.x}, {c.y}]"
    return f"[{c.x0}, {c.y0}, {c.x1}, {c.y1}]"


def serialize(pp: PerceptionProgram) -> str:
    """Emit the canonical text block; equal programs yield identical bytes."""
    problems = validate_program(pp)
    if problems:
        raise InvalidProgram("; ".join(problems))

    out = [f"modality: {pp.modality}", "images:"]
    for image_id, dims in pp.images:
        out.append(f"  - {{id: {_token(image_id)}, width: {dims.width}, height: {dims.height}}}")
    if pp.grid is not None:
        out.append(f"grid: {{rows: {pp.grid[0]}, cols: {pp.grid[1]}}}")
    if pp.items:
        out.append("items:")
        for it in pp.items:
            parts = [f"p: {_token(it.p)}", f"c: {_fmt_location(it.c)}"]
            if it.r is not None:
                parts.append(f"r: {_fmt_readout(it.r)}")
            if it.b is not None:
                parts.append(f"b: {_token(it.b)}")
            out.append("  - {" + ", ".join(parts) + "}")
    else:
        out.append("items: []")
    if pp.relations:
        out.append("relations:")
        for rel in sorted(pp.relations, key=lambda r: (r.subject, r.obj)):
            out.append(f"  - [{_token(rel.subject)}, {_token(rel.predicate)}, {_token(rel.obj)}]")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# parsing


class _Scalar(str):
    """Bare or quoted scalar token; ``quoted`` disables numeric coercion."""

    quoted = False


def _scalar(text: str, quoted: bool) -> _Scalar:
    s = _Scalar(text)
    s.quoted = quoted
    return s


class _FlowReader:
    """Single-line reader for the flow subset: {k: v, ...}, [v, ...], scalars."""

    def __init__(self, text: str, line_no: int):
        self.text = text
        self.pos = 0
        self.line = line_no

    def fail(self, message: str):
        raise ParseError(message, self.line, self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def value(self, depth: int = 0):
        if depth > 4:
            self.fail("nesting too deep")
        self.skip_ws()
        ch = self.peek()
        if ch == "{":
            return self.mapping(depth)
        if ch == "[":
            return self.list(depth)
        return self.scalar(stop_colon=False)

    def mapping(self, depth: int) -> dict:
        self.pos += 1  # consume {
        result = {}
        self.skip_ws()
        if self.peek() == "}":
            self.pos += 1
            return result
        while True:
            self.skip_ws()
            key = self.scalar(stop_colon=True)
            if key.quoted or not _KEY.fullmatch(key):
                self.fail(f"bad mapping key {str(key)!r}")
            self.skip_ws()
            if self.peek() != ":":
                self.fail("expected ':' after mapping key")
            self.pos += 1
            if key in result:
                self.fail(f"duplicate key {str(key)!r}")
            result[str(key)] = self.value(depth + 1)
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == "}":
                self.pos += 1
                return result
            self.fail("expected ',' or '}' in mapping")

    def list(self, depth: int) -> list:
        self.pos += 1  # consume [
        result = []
        self.skip_ws()
        if self.peek() == "]":
            self.pos += 1
            return result
        while True:
            result.append(self.value(depth + 1))
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == "]":
                self.pos += 1
                return result
            self.fail("expected ',' or ']' in list")

    def scalar(self, stop_colon: bool) -> _Scalar:
        self.skip_ws()
        if self.peek() == '"':
            return self.quoted_scalar()
        stops = ",}]" + (":" if stop_colon else "")
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in stops:
            if self.text[self.pos] in "{[":
                self.fail("unexpected opening bracket in scalar")
            self.pos += 1
        raw = self.text[start:self.pos].strip()
        if not raw:
            self.fail("empty scalar")
        return _scalar(raw, quoted=False)

    def quoted_scalar(self) -> _Scalar:
        start = self.pos
        self.pos += 1
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\":
                self.pos += 2
                continue
            if ch == '"':
                self.pos += 1
                raw = self.text[start:self.pos]
                try:
                    return _scalar(json.loads(raw), quoted=True)
                except (json.JSONDecodeError, UnicodeDecodeError):
                    self.fail("bad string escape")
            self.pos += 1
        self.fail("unterminated string")

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text) or self.text[self.pos] == "#"


def _read_flow(text: str, line_no: int):
    reader = _FlowReader(text, line_no)
    value = reader.value()
    if not reader.at_end():
        reader.fail("trailing characters after value")
    return value


def _as_count(value, what: str, line_no: int) -> int:
    if not isinstance(value, _Scalar) or value.quoted or not _INT.fullmatch(value):
        raise ParseError(f"{what} must be an integer", line_no)
    return int(value)


def _as_float(value, what: str, line_no: int) -> float:
    if not isinstance(value, _Scalar) or value.quoted or not _FLOAT.fullmatch(value):
        raise ParseError(f"{what} must be a number", line_no)
    return float(value)


def _as_string(value, what: str, line_no: int) -> str:
    if not isinstance(value, _Scalar):
        raise ParseError(f"{what} must be a scalar", line_no)
    return str(value)


def _coord_list(value, what: str, line_no: int) -> list[int]:
    if not isinstance(value, list):
        raise ParseError(f"{what} must be a list", line_no)
    return [_as_count(v, f"{what} component", line_no) for v in value]


def _parse_readout(value, modality: str, line_no: int):
    if modality == "points":
        raise ParseError("points items do not carry readouts", line_no)
    if modality == "depth":
        if not isinstance(value, list) or len(value) != 2:
            raise ParseError("depth readout must be [lo, hi]", line_no)
        return Interval(
            _as_float(value[0], "interval lo", line_no),
            _as_float(value[1], "interval hi", line_no),
        )
    if modality == "flow":
        return Direction(_as_string(value, "direction", line_no))
    if modality == "visual_correspondence":
        coords = _coord_list(value, "matched point", line_no)
        if len(coords) != 2:
            raise ParseError("matched point must be [x, y]", line_no)
        return Point(NormCoord(*coords))
    if modality == "detection":
        return Confidence(_as_float(value, "confidence", line_no))
    # jigsaw, semantic_correspondence
    return Score(_as_float(value, "score", line_no))


def _parse_item(value, modality: str, line_no: int) -> Item:
    if not isinstance(value, dict):
        raise ParseError("item entry must be a flow mapping", line_no)
    unknown = set(value) - {"p", "c", "r", "b"}
    if unknown:
        raise ParseError(f"unknown item field {sorted(unknown)[0]!r}", line_no)
    if "p" not in value or "c" not in value:
        raise ParseError("item needs at least p and c", line_no)
    coords = _coord_list(value["c"], "location", line_no)
    if len(coords) == 2:
        c = NormCoord(*coords)
    elif len(coords) == 4:
        c = NormBox(*coords)
    else:
        raise ParseError("location must have 2 or 4 components", line_no)
    r = _parse_readout(value["r"], modality, line_no) if "r" in value else None
    b = _as_string(value["b"], "label", line_no) if "b" in value else None
    return Item(p=_as_string(value["p"], "item id", line_no), c=c, r=r, b=b)


def _parse_relation(value, line_no: int) -> Relation:
    if not isinstance(value, list) or len(value) != 3:
        raise ParseError("relation must be [subject, predicate, object]", line_no)
    s, p, o = (_as_string(v, "relation part", line_no) for v in value)
    return Relation(s, p, o)


def _parse_image(value, line_no: int) -> tuple[str, ImageDims]:
    if not isinstance(value, dict):
        raise ParseError("image entry must be a flow mapping", line_no)
    if set(value) != {"id", "width", "height"}:
        raise ParseError("image entry needs exactly id, width, height", line_no)
    width = _as_count(value["width"], "width", line_no)
    height = _as_count(value["height"], "height", line_no)
    if width < 1 or height < 1:
        raise ParseError("image dims must be positive", line_no)
    return (_as_string(value["id"], "image id", line_no), ImageDims(width, height))


def parse(text: str | bytes, validate: bool = True) -> PerceptionProgram:
    """Parse a program text block; raises ParseError on any malformed input.

    With ``validate=False`` the document only has to be well-formed; the
    caller can then run ``validate_program`` itself to list violations.
    """
    if isinstance(text, bytes):
        if len(text) > MAX_DOCUMENT_BYTES:
            raise ParseError("document too large")
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8: {exc.reason}") from None
    if len(text) > MAX_DOCUMENT_BYTES:
        raise ParseError("document too large")

    sections: dict[str, object] = {}
    open_block: str | None = None
    open_entries: list | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line[0] in " \t":
            entry = line.strip()
            if open_block is None or not entry.startswith("-"):
                raise ParseError("unexpected indented line", line_no)
            open_entries.append((line_no, _read_flow(entry[1:], line_no)))
            continue

        open_block, open_entries = None, None
        match = re.match(r"([A-Za-z_][A-Za-z0-9_]*):(.*)\Z", line)
        if not match:
            raise ParseError("expected 'key: value'", line_no)
        key, rest = match.group(1), match.group(2).strip()
        if key not in TOP_KEYS:
            raise ParseError(f"unknown key {key!r}", line_no)
        if key in sections:
            raise ParseError(f"duplicate key {key!r}", line_no)

        if key in BLOCK_KEYS:
            if rest == "[]":
                sections[key] = []
            elif rest == "":
                sections[key] = []
                open_block, open_entries = key, sections[key]
            else:
                raise ParseError(f"{key} must be a block list", line_no)
        else:
            if rest == "":
                raise ParseError(f"{key} needs a value", line_no)
            sections[key] = (line_no, _read_flow(rest, line_no))

    if "modality" not in sections:
        raise ParseError("missing modality")
    mod_line, mod_value = sections["modality"]
    modality = _as_string(mod_value, "modality", mod_line)
    if modality not in ("depth", "flow", "visual_correspondence", "jigsaw",
                        "detection", "semantic_correspondence", "points"):
        raise ParseError(f"unknown modality {modality!r}", mod_line)

    try:
        images = tuple(
            _parse_image(value, n) for n, value in sections.get("images", [])
        )
        grid = None
        if "grid" in sections:
            grid_line, grid_value = sections["grid"]
            if not isinstance(grid_value, dict) or set(grid_value) != {"rows", "cols"}:
                raise ParseError("grid must be {rows: R, cols: C}", grid_line)
            grid = (
                _as_count(grid_value["rows"], "rows", grid_line),
                _as_count(grid_value["cols"], "cols", grid_line),
            )
        items = tuple(
            _parse_item(value, modality, n) for n, value in sections.get("items", [])
        )
        relations = tuple(
            _parse_relation(value, n) for n, value in sections.get("relations", [])
        )
        program = PerceptionProgram(
            modality=modality, images=images, grid=grid, items=items, relations=relations
        )
    except ParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc)) from None

    if validate:
        problems = validate_program(program)
        if problems:
            raise ParseError("invalid program: " + "; ".join(problems))
    return program

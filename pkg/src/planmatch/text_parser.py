"""Parser for the ASCII explain-plan tree format (``.exp`` files).

The accepted layout is the column-aligned tree a DB2-style explain formatter
prints: every operator is a five-line block (cardinality, [modifiers]TYPE,
``( n )`` anchor, cumulative cost, I/O cost), every base object a three-line
block (cardinality, NAME, correlation), and parents connect to children
through a single connector line drawn with ``/ \\ | + -``.  A block belongs
to whatever column span it overlaps; ties go to the nearest center, leftmost
first.  After the tree, optional ``Operator #N:`` blocks carry ``KEY = VALUE``
detail lines.

The text form can only express trees; plans with shared subplans (a TEMP
with several consumers) arrive through the canonical document format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import MalformedNumber, MalformedTree
from .model import BaseObject, Leg, ObjectKind, Plan, PlanOperator, StreamEdge
from .numeric import is_numeric_literal, parse_numeric_literal

_ANCHOR_RE = re.compile(r"\(\s*(\d+)\s*\)")
_DETAIL_HEADER_RE = re.compile(r"^Operator\s+#(\d+):\s*$")
_DETAIL_LINE_RE = re.compile(r"^\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_NAME_RE = re.compile(r"^[>^]*[A-Za-z_][A-Za-z0-9_.$#-]*$")
_CONNECTOR_CHARS = set("/\\|+-")

_MODIFIER_CHARS = (">", "^")

ANCHOR = "anchor"
NUMBER = "number"
NAME = "name"
CONNECTOR = "connector"


@dataclass
class _Token:
    line: int
    start: int
    end: int
    text: str
    kind: str
    consumed: bool = False

    @property
    def center(self) -> float:
        return (self.start + self.end - 1) / 2


@dataclass
class _Block:
    """One rendered node: either an operator or a base object."""

    center: float
    top: int
    bottom: int
    op_num: int | None = None
    op_type: str = ""
    modifiers: frozenset[str] = frozenset()
    name: str = ""
    cardinality: Decimal | None = None
    total_cost: Decimal | None = None
    io_cost: Decimal | None = None
    correlation: str | None = None
    children: list["_Block"] = field(default_factory=list)

    @property
    def is_operator(self) -> bool:
        return self.op_num is not None

    def ref(self) -> int | str:
        return self.op_num if self.is_operator else self.name


def parse_plan_text(text: str, plan_id: str = "plan", source_name: str = "") -> Plan:
    """Parse explain text into a Plan; raises MalformedTree / MalformedNumber."""
    lines = text.splitlines()
    tree_lines, detail_lines = _split_sections(lines)

    tokens = _tokenize(tree_lines)
    by_line: dict[int, list[_Token]] = {}
    for tok in tokens:
        by_line.setdefault(tok.line, []).append(tok)

    blocks = _extract_operator_blocks(tokens, by_line)
    if not blocks:
        raise MalformedTree("no operator anchors found")
    blocks += _extract_base_object_blocks(tokens, by_line)

    _check_leftovers(tokens)
    _connect(tokens, blocks)

    details = _parse_details(detail_lines)
    return _assemble(blocks, details, plan_id, source_name or plan_id)


def _split_sections(lines: list[str]) -> tuple[list[str], list[str]]:
    for i, line in enumerate(lines):
        if _DETAIL_HEADER_RE.match(line):
            return lines[:i], lines[i:]
    return lines, []


def _tokenize(lines: list[str]) -> list[_Token]:
    tokens: list[_Token] = []
    for lineno, line in enumerate(lines):
        taken = [False] * len(line)
        for m in _ANCHOR_RE.finditer(line):
            tokens.append(_Token(lineno, m.start(), m.end(), m.group(0), ANCHOR))
            for i in range(m.start(), m.end()):
                taken[i] = True
        for m in re.finditer(r"\S+", line):
            if any(taken[m.start():m.end()]):
                continue
            tokens.append(_Token(lineno, m.start(), m.end(), m.group(0), _classify(m.group(0), lineno)))
    return tokens


def _classify(text: str, lineno: int) -> str:
    if all(c in _CONNECTOR_CHARS for c in text):
        return CONNECTOR
    if is_numeric_literal(text) or text[0].isdigit() or text[0] in "+-":
        # number-shaped; the grammar check happens when the block claims it
        return NUMBER
    if _NAME_RE.match(text):
        return NAME
    raise MalformedTree(f"unrecognized token {text!r} on line {lineno + 1}")


def _neighbor(
    by_line: dict[int, list[_Token]],
    line: int,
    ref: _Token,
    kinds: tuple[str, ...],
) -> _Token | None:
    """The token on `line` occupying ref's column span: best overlap, else nearest center."""
    candidates = [t for t in by_line.get(line, []) if t.kind in kinds]
    if not candidates:
        return None
    overlapping = [
        t for t in candidates if t.start < ref.end and ref.start < t.end
    ]
    if overlapping:
        overlapping.sort(key=lambda t: (-(min(t.end, ref.end) - max(t.start, ref.start)), t.start))
        return overlapping[0]
    candidates.sort(key=lambda t: (abs(t.center - ref.center), t.start))
    return candidates[0]


def _claim(tok: _Token | None, what: str, anchor: _Token) -> _Token:
    if tok is None:
        raise MalformedTree(
            f"anchor {anchor.text} on line {anchor.line + 1} has no {what}"
        )
    if tok.consumed:
        raise MalformedTree(
            f"crossing column spans: {tok.text!r} on line {tok.line + 1} claimed twice"
        )
    tok.consumed = True
    return tok


def _number(tok: _Token):
    try:
        return parse_numeric_literal(tok.text)
    except MalformedNumber:
        raise MalformedNumber(f"line {tok.line + 1}: bad number {tok.text!r}")


def _extract_operator_blocks(tokens: list[_Token], by_line) -> list[_Block]:
    blocks: list[_Block] = []
    seen_nums: set[int] = set()
    for anchor in sorted(
        (t for t in tokens if t.kind == ANCHOR), key=lambda t: (t.line, t.start)
    ):
        anchor.consumed = True
        op_num = int(_ANCHOR_RE.match(anchor.text).group(1))
        if op_num in seen_nums:
            raise MalformedTree(f"duplicate operator number {op_num}")
        seen_nums.add(op_num)

        type_tok = _claim(_neighbor(by_line, anchor.line - 1, anchor, (NAME,)), "type", anchor)
        card_tok = _claim(_neighbor(by_line, anchor.line - 2, anchor, (NUMBER,)), "cardinality", anchor)
        total_tok = _claim(_neighbor(by_line, anchor.line + 1, anchor, (NUMBER,)), "total cost", anchor)
        io_tok = _claim(_neighbor(by_line, anchor.line + 2, anchor, (NUMBER,)), "io cost", anchor)

        raw_type = type_tok.text
        modifiers = set()
        while raw_type and raw_type[0] in _MODIFIER_CHARS:
            modifiers.add(raw_type[0])
            raw_type = raw_type[1:]
        if not raw_type:
            raise MalformedTree(f"operator {op_num} has an empty type")

        blocks.append(
            _Block(
                center=type_tok.center,
                top=anchor.line - 2,
                bottom=anchor.line + 2,
                op_num=op_num,
                op_type=raw_type,
                modifiers=frozenset(modifiers),
                cardinality=_number(card_tok),
                total_cost=_number(total_tok),
                io_cost=_number(io_tok),
            )
        )
    return blocks


def _extract_base_object_blocks(tokens: list[_Token], by_line) -> list[_Block]:
    blocks: list[_Block] = []
    for name_tok in sorted(
        (t for t in tokens if t.kind == NAME and not t.consumed),
        key=lambda t: (t.line, t.start),
    ):
        if name_tok.consumed:  # claimed as a correlation meanwhile
            continue
        name_tok.consumed = True
        card_tok = _claim(
            _neighbor(by_line, name_tok.line - 1, name_tok, (NUMBER,)),
            "cardinality",
            name_tok,
        )
        bottom = name_tok.line
        correlation = None
        corr_tok = _neighbor(by_line, name_tok.line + 1, name_tok, (NAME,))
        if corr_tok is not None and not corr_tok.consumed:
            # correlation must actually sit under the name, not merely be nearest
            if corr_tok.start < name_tok.end and name_tok.start < corr_tok.end:
                corr_tok.consumed = True
                correlation = corr_tok.text
                bottom = corr_tok.line
        blocks.append(
            _Block(
                center=name_tok.center,
                top=name_tok.line - 1,
                bottom=bottom,
                name=name_tok.text,
                cardinality=_number(card_tok),
                correlation=correlation,
            )
        )
    return blocks


def _check_leftovers(tokens: list[_Token]) -> None:
    for tok in tokens:
        if not tok.consumed and tok.kind != CONNECTOR:
            raise MalformedTree(
                f"unattached token {tok.text!r} on line {tok.line + 1}"
            )


def _connect(tokens: list[_Token], blocks: list[_Block]) -> None:
    by_bottom: dict[int, list[_Block]] = {}
    by_top: dict[int, list[_Block]] = {}
    for b in blocks:
        by_bottom.setdefault(b.bottom, []).append(b)
        by_top.setdefault(b.top, []).append(b)

    for conn in (t for t in tokens if t.kind == CONNECTOR):
        child_cols = [conn.start + i for i, c in enumerate(conn.text) if c in "/\\|"]
        plus_cols = [conn.start + i for i, c in enumerate(conn.text) if c == "+"]
        if not child_cols:
            raise MalformedTree(
                f"connector on line {conn.line + 1} has no attachment points"
            )
        parent_col = plus_cols[0] if plus_cols else (
            child_cols[0] if len(child_cols) == 1 else (conn.start + conn.end - 1) / 2
        )

        parents = [b for b in by_bottom.get(conn.line - 1, []) if b.is_operator]
        if not parents:
            raise MalformedTree(
                f"connector on line {conn.line + 1} leads to no parent anchor"
            )
        parent = min(parents, key=lambda b: (abs(b.center - parent_col), b.center))

        kids = by_top.get(conn.line + 1, [])
        if not kids:
            raise MalformedTree(
                f"connector on line {conn.line + 1} leads to no child block"
            )
        for col in child_cols:
            child = min(kids, key=lambda b: (abs(b.center - col), b.center))
            if child in parent.children:
                raise MalformedTree(
                    f"connector on line {conn.line + 1} attaches {child.ref()!r} twice"
                )
            parent.children.append(child)


def _parse_details(lines: list[str]) -> dict[int, dict[str, str]]:
    details: dict[int, dict[str, str]] = {}
    current: dict[str, str] | None = None
    for lineno, line in enumerate(lines):
        if not line.strip():
            continue
        header = _DETAIL_HEADER_RE.match(line)
        if header:
            op_num = int(header.group(1))
            if op_num in details:
                raise MalformedTree(f"duplicate detail block for operator {op_num}")
            current = details.setdefault(op_num, {})
            continue
        entry = _DETAIL_LINE_RE.match(line)
        if entry and current is not None:
            key, value = entry.group(1), entry.group(2)
            if key in current:
                raise MalformedTree(f"duplicate detail key {key!r}")
            current[key] = value
            continue
        raise MalformedTree(f"unparseable detail line: {line.strip()!r}")
    return details


def _assemble(
    blocks: list[_Block],
    details: dict[int, dict[str, str]],
    plan_id: str,
    source_name: str,
) -> Plan:
    operators = []
    op_blocks = {b.op_num: b for b in blocks if b.is_operator}

    for op_num in details:
        if op_num not in op_blocks:
            raise MalformedTree(f"detail block references unknown operator {op_num}")

    for block in sorted(op_blocks.values(), key=lambda b: b.op_num):
        operators.append(
            PlanOperator(
                op_num=block.op_num,
                op_type=block.op_type,
                cardinality=block.cardinality,
                total_cost=block.total_cost,
                io_cost=block.io_cost,
                modifiers=block.modifiers,
                details=dict(details.get(block.op_num, {})),
            )
        )

    # Base objects deduplicate by name: two scans of one table share the
    # resource (and the first block's cardinality/correlation) but keep
    # distinct streams.
    objects: dict[str, _Block] = {}
    for block in blocks:
        if not block.is_operator and block.name not in objects:
            objects[block.name] = block

    streams: list[StreamEdge] = []
    index_parents: set[str] = set()
    for block in op_blocks.values():
        kids = sorted(block.children, key=lambda b: b.center)
        join_legs = (
            [Leg.OUTER, Leg.INNER]
            if block.op_type.endswith("JOIN") and len(kids) == 2
            else [Leg.GENERIC] * len(kids)
        )
        for ordinal, (kid, leg) in enumerate(zip(kids, join_legs)):
            streams.append(StreamEdge(block.op_num, kid.ref(), leg, ordinal))
            if not kid.is_operator and block.op_type == "IXSCAN":
                index_parents.add(kid.name)

    base_objects = [
        BaseObject(
            name=b.name,
            cardinality=b.cardinality,
            correlation=b.correlation,
            kind=ObjectKind.INDEX if b.name in index_parents else ObjectKind.TABLE,
        )
        for b in sorted(objects.values(), key=lambda b: b.name)
    ]

    return Plan(
        plan_id=plan_id,
        operators=tuple(operators),
        base_objects=tuple(base_objects),
        streams=tuple(sorted(streams, key=lambda e: (e.parent, e.ordinal))),
        source_name=source_name,
    )

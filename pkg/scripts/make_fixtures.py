#!/usr/bin/env python3
"""Regenerate the explain-text fixtures under src/planmatch/data/fixtures/.

Each fixture is defined here as a literal tree (keeping the exact numeric
spellings we want the parser exercised on) and rendered to the column-aligned
layout the text parser accepts.  Run from the repo root:

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from planmatch.canonical import dumps_canonical  # noqa: E402
from planmatch.text_parser import parse_plan_text  # noqa: E402

GAP = 4


class Node:
    def __init__(self, lines, children=()):
        self.lines = lines
        self.children = list(children)
        self.width = 0
        self.center = 0.0

    def own_width(self):
        return max(len(l) for l in self.lines)


def op(num, typ, card, total, io, children=()):
    return Node([card, typ, f"( {num})", total, io], children)


def base(name, card, corr=None):
    lines = [card, name] + ([corr] if corr else [])
    return Node(lines)


def measure(node: Node) -> int:
    if not node.children:
        node.width = node.own_width()
        return node.width
    kids = sum(measure(c) for c in node.children) + GAP * (len(node.children) - 1)
    node.width = max(node.own_width(), kids)
    return node.width


def place(node: Node, left: float) -> None:
    if not node.children:
        node.center = left + node.width / 2
        return
    kids_width = sum(c.width for c in node.children) + GAP * (len(node.children) - 1)
    child_left = left + (node.width - kids_width) / 2
    for child in node.children:
        place(child, child_left)
        child_left += child.width + GAP
    node.center = (node.children[0].center + node.children[-1].center) / 2


class Grid:
    def __init__(self):
        self.rows: dict[int, dict[int, str]] = {}

    def put(self, row: int, col: int, text: str) -> None:
        line = self.rows.setdefault(row, {})
        for i, ch in enumerate(text):
            line[col + i] = ch

    def render(self) -> str:
        out = []
        for row in range(max(self.rows) + 1):
            cells = self.rows.get(row, {})
            if not cells:
                out.append("")
                continue
            line = [" "] * (max(cells) + 1)
            for col, ch in cells.items():
                line[col] = ch
            out.append("".join(line).rstrip())
        return "\n".join(out) + "\n"


def paint(node: Node, top: int, grid: Grid) -> None:
    for i, text in enumerate(node.lines):
        grid.put(top + i, round(node.center - len(text) / 2), text)
    if not node.children:
        return
    conn_row = top + len(node.lines)
    if len(node.children) == 1:
        child = node.children[0]
        grid.put(conn_row, round(child.center), "|")
    else:
        first = round(node.children[0].center)
        last = round(node.children[-1].center)
        grid.put(conn_row, first, "/" + "-" * (last - first - 1) + "\\")
        grid.put(conn_row, round(node.center), "+")
    for child in node.children:
        paint(child, conn_row + 1, grid)


def render(root: Node, details: dict[int, dict[str, str]] | None = None) -> str:
    measure(root)
    place(root, 0)
    grid = Grid()
    paint(root, 0, grid)
    text = grid.render()
    if details:
        text += "\n"
        for num in sorted(details):
            text += f"Operator #{num}:\n"
            for key, value in details[num].items():
                text += f"    {key} = {value}\n"
    return text


# --- Figure 1: NLJOIN over FETCH/IXSCAN and TBSCAN -------------------------

FIG1 = op(
    2, "NLJOIN", "19860.9", "16246.59", "4909.624",
    [
        op(
            3, "FETCH", "19.12", "26.0884", "2.624",
            [
                op(4, "IXSCAN", "19.12", "11708.7", "5250",
                   [base("IDX1", "9.18948e+07", "Q2")]),
                base("SALES_FACT", "1228", "Q2"),
            ],
        ),
        op(5, "TBSCAN", "4043", "15771", "4907",
           [base("CUST_DIM", "812130", "Q1")]),
    ],
)

FIG1_DETAILS = {
    2: {
        "INPUT_COLUMNS": "Q1.CUST_ID, Q1.CUST_NAME, Q2.CUST_KEY",
        "PREDICATE": "Q2.CUST_KEY = Q1.CUST_ID",
        "PREDICATE_COLUMNS": "Q1.CUST_ID, Q2.CUST_KEY",
    },
    5: {
        "PREDICATE": "Q1.CUST_ID = Q2.CUST_KEY",
        "PREDICATE_COLUMNS": "Q1.CUST_ID",
    },
}

# --- Figure 7: left-outer joins under both legs of the top join ------------
# The paper shows a snippet; operators 8, 9, 16 and 17 plus their base
# objects complete it into a valid plan without adding any join-order,
# scan-estimation or sort pattern beyond the intended one.

FIG7 = op(
    5, "NLJOIN", "0.157686", "644901", "751020",
    [
        op(
            6, "^HSJOIN", "8.78417e+06", "633711", "750436",
            [
                op(
                    7, ">HSJOIN", "8.78417e+06", "561520", "664808",
                    [
                        op(8, "TBSCAN", "5.99144e+06", "268263", "319564",
                           [base("TELEPHONE_DETAIL", "5.99144e+06", "Q1")]),
                        op(9, "TBSCAN", "84211", "9213.4", "11027",
                           [base("ACCOUNT_HIST", "84211", "Q3")]),
                    ],
                ),
                op(12, "TBSCAN", "5.99144e+06", "68023.4", "85628",
                   [base("CALL_SUMMARY", "5.99144e+06", "Q2")]),
            ],
        ),
        op(
            13, "TBSCAN", "1.79511e-08", "2267.08", "583.334",
            [
                op(
                    14, "TEMP", "0.174681", "2267.07", "583.334",
                    [
                        op(
                            15, ">NLJOIN", "0.174681", "2267.07", "583.334",
                            [
                                op(16, "TBSCAN", "1", "75.1074", "13",
                                   [base("SMALL_DIM", "42", "Q4")]),
                                op(17, "IXSCAN", "0.174681", "50.2145", "7",
                                   [base("IDX2", "120000", "Q5")]),
                            ],
                        ),
                    ],
                ),
            ],
        ),
    ],
)

# --- Figure 8: under-estimated index scan -----------------------------------

FIG8 = op(38, "IXSCAN", "1.311e-08", "16.9825", "3",
          [base("IDX9", "2.55276e+08", "Q21")])

FIG8_DETAILS = {
    38: {
        "PREDICATE": "Q21.ACCT_ID = ? AND Q21.TXN_DATE = ?",
        "PREDICATE_COLUMNS": "Q21.ACCT_ID, Q21.TXN_DATE",
    },
}


def main() -> None:
    out_dir = pathlib.Path(__file__).resolve().parents[1] / "src/planmatch/data/fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)

    for name, tree, details in (
        ("fig1", FIG1, FIG1_DETAILS),
        ("fig7", FIG7, None),
        ("fig8", FIG8, FIG8_DETAILS),
    ):
        text = render(tree, details)
        (out_dir / f"{name}.exp").write_text(text)
        plan = parse_plan_text(text, plan_id=name, source_name=f"{name}.exp")
        print(f"{name}.exp: {len(plan.operators)} operators, "
              f"{len(plan.base_objects)} base objects, {len(plan.streams)} streams")

    fig1_plan = parse_plan_text((out_dir / "fig1.exp").read_text(),
                                plan_id="fig1", source_name="fig1.exp")
    (out_dir / "fig1.plan.json").write_text(dumps_canonical(fig1_plan))
    print("fig1.plan.json written")


if __name__ == "__main__":
    main()

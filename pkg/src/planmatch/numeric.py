"""Exact decimal parsing and rendering for plan costs and cardinalities.

Explain files write the same value either in plain decimal form or with an
exponent ("0.001" vs "1e-3"); both must compare equal, which rules out binary
floats anywhere a comparison or an equality assertion happens.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

from .errors import MalformedNumber

_NUMBER_RE = re.compile(r"[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_NUMBER_FULL_RE = re.compile(rf"^{_NUMBER_RE.pattern}$")


def is_numeric_literal(s: str) -> bool:
    return bool(_NUMBER_FULL_RE.match(s))


def parse_numeric_literal(s: str) -> Decimal:
    """Parse ``sign? digits ('.' digits)? ([eE] sign? digits)?`` exactly.

    Raises MalformedNumber for anything outside that grammar (including
    inf/nan spellings that Decimal itself would accept).
    """
    if not isinstance(s, str) or not _NUMBER_FULL_RE.match(s):
        raise MalformedNumber(f"not a numeric literal: {s!r}")
    try:
        return Decimal(s)
    except InvalidOperation:  # pragma: no cover - grammar already excludes this
        raise MalformedNumber(f"not a numeric literal: {s!r}")


def format_decimal(d: Decimal) -> str:
    """Canonical shortest text for a decimal value.

    Emits whichever of the plain and exponent spellings is shorter (plain wins
    ties), with trailing zeros stripped, so equal values always render to the
    same bytes and every rendering re-parses to the original value.
    """
    if d == 0:
        return "0"
    sign, digits, exponent = d.as_tuple()
    text = "".join(str(x) for x in digits).rstrip("0")
    exponent += len(digits) - len(text)
    prefix = "-" if sign else ""

    # plain spelling
    if exponent >= 0:
        plain = text + "0" * exponent
    else:
        point = len(text) + exponent
        if point > 0:
            plain = text[:point] + "." + text[point:]
        else:
            plain = "0." + "0" * (-point) + text

    # exponent spelling normalised to one digit before the point
    sci_exp = exponent + len(text) - 1
    mantissa = text[0] + ("." + text[1:] if len(text) > 1 else "")
    sci = f"{mantissa}e{sci_exp}"

    best = plain if len(plain) <= len(sci) else sci
    return prefix + best

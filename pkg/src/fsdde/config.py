"""Parser for the line-oriented system file.

    # comment
    delay=1.0
    dim=1
    drift=linear a=0 b=1 c=0
    diffusion=const c=0.5

Coefficient kinds and their keys (all optional unless noted):

    const   c
    linear  a b c
    point   u (required)
    tanh    s a b c

``c`` may be a comma-separated vector with one entry per state component.
"""

from __future__ import annotations

import math

from .sdde import CoefficientFunctional, DelaySystem

__all__ = ["ParseError", "parse_system_file", "load_system"]

_KINDS = {
    "const": ({"c"}, set()),
    "linear": ({"a", "b", "c"}, set()),
    "point": ({"u"}, {"u"}),
    "tanh": ({"s", "a", "b", "c"}, set()),
}


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _number(text: str, line: int, key: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(line, f"value of {key!r} is not a number: {text!r}") from None
    if not math.isfinite(x):
        raise ParseError(line, f"value of {key!r} must be finite, got {text!r}")
    return x


def _coefficient(spec: str, line: int) -> tuple[CoefficientFunctional, int | None]:
    words = spec.split()
    if not words:
        raise ParseError(line, "missing coefficient kind")
    kind, *pairs = words
    if kind not in _KINDS:
        raise ParseError(line, f"unknown coefficient kind {kind!r}; expected one of {', '.join(_KINDS)}")
    allowed, required = _KINDS[kind]
    args: dict[str, object] = {}
    width = None
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not raw:
            raise ParseError(line, f"expected key=value, got {pair!r}")
        if key not in allowed:
            raise ParseError(line, f"unknown key {key!r} for kind {kind!r}")
        if key in args:
            raise ParseError(line, f"duplicate key {key!r}")
        if key == "c" and "," in raw:
            vec = tuple(_number(p, line, key) for p in raw.split(","))
            width = len(vec)
            args[key] = vec
        else:
            args[key] = _number(raw, line, key)
    missing = required - args.keys()
    if missing:
        raise ParseError(line, f"kind {kind!r} needs key(s) {', '.join(sorted(missing))}")
    try:
        if kind == "const":
            coeff = CoefficientFunctional.const(args.get("c", 0.0))
        elif kind == "linear":
            coeff = CoefficientFunctional.linear(args.get("a", 0.0), args.get("b", 0.0), args.get("c", 0.0))
        elif kind == "point":
            coeff = CoefficientFunctional.point(args["u"])
        else:
            coeff = CoefficientFunctional.bounded_smooth(
                args.get("s", 1.0), args.get("a", 0.0), args.get("b", 0.0), args.get("c", 0.0)
            )
    except ValueError as exc:
        raise ParseError(line, str(exc)) from None
    return coeff, width


def parse_system_file(text: str) -> DelaySystem:
    """Build a :class:`DelaySystem`; errors carry the offending line number."""
    fields: dict[str, tuple[int, str]] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key = key.strip()
        if not sep:
            raise ParseError(no, f"expected key=value, got {body!r}")
        if key not in ("delay", "dim", "drift", "diffusion"):
            raise ParseError(no, f"unknown key {key!r}")
        if key in fields:
            raise ParseError(no, f"{key!r} given twice (first on line {fields[key][0]})")
        fields[key] = (no, value.strip())

    last = len(text.splitlines()) or 1
    for key in ("delay", "drift", "diffusion"):
        if key not in fields:
            raise ParseError(last, f"missing required key {key!r}")

    no, raw = fields["delay"]
    delay = _number(raw, no, "delay")
    if delay <= 0:
        raise ParseError(no, f"delay must be positive, got {raw}")
    dim = 1
    if "dim" in fields:
        no, raw = fields["dim"]
        try:
            dim = int(raw)
        except ValueError:
            raise ParseError(no, f"dim must be an integer, got {raw!r}") from None
        if dim < 1:
            raise ParseError(no, f"dim must be >= 1, got {dim}")

    coeffs = {}
    for key in ("drift", "diffusion"):
        no, raw = fields[key]
        coeff, width = _coefficient(raw, no)
        if width is not None and width != dim:
            raise ParseError(no, f"{key} offset has {width} components, dim is {dim}")
        coeffs[key] = (no, coeff)
    try:
        return DelaySystem(delay, dim, coeffs["drift"][1], coeffs["diffusion"][1])
    except ValueError as exc:
        bad = next((no for no, c in coeffs.values() if c.kind.value == "point" and not -delay <= c.u0 <= 0),
                   fields["delay"][0])
        raise ParseError(bad, str(exc)) from None


def load_system(path) -> DelaySystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system_file(fh.read())

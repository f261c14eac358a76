"""Flat ``key = value`` text used for configs, trace sidecars and reports."""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple, Union

Scalar = Union[int, float, str, bool]


def format_value(v: Scalar) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(text: str) -> Scalar:
    """Best-effort typed parse: int, then float, then bool, else string."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def dumps(items: Union[Mapping[str, Scalar], Iterable[Tuple[str, Scalar]]]) -> str:
    pairs = items.items() if isinstance(items, Mapping) else items
    return "".join(f"{k} = {format_value(v)}\n" for k, v in pairs)


def loads(text: str) -> Dict[str, str]:
    """Parse to raw strings; blank lines and ``#`` comments are skipped."""
    out: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out

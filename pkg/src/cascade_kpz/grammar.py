"""Call-style spec strings such as ``cantor(keep=[0,3])``.

The syntax is a subset of Python expressions, so parsing goes through
``ast`` and only literals, bare names and nested calls are accepted.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class Call:
    name: str
    args: list
    kwargs: dict


def _convert(node, text):
    if isinstance(node, ast.Name):
        return Call(node.id, [], {})
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            raise ConfigError(f"unsupported callee in {text!r}")
        args = [_convert(a, text) for a in node.args]
        kwargs = {}
        for kw in node.keywords:
            if kw.arg is None:
                raise ConfigError(f"'**' is not allowed in {text!r}")
            kwargs[kw.arg] = _convert(kw.value, text)
        return Call(node.func.id, args, kwargs)
    try:
        return ast.literal_eval(node)
    except ValueError as exc:
        raise ConfigError(f"unsupported expression in {text!r}") from exc


def parse_call(text: str, field: str | None = None) -> Call:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc.msg}", field=field) from exc
    out = _convert(tree.body, text)
    if not isinstance(out, Call):
        raise ConfigError(f"expected a name or call, got {text!r}", field=field)
    return out


def number(value, what: str, field: str | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}", field=field)
    return float(value)

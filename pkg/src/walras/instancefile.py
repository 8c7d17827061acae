"""Instance files and run configuration.

An instance file is JSON:

    {
      "name": "...",                       optional
      "m": 3,
      "epsilon": "1/8",                    optional binding, see below
      "players": [{"valuation": {...}}, ...],
      "metadata": {...}                    optional, scenario extras
    }

Valuation JSON follows the schema in :mod:`walras.valuations`.  Numeric
fields may additionally be small expressions in ``eps`` ("2-2*eps"), which
are evaluated exactly against the file's epsilon binding (or an override):
that keeps parametric fixtures honest when the parameter moves.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .analysis import Instance
from .bundles import MAX_ITEMS
from .mechanisms import PaymentRule
from .money import Money, parse_money
from .valuations import valuation_from_json, valuation_to_json
from .welfare import BidProfile


class InstanceFormatError(ValueError):
    pass


# -- tiny expression evaluator --------------------------------------------------

def eval_money_expr(text, eps: Fraction | None = None) -> Fraction:
    """Evaluate ``+ - * /`` over exact literals and the symbol ``eps``.

    >>> eval_money_expr("2-2*eps", Fraction(1, 8))
    Fraction(7, 4)
    """
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InstanceFormatError(f"expected a number or expression, got {text!r}")
    tokens = _tokenize(text)
    value, pos = _parse_sum(tokens, 0, eps)
    if pos != len(tokens):
        raise InstanceFormatError(f"trailing junk in expression {text!r}")
    return value


def _tokenize(text: str) -> list[str]:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "+-*/()":
            out.append(c)
            i += 1
        elif c.isdigit() or c == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] == "."):
                j += 1
            out.append(text[i:j])
            i = j
        elif c.isalpha():
            j = i
            while j < len(text) and text[j].isalpha():
                j += 1
            out.append(text[i:j])
            i = j
        else:
            raise InstanceFormatError(f"bad character {c!r} in expression {text!r}")
    return out


def _parse_sum(tokens, pos, eps):
    value, pos = _parse_product(tokens, pos, eps)
    while pos < len(tokens) and tokens[pos] in "+-":
        op = tokens[pos]
        rhs, pos = _parse_product(tokens, pos + 1, eps)
        value = value + rhs if op == "+" else value - rhs
    return value, pos


def _parse_product(tokens, pos, eps):
    value, pos = _parse_atom(tokens, pos, eps)
    while pos < len(tokens) and tokens[pos] in "*/":
        op = tokens[pos]
        rhs, pos = _parse_atom(tokens, pos + 1, eps)
        if op == "/" and rhs == 0:
            raise InstanceFormatError("division by zero in expression")
        value = value * rhs if op == "*" else value / rhs
    return value, pos


def _parse_atom(tokens, pos, eps):
    if pos >= len(tokens):
        raise InstanceFormatError("unexpected end of expression")
    tok = tokens[pos]
    if tok == "-":
        value, pos = _parse_atom(tokens, pos + 1, eps)
        return -value, pos
    if tok == "(":
        value, pos = _parse_sum(tokens, pos + 1, eps)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise InstanceFormatError("unbalanced parentheses")
        return value, pos + 1
    if tok == "eps":
        if eps is None:
            raise InstanceFormatError("expression uses 'eps' but the file binds "
                                      "no epsilon")
        return eps, pos + 1
    try:
        return Fraction(tok), pos + 1
    except ValueError:
        raise InstanceFormatError(f"bad token {tok!r} in expression") from None


# -- instance files --------------------------------------------------------------

def instance_from_dict(data: dict, *, epsilon=None) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance file must hold a JSON object")
    try:
        m = data["m"]
        players = data["players"]
    except KeyError as exc:
        raise InstanceFormatError(f"instance file missing field {exc}") from exc
    if not isinstance(m, int) or not 1 <= m <= MAX_ITEMS:
        raise InstanceFormatError(f"m must be an integer in 1..{MAX_ITEMS}")
    eps = None
    if epsilon is not None:
        eps = parse_money(epsilon)
    elif "epsilon" in data:
        eps = eval_money_expr(data["epsilon"])

    def number(x):
        value = eval_money_expr(x, eps)
        return value

    bids = []
    for k, entry in enumerate(players):
        try:
            payload = entry["valuation"]
        except (TypeError, KeyError):
            raise InstanceFormatError(f"player {k} needs a 'valuation' object")
        try:
            v = valuation_from_json(payload, number=number)
        except ValueError as exc:
            raise InstanceFormatError(f"player {k}: {exc}") from exc
        if v.m != m:
            raise InstanceFormatError(f"player {k} is over {v.m} items, "
                                      f"file says m={m}")
        bids.append(v)
    if not bids:
        raise InstanceFormatError("instance file needs at least one player")
    return Instance(m, BidProfile(m, tuple(bids)), name=data.get("name", ""))


def load_instance(path, *, epsilon=None) -> Instance:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(data, epsilon=epsilon)


def load_metadata(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return data.get("metadata", {})


def instance_to_dict(instance: Instance) -> dict:
    out = {"m": instance.m,
           "players": [{"valuation": valuation_to_json(b)}
                       for b in instance.true_valuations.bids]}
    if instance.name:
        out["name"] = instance.name
    return out


# -- fixtures --------------------------------------------------------------------

FIXTURES_ENV = "WALRAS_FIXTURES"


def fixture_path(name: str) -> Path:
    """Locate a shipped fixture; WALRAS_FIXTURES overrides the package data."""
    override = os.environ.get(FIXTURES_ENV)
    if override:
        candidate = Path(override) / name
        if not candidate.exists():
            raise FileNotFoundError(f"fixture {name} not found under "
                                    f"{FIXTURES_ENV}={override}")
        return candidate
    ref = resources.files("walras") / "fixtures" / name
    with resources.as_file(ref) as concrete:
        return Path(concrete)


def load_fixture(name: str, *, epsilon=None) -> Instance:
    return load_instance(fixture_path(name), epsilon=epsilon)


# -- run configuration -----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    rule: PaymentRule = PaymentRule.ENGLISH
    gamma: Money = Fraction(0)
    grid_delta: Money | None = None
    grid_cap: Money | None = None
    eps_dev: Money = Fraction(0)
    seed: int = 0
    jobs: int = 1
    fmt: str = "json"

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            rule=PaymentRule(args.rule) if getattr(args, "rule", None) else PaymentRule.ENGLISH,
            gamma=parse_money(args.gamma) if getattr(args, "gamma", None) else Fraction(0),
            grid_delta=parse_money(args.grid_delta) if getattr(args, "grid_delta", None) else None,
            grid_cap=parse_money(args.grid_cap) if getattr(args, "grid_cap", None) else None,
            eps_dev=parse_money(args.eps_dev) if getattr(args, "eps_dev", None) else Fraction(0),
            seed=getattr(args, "seed", 0) or 0,
            jobs=getattr(args, "jobs", 1) or 1,
            fmt=getattr(args, "format", "json") or "json",
        )

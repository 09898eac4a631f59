"""Run configuration and construction of fields from expressions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from ..currents import BoxChain, ChainTerm
from ..geometry import BoxDomain, parse_bounds
from ..holder import ScalarField, estimate_holder_constant, estimate_sup
from .expr import ExprError, compile_expr, free_variables, known_metadata, parse_field_expr


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit status 2)."""


@dataclass
class RunConfig:
    """Everything a command needs; ``extras`` holds command-specific options.

    ``holder_f``/``holder_g`` are declared Hölder bounds. Missing bounds are
    estimated by sampling and the resulting fields are labelled
    ``"estimated"``, which disables certified stopping.
    """

    command: str
    dim: int = 1
    domain: str = "0,1"
    f: str | None = None
    g: list[str] = field(default_factory=list)
    alpha: float | None = None
    beta: list[float] = field(default_factory=list)
    holder_f: float | None = None
    holder_g: list[float] = field(default_factory=list)
    tol: float | None = None
    k_max: int | None = None
    workers: int = 1
    output: str | None = None
    format: str = "json"
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def box(self) -> BoxDomain:
        try:
            box = parse_bounds(self.domain)
        except ValueError as exc:
            raise ConfigError(f"bad domain {self.domain!r}: {exc}") from None
        if box.dim != self.dim:
            raise ConfigError(f"domain has {box.dim} axes but dim is {self.dim}")
        return box

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if self.tol is not None and self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.k_max is not None and self.k_max < 0:
            raise ConfigError("k-max must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")


def build_field(text: str, dim: int, box: BoxDomain, exponent: float | None = None,
                holder_bound: float | None = None, name: str = "") -> ScalarField:
    """Parse ``text`` and attach Hölder data.

    Declared values win; otherwise values implied by the expression (constants,
    coordinates, builtins) are used; otherwise the exponent defaults to 1 and
    the constant is estimated, labelling the field ``"estimated"``.
    """
    try:
        node = parse_field_expr(text)
        func = compile_expr(node, dim)
        bad = [i for i in free_variables(node) if i >= dim]
        if bad:
            raise ExprError(f"variable x{bad[0] + 1} exceeds dimension {dim}", 0)
        meta = known_metadata(node, dim)
    except ExprError as exc:
        raise ConfigError(f"in expression {text!r}: {exc}") from None
    label = "declared"
    sup = None
    if meta is not None:
        m_exp, m_bound, sup = meta
        if exponent is None:
            exponent = m_exp
        if holder_bound is None and exponent == m_exp:
            holder_bound = m_bound
    if exponent is None:
        exponent = 1.0
    if not 0.0 < exponent <= 1.0:
        raise ConfigError(f"exponent {exponent} outside (0, 1]")
    if holder_bound is None:
        holder_bound = estimate_holder_constant(func, box, exponent)
        label = "estimated"
    if sup is None:
        sup = estimate_sup(func, box)
    return ScalarField(func, dim, exponent, holder_bound, sup, None, label, name=name or text)


def parse_range(text: str) -> list[int]:
    """``"1..6"`` or ``"1,3,5"`` or ``"4"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad integer range {text!r}") from None


def parse_floats(text: str | None) -> list[float]:
    if text is None or text == "":
        return []
    try:
        return [float(v) for v in str(text).split(",")]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_chain(text: str, dim: int):
    """``"bounds[:weight]|bounds[:weight]|..."`` with bounds as for ``--domain``."""
    terms = []
    for part in text.split("|"):
        part = part.strip()
        if not part:
            continue
        bounds, _, weight = part.partition(":")
        try:
            box = parse_bounds(bounds)
            w = float(weight) if weight else 1.0
        except ValueError as exc:
            raise ConfigError(f"bad chain term {part!r}: {exc}") from None
        if box.dim != dim:
            raise ConfigError(f"chain box {bounds!r} is not {dim}-dimensional")
        terms.append(ChainTerm(box, w))
    if not terms:
        raise ConfigError("empty chain")
    return BoxChain(dim, tuple(terms))

"""Scenario files.

A scenario is UTF-8 text with one ``key = value`` pair per line. ``#`` starts a
comment line; blank lines are ignored. Values are one of

* a double-quoted string (no escapes) -- required for the time expressions
  ``A[i,j]``, ``C[i]``, ``L[i]`` and ``u``;
* a bare number, e.g. ``1e12``;
* a comma-separated list of numbers or words, e.g. ``-3, -2`` or ``csv, plots``.

Keys::

    name            scenario label (quoted or bare)
    n               state dimension
    A[i,j]          entry (i, j) of A(t), 1-based, every entry required
    C[i], L[i]      entries of C(t) and of the injection gain L(t)
    f               nonlinearity: sin | cos | tanh | square | identity
    u               input signal u(t)
    x0, k, b, m     n numbers each
    gamma, beta, f0, M
                    estimator gains
    theta0          optional initial estimate, 4n numbers (default zeros)
    T, h            horizon and step, seconds
    x_bound         optional bound on |x| during simulation (default 1e6)
    outputs         optional list drawn from {csv, plots} (default csv)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..estimator import EstimatorConfig, gain_problems
from ..exprs import ExprSyntaxError, parse_expr
from ..numerics import ContractError, grid_steps
from ..observer import ObserverRun
from ..plant import DEFAULT_X_BOUND, NONLINEARITIES, SystemDefinition, TrueParameters

SHIPPED = ("paper_example",)
OUTPUT_KINDS = ("csv", "plots")

_LINE = re.compile(r"^\s*(?P<key>[A-Za-z_][A-Za-z0-9_]*(?:\[\s*\d+\s*(?:,\s*\d+\s*)?\])?)\s*=\s*(?P<value>.*?)\s*$")
_INDEX = re.compile(r"^(?P<base>[A-Za-z_][A-Za-z0-9_]*)\[\s*(?P<i>\d+)\s*(?:,\s*(?P<j>\d+)\s*)?\]$")

_SCALARS = {"name", "n", "f", "u", "gamma", "beta", "f0", "M", "T", "h", "x_bound"}
_LISTS = {"x0", "k", "b", "m", "theta0", "outputs"}
_INDEXED = {"A": 2, "C": 1, "L": 1}


class ConfigError(Exception):
    """Base class; the CLI maps every subclass to exit status 2."""


class ConfigFileError(ConfigError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, path, line: int, message: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class ConfigValidationError(ConfigError):
    def __init__(self, problems: list[tuple[str, str]], path=None):
        self.problems = problems
        where = f"{path}: " if path else ""
        super().__init__(where + "; ".join(f"{k}: {v}" for k, v in problems))


@dataclass
class ScenarioConfig:
    name: str
    n: int
    A: list
    C: list
    L: list
    f: str
    u: str
    x0: list
    k: list
    b: list
    m: list
    gamma: float
    beta: float
    f0: float
    M: float
    T: float
    h: float
    x_bound: float = DEFAULT_X_BOUND
    theta0: list | None = None
    outputs: list = field(default_factory=lambda: ["csv"])

    def validate(self) -> list[tuple[str, str]]:
        problems: list[tuple[str, str]] = []
        if not isinstance(self.n, int) or self.n < 1:
            problems.append(("n", f"must be a positive integer, got {self.n!r}"))
            return problems
        n = self.n
        if len(self.A) != n or any(len(row) != n for row in self.A):
            problems.append(("A", f"must be {n}x{n}"))
        else:
            for i, row in enumerate(self.A):
                for j, src in enumerate(row):
                    _check_expr(problems, f"A[{i + 1},{j + 1}]", src)
        for key in ("C", "L"):
            vec = getattr(self, key)
            if len(vec) != n:
                problems.append((key, f"must have {n} entries, got {len(vec)}"))
            for i, src in enumerate(vec):
                _check_expr(problems, f"{key}[{i + 1}]", src)
        _check_expr(problems, "u", self.u)
        if self.f not in NONLINEARITIES:
            problems.append(("f", f"unknown nonlinearity {self.f!r}; choose from {', '.join(NONLINEARITIES)}"))
        for key in ("x0", "k", "b", "m"):
            vec = getattr(self, key)
            if len(vec) != n:
                problems.append((key, f"must have {n} entries, got {len(vec)}"))
            elif not np.isfinite(np.asarray(vec, dtype=float)).all():
                problems.append((key, "entries must be finite"))
        if self.theta0 is not None and len(self.theta0) != 4 * n:
            problems.append(("theta0", f"must have {4 * n} entries, got {len(self.theta0)}"))
        problems.extend(gain_problems(self.gamma, self.beta, self.f0, self.M))
        if not self.x_bound > 0:
            problems.append(("x_bound", f"must be > 0, got {self.x_bound!r}"))
        try:
            grid_steps(self.T, self.h)
        except ContractError as exc:
            problems.append(("T" if not self.T > 0 else "h", str(exc)))
        for item in self.outputs:
            if item not in OUTPUT_KINDS:
                problems.append(("outputs", f"unknown output {item!r}; choose from {', '.join(OUTPUT_KINDS)}"))
        return problems

    def to_run(self) -> ObserverRun:
        problems = self.validate()
        if problems:
            raise ConfigValidationError(problems)
        sys = SystemDefinition(n=self.n, A=self.A, C=self.C, L=self.L, f=self.f, u=self.u)
        truth = TrueParameters(k=self.k, b=self.b, m=self.m, x0=self.x0)
        cfg = EstimatorConfig(self.gamma, self.beta, self.f0, self.M,
                              None if self.theta0 is None else tuple(self.theta0))
        return ObserverRun(sys, cfg, self.T, self.h, truth=truth, x_bound=self.x_bound)

    def dump(self) -> str:
        return dump_scenario(self)


def _check_expr(problems, path: str, src):
    if not isinstance(src, str):
        problems.append((path, "missing expression"))
        return
    try:
        parse_expr(src)
    except ExprSyntaxError as exc:
        problems.append((path, str(exc)))


def _unquote(raw: str, path, line: int) -> tuple[str, bool]:
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"') or '"' in raw[1:-1]:
            raise ConfigParseError(path, line, f"malformed quoted value {raw!r}")
        return raw[1:-1], True
    return raw, False


def _number(text: str, path, line: int, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigParseError(path, line, f"{key}: expected a number, got {text!r}") from None


def parse_scenario(text: str, path="<string>") -> ScenarioConfig:
    values: dict[str, object] = {}
    A: dict[tuple[int, int], str] = {}
    vecs: dict[str, dict[int, str]] = {"C": {}, "L": {}}
    seen: set[str] = set()

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise ConfigParseError(path, lineno, f"expected 'key = value', got {stripped!r}")
        key = re.sub(r"\s+", "", m.group("key"))
        raw = m.group("value")
        if key in seen:
            raise ConfigParseError(path, lineno, f"duplicate key {key!r}")
        seen.add(key)
        if not raw:
            raise ConfigParseError(path, lineno, f"{key}: missing value")

        idx = _INDEX.match(key)
        if idx is not None:
            base = idx.group("base")
            arity = _INDEXED.get(base)
            if arity is None or (idx.group("j") is None) != (arity == 1):
                raise ConfigParseError(path, lineno, f"unknown key {key!r}")
            src, quoted = _unquote(raw, path, lineno)
            if not quoted:
                raise ConfigParseError(path, lineno, f"{key}: expression values must be double-quoted")
            i = int(idx.group("i"))
            if i < 1 or (arity == 2 and int(idx.group("j")) < 1):
                raise ConfigParseError(path, lineno, f"{key}: indices start at 1")
            if arity == 2:
                A[(i, int(idx.group("j")))] = src
            else:
                vecs[base][i] = src
            continue

        if key in _SCALARS:
            src, quoted = _unquote(raw, path, lineno)
            if key == "u":
                if not quoted:
                    raise ConfigParseError(path, lineno, "u: expression values must be double-quoted")
                values[key] = src
            elif key in ("name", "f"):
                values[key] = src
            elif key == "n":
                try:
                    values[key] = int(src)
                except ValueError:
                    raise ConfigParseError(path, lineno, f"n: expected an integer, got {src!r}") from None
            else:
                values[key] = _number(src, path, lineno, key)
        elif key in _LISTS:
            items = [item.strip() for item in raw.split(",")]
            if any(not item for item in items):
                raise ConfigParseError(path, lineno, f"{key}: empty list item")
            if key == "outputs":
                values[key] = items
            else:
                values[key] = [_number(item, path, lineno, key) for item in items]
        else:
            raise ConfigParseError(path, lineno, f"unknown key {key!r}")

    required = ["name", "n", "f", "u", "x0", "k", "b", "m", "gamma", "beta", "f0", "M", "T", "h"]
    problems = [(key, "missing") for key in required if key not in values]
    if problems:
        raise ConfigValidationError(problems, path)

    n = values["n"]
    size = n if isinstance(n, int) and n > 0 else 0
    for (i, j) in A:
        if i > size or j > size:
            problems.append((f"A[{i},{j}]", f"index outside 1..{size}"))
    for base, vec in vecs.items():
        for i in vec:
            if i > size:
                problems.append((f"{base}[{i}]", f"index outside 1..{size}"))
    Amat = [[A.get((i, j)) for j in range(1, size + 1)] for i in range(1, size + 1)]
    C = [vecs["C"].get(i) for i in range(1, size + 1)]
    L = [vecs["L"].get(i) for i in range(1, size + 1)]

    cfg = ScenarioConfig(A=Amat, C=C, L=L, **values)
    problems += cfg.validate()
    if problems:
        raise ConfigValidationError(problems, path)
    return cfg


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_scenario(cfg: ScenarioConfig) -> str:
    lines = [f'name = "{cfg.name}"', f"n = {cfg.n}"]
    for i, row in enumerate(cfg.A, start=1):
        for j, src in enumerate(row, start=1):
            lines.append(f'A[{i},{j}] = "{src}"')
    for key in ("C", "L"):
        for i, src in enumerate(getattr(cfg, key), start=1):
            lines.append(f'{key}[{i}] = "{src}"')
    lines.append(f"f = {cfg.f}")
    lines.append(f'u = "{cfg.u}"')
    for key in ("x0", "k", "b", "m"):
        lines.append(f"{key} = " + ", ".join(_fmt(v) for v in getattr(cfg, key)))
    for key in ("gamma", "beta", "f0", "M", "T", "h", "x_bound"):
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    if cfg.theta0 is not None:
        lines.append("theta0 = " + ", ".join(_fmt(v) for v in cfg.theta0))
    lines.append("outputs = " + ", ".join(cfg.outputs))
    return "\n".join(lines) + "\n"


def shipped_path(name: str):
    return resources.files("ltv_gpebo.scenarios").joinpath(f"{name}.cfg")


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file. Bare names of shipped scenarios are accepted too."""
    p = Path(path)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigFileError(f"cannot read scenario {str(path)!r}: {exc}") from None
        return parse_scenario(text, str(path))
    if str(path) in SHIPPED:
        return parse_scenario(shipped_path(str(path)).read_text(encoding="utf-8"), str(path))
    raise ConfigFileError(f"scenario file not found: {str(path)!r}")

"""TOML run files to :class:`SystemConfig`.

A run file has the sections ``domain``, ``discretization``, ``params``,
``potential``, ``control``, ``initial``, ``target`` and ``source``.  Every
key is optional; missing keys take the defaults in :data:`SCHEMA`.

Fields (initial data, target, source profiles) accept

* a number: the constant function with that value;
* a list ``[c0, c1, ...]``: orthonormal-basis coefficients by mode index;
* a table ``{"0" = c0, "3" = c3}``: the same, sparse;
* a string such as ``"cos(1) - 0.25*cos(3) + 0.1"``: ``cos(k)`` stands for
  ``cos(k pi x / L)`` and ``mode(k)`` for the unit basis function ``e_k``.
"""

from __future__ import annotations

import ast
import copy
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import operators as ops
from .dynamics import ConfigError, SourceSpec, SourceTerm, SystemConfig, validate
from .spectral import Domain, Field, SpectralBasis, make_basis

__all__ = ["SCHEMA", "load_document", "parse_config", "build_config", "parse_field", "set_key", "numeric_keys", "RunOptions"]

_NUM = "number"
_INT = "integer"
_STR = "string"
_BOOL = "bool"
_FIELD = "field"

# section -> key -> (kind, default)
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "domain": {"length": (_NUM, 1.0), "quad_points": (_INT, None)},
    "discretization": {
        "n_modes": (_INT, 64),
        "dt": (_NUM, 1e-4),
        "t_final": (_NUM, 1.0),
        "method": (_STR, "imex"),
    },
    "params": {name: (_NUM, 1.0) for name in ("kappa", "tau", "gamma", "l", "alpha")},
    "potential": {"kind": (_STR, "quartic"), "c0": (_NUM, 1.0)},
    "control": {
        "problem": (_STR, "A"),
        "rho": (_NUM, 0.0),
        "epsilon": (_NUM, 1e-2),
        "delta": (_NUM, None),
        "allow_nonpositive_alpha": (_BOOL, False),
    },
    "initial": {"theta0": (_FIELD, 0.0), "w0": (_FIELD, 0.0), "phi0": (_FIELD, 0.0)},
    "target": {"field": (_FIELD, 0.0)},
}

SOURCE_KEYS: dict[str, tuple[str, Any]] = {
    "profile": (_FIELD, 0.0),
    "shape": (_STR, "constant"),
    "amplitude": (_NUM, 1.0),
    "frequency": (_NUM, 1.0),
    "phase": (_NUM, 0.0),
    "t_on": (_NUM, 0.0),
    "t_off": (_NUM, math.inf),
    "level": (_NUM, 1.0),
    "exponent": (_NUM, 1.0),
}


@dataclass(frozen=True)
class RunOptions:
    """Settings that shape a run but are not part of the ODE system."""

    method: str = "imex"
    delta: float | None = None


def load_document(text: str) -> dict:
    """Parse TOML text; syntax errors become a :class:`ConfigError` with line info."""
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse: {exc}"]) from None


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_value(path: str, kind: str, v, diags: list[str]) -> bool:
    expected = {
        _NUM: ("a number", _is_number(v)),
        _INT: ("an integer", isinstance(v, int) and not isinstance(v, bool)),
        _STR: ("a string", isinstance(v, str)),
        _BOOL: ("true or false", isinstance(v, bool)),
    }.get(kind)
    if expected is None or expected[1]:
        return True
    diags.append(f"type: {path} must be {expected[0]} (got {v!r})")
    return False


def _section(doc: dict, name: str, diags: list[str]) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        diags.append(f"type: [{name}] must be a table")
        return {}
    schema = SCHEMA[name]
    out = {}
    for key, value in sec.items():
        if key not in schema:
            diags.append(f"unknown key: {name}.{key}")
            continue
        # a mistyped value falls back to the default so later checks still run
        if _check_value(f"{name}.{key}", schema[key][0], value, diags):
            out[key] = value
    return {k: out.get(k, default) for k, (_, default) in schema.items()}


class _Expr:
    """Evaluator for field expressions over ``cos(k)``, ``mode(k)`` and numbers."""

    def __init__(self, basis: SpectralBasis):
        self.basis = basis

    def constant(self, value: float) -> np.ndarray:
        out = np.zeros(self.basis.n_modes)
        out[0] = value * math.sqrt(self.basis.length)
        return out

    def unit(self, k: int) -> np.ndarray:
        if not 0 <= k < self.basis.n_modes:
            raise ValueError(f"mode index {k} outside 0..{self.basis.n_modes - 1}")
        out = np.zeros(self.basis.n_modes)
        out[k] = 1.0
        return out

    def cos(self, k: int) -> np.ndarray:
        L = self.basis.length
        return self.unit(k) * (math.sqrt(L) if k == 0 else math.sqrt(L / 2))

    def mode(self, k: int) -> np.ndarray:
        return self.unit(k)

    def as_field(self, v) -> np.ndarray:
        return v if isinstance(v, np.ndarray) else self.constant(v)

    def eval(self, node):
        if isinstance(node, ast.Expression):
            return self.eval(node.body)
        if isinstance(node, ast.Constant) and _is_number(node.value):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            v = self.eval(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = self.eval(node.left), self.eval(node.right)
            if isinstance(node.op, (ast.Add, ast.Sub)):
                if isinstance(a, float) and isinstance(b, float):
                    return a + b if isinstance(node.op, ast.Add) else a - b
                a, b = self.as_field(a), self.as_field(b)
                return a + b if isinstance(node.op, ast.Add) else a - b
            if isinstance(node.op, ast.Mult):
                if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
                    raise ValueError("products of fields are not linear combinations")
                return a * b
            if isinstance(node.op, ast.Div):
                if isinstance(b, np.ndarray):
                    raise ValueError("cannot divide by a field")
                return a / b
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in ("cos", "mode")
            and len(node.args) == 1
            and not node.keywords
        ):
            arg = node.args[0]
            if not (isinstance(arg, ast.Constant) and isinstance(arg.value, int) and not isinstance(arg.value, bool)):
                raise ValueError(f"{node.func.id}() takes a literal integer mode index")
            return getattr(self, node.func.id)(arg.value)
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")


def parse_field(spec, basis: SpectralBasis, path: str = "field") -> Field:
    """Build a :class:`Field` from a number, coefficient list/table or expression string."""
    n = basis.n_modes
    ev = _Expr(basis)
    if _is_number(spec):
        return Field(ev.constant(float(spec)), basis)
    if isinstance(spec, list):
        if not all(_is_number(v) for v in spec):
            raise ValueError(f"{path}: coefficient list must hold numbers")
        if len(spec) > n:
            raise ValueError(f"{path}: {len(spec)} coefficients but only {n} modes")
        c = np.zeros(n)
        c[: len(spec)] = spec
        return Field(c, basis)
    if isinstance(spec, dict):
        c = np.zeros(n)
        for key, value in spec.items():
            try:
                k = int(key)
            except ValueError:
                raise ValueError(f"{path}: mode index {key!r} is not an integer") from None
            if not 0 <= k < n:
                raise ValueError(f"{path}: mode index {k} outside 0..{n - 1}")
            if not _is_number(value):
                raise ValueError(f"{path}: coefficient of mode {k} must be a number")
            c[k] = value
        return Field(c, basis)
    if isinstance(spec, str):
        try:
            tree = ast.parse(spec, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"{path}: cannot parse expression {spec!r} ({exc.msg})") from None
        try:
            value = ev.eval(tree)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{path}: {exc}") from None
        return Field(ev.as_field(value), basis)
    raise ValueError(f"{path}: unsupported field specification {spec!r}")


def build_config(doc: dict) -> tuple[SystemConfig, RunOptions]:
    """Turn a parsed document into a validated config, aggregating every problem."""
    diags: list[str] = []
    for name in doc:
        if name not in SCHEMA and name != "source":
            diags.append(f"unknown section: [{name}]")
    sec = {name: _section(doc, name, diags) for name in SCHEMA}
    dom, disc, ctl = sec["domain"], sec["discretization"], sec["control"]
    n = disc["n_modes"]
    basis = None
    try:
        quad = dom["quad_points"] if dom["quad_points"] is not None else 4 * max(n, 1)
        basis = make_basis(Domain(float(dom["length"]), quad), n)
    except ValueError as exc:
        diags.append(f"basis: {exc}")

    potential = None
    kind = sec["potential"]["kind"]
    if kind != "none":
        try:
            potential = ops.PotentialSpec(kind, float(sec["potential"]["c0"]))
        except ValueError as exc:
            diags.append(f"potential: {exc}")
    if disc["method"] not in ("imex", "rk4"):
        diags.append(f"discretization: method must be 'imex' or 'rk4' (got {disc['method']!r})")
    if basis is None:
        raise ConfigError(diags)

    fields_ = {}
    for name in ("theta0", "w0", "phi0"):
        try:
            fields_[name] = parse_field(sec["initial"][name], basis, f"initial.{name}")
        except ValueError as exc:
            diags.append(f"field: {exc}")
    try:
        fields_["target"] = parse_field(sec["target"]["field"], basis, "target.field")
    except ValueError as exc:
        diags.append(f"field: {exc}")

    terms = []
    source = doc.get("source", {})
    if not isinstance(source, dict):
        diags.append("type: [source] must be a table")
        source = {}
    for key in source:
        if key != "terms":
            diags.append(f"unknown key: source.{key}")
    raw_terms = source.get("terms", [])
    if not isinstance(raw_terms, list):
        diags.append("type: source.terms must be an array of tables")
        raw_terms = []
    for i, raw in enumerate(raw_terms):
        path = f"source.terms[{i}]"
        if not isinstance(raw, dict):
            diags.append(f"type: {path} must be a table")
            continue
        vals = {}
        for key, value in raw.items():
            if key not in SOURCE_KEYS:
                diags.append(f"unknown key: {path}.{key}")
                continue
            if _check_value(f"{path}.{key}", SOURCE_KEYS[key][0], value, diags):
                vals[key] = value
        args = {k: vals.get(k, d) for k, (_, d) in SOURCE_KEYS.items()}
        try:
            args["profile"] = parse_field(args["profile"], basis, f"{path}.profile")
            terms.append(SourceTerm(**args))
        except (ValueError, TypeError) as exc:
            diags.append(f"dataf: {exc}")
    if len(fields_) < 4:
        raise ConfigError(diags)

    params = sec["params"]
    c = SystemConfig(
        basis=basis,
        theta0=fields_["theta0"],
        w0=fields_["w0"],
        phi0=fields_["phi0"],
        target=fields_["target"],
        problem=ctl["problem"],
        kappa=float(params["kappa"]),
        tau=float(params["tau"]),
        gamma=float(params["gamma"]),
        l=float(params["l"]),
        alpha=float(params["alpha"]),
        rho=float(ctl["rho"]),
        epsilon=float(ctl["epsilon"]),
        potential=potential,
        t_final=float(disc["t_final"]),
        dt=float(disc["dt"]),
        source=SourceSpec(tuple(terms)),
        allow_nonpositive_alpha=ctl["allow_nonpositive_alpha"],
    )
    checks = validate(c)
    if disc["method"] == "rk4":
        checks = [d for d in checks if not d.startswith("stability:")]
    diags += checks
    delta = ctl["delta"]
    if delta is not None and not (delta >= max(c.epsilon, 1e-10)):
        diags.append(f"control: delta must be >= max(epsilon, 1e-10) (got {delta})")
    if diags:
        raise ConfigError(diags)
    return c, RunOptions(disc["method"], None if delta is None else float(delta))


def parse_config(text: str) -> SystemConfig:
    """Parse and validate a TOML run file."""
    return build_config(load_document(text))[0]


def numeric_keys() -> list[str]:
    return sorted(
        f"{sec}.{key}" for sec, keys in SCHEMA.items() for key, (kind, _) in keys.items() if kind in (_NUM, _INT)
    )


def set_key(doc: dict, dotted: str, value) -> dict:
    """Copy of ``doc`` with the numeric key ``section.key`` set to ``value``."""
    if dotted not in numeric_keys():
        raise KeyError(f"{dotted!r} is not a numeric config key; choose from {', '.join(numeric_keys())}")
    sec, key = dotted.split(".")
    kind = SCHEMA[sec][key][0]
    out = copy.deepcopy(doc)
    table = out.setdefault(sec, {})
    if kind == _INT:
        if float(value) != int(value):
            raise ValueError(f"{dotted} needs integer values (got {value})")
        value = int(value)
    table[key] = value
    return out

"""Flat ``key = value`` study configuration.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines are ignored; keys may appear once. Integer lists accept ``2..5`` or
``2,3,4,5``; float lists accept decimals or fractions such as ``1/10``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import ParseError, ValidationError

KINDS = ("spatial", "temporal", "projection", "geometry", "single-solve")
SURFACES = ("sphere", "torus")
PROBLEM_SURFACE = {"heat": "sphere", "full": "sphere", "torus_heat": "torus"}


@dataclass
class StudyConfig:
    kind: str
    surface: str = "sphere"
    problem: Optional[str] = None
    levels: list = field(default_factory=list)
    fixed_level: Optional[int] = None
    taus: list = field(default_factory=list)
    kappa: float = 1.0
    T: float = 1.0
    tol: float = 1e-10
    max_iter: Optional[int] = None
    output_dir: str = "."
    dump_mesh: bool = False
    dump_slabs: list = field(default_factory=list)
    dump_matrices: bool = False
    seed: int = 42
    min_eoc: Optional[float] = None


def _int_list(text):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(Fraction(x.strip())) for x in text.split(",") if x.strip()]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


CONVERTERS = {
    "kind": str,
    "surface": str,
    "problem": str,
    "levels": _int_list,
    "fixed_level": int,
    "taus": _float_list,
    "kappa": float,
    "T": float,
    "tol": float,
    "max_iter": _opt_int,
    "output_dir": str,
    "dump_mesh": _bool,
    "dump_slabs": _int_list,
    "dump_matrices": _bool,
    "seed": int,
    "min_eoc": float,
}


def parse_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        if key not in CONVERTERS:
            raise ValidationError(f"unknown key {key!r}", field=key)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = CONVERTERS[key](value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", lineno) from None
    if "kind" not in values:
        raise ValidationError("missing required key 'kind'", field="kind")
    cfg = StudyConfig(**values)
    validate(cfg)
    return cfg


def parse_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_text(text)


def _require(cfg, name, cond, msg):
    if not cond:
        raise ValidationError(f"{name}: {msg}", field=name)


def validate(cfg):
    _require(cfg, "kind", cfg.kind in KINDS, f"must be one of {KINDS}, got {cfg.kind!r}")
    _require(cfg, "surface", cfg.surface in SURFACES, f"must be one of {SURFACES}")
    _require(cfg, "kappa", cfg.kappa > 0, "must be positive")
    _require(cfg, "T", cfg.T > 0, "must be positive")
    _require(cfg, "tol", cfg.tol > 0, "must be positive")
    if cfg.levels:
        _require(cfg, "levels", all(b > a for a, b in zip(cfg.levels, cfg.levels[1:])),
                 "must be increasing")
        _require(cfg, "levels", cfg.levels[0] >= 0, "must be non-negative")
    if cfg.kind in ("spatial", "temporal", "single-solve"):
        _require(cfg, "problem", cfg.problem is not None, f"required for kind={cfg.kind}")
        _require(cfg, "problem", cfg.problem in PROBLEM_SURFACE,
                 f"must be one of {sorted(PROBLEM_SURFACE)}")
        _require(cfg, "problem", PROBLEM_SURFACE[cfg.problem] == cfg.surface,
                 f"{cfg.problem!r} is defined on {PROBLEM_SURFACE[cfg.problem]}, not {cfg.surface}")
    if cfg.kind == "spatial":
        _require(cfg, "levels", len(cfg.levels) >= 3, "spatial study needs at least 3 levels")
        _require(cfg, "levels", all(b == a + 1 for a, b in zip(cfg.levels, cfg.levels[1:])),
                 "spatial study levels must be consecutive")
    if cfg.kind in ("projection", "geometry"):
        _require(cfg, "levels", len(cfg.levels) >= 2, f"{cfg.kind} study needs at least 2 levels")
    if cfg.kind == "temporal":
        _require(cfg, "fixed_level", cfg.fixed_level is not None, "required for kind=temporal")
        _require(cfg, "taus", len(cfg.taus) >= 2, "temporal study needs at least 2 steps")
        _require(cfg, "taus", all(t > 0 for t in cfg.taus), "must be positive")
        _require(cfg, "taus", all(b < a for a, b in zip(cfg.taus, cfg.taus[1:])),
                 "must be decreasing")
    if cfg.kind == "single-solve":
        _require(cfg, "fixed_level", cfg.fixed_level is not None, "required for kind=single-solve")
    return cfg

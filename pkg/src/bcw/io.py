"""Flat ``key = value`` configuration files and energy CSV output.

A configuration looks like::

    # comments start with '#'
    domain.lengths = [3.141592653589793]
    domain.modes = [16]
    medium.a = 1.0
    medium.b = 2.0
    medium.c = 1.0
    medium.sigma = 0.01
    time.t_end = 10
    time.dt = 1e-2
    init.psi0 = [0.01]

Values are numbers, booleans (``true``/``false``), bare strings or bracketed
lists of numbers.  The medium may instead be given physically through
``medium.nu``, ``medium.prandtl`` and ``medium.b_over_a`` (then ``a`` and ``sigma``
are derived).
"""
from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import BCWError, ConfigError
from .generator import MediumParams
from .nonlinear import SimConfig
from .spectral import BoxDomain

CSV_FIELDS = ("t", "E1", "E2", "calE0", "calE", "Epsi", "Lambda", "r", "e")


@dataclass(frozen=True)
class _Key:
    kind: str  # "float", "int", "bool", "str", "floats", "ints"
    default: object = None
    required: bool = False


KEYS = {
    "domain.lengths": _Key("floats", required=True),
    "domain.modes": _Key("ints", required=True),
    "medium.a": _Key("float"),
    "medium.b": _Key("float", required=True),
    "medium.c": _Key("float", required=True),
    "medium.sigma": _Key("float"),
    "medium.nu": _Key("float"),
    "medium.prandtl": _Key("float"),
    "medium.b_over_a": _Key("float"),
    "time.t_end": _Key("float", required=True),
    "time.dt": _Key("float", 1e-3),
    "solver.nonlinear": _Key("bool", True),
    "solver.picard_tol": _Key("float", 1e-10),
    "solver.picard_max_iter": _Key("int", 25),
    "solver.dealias": _Key("bool", True),
    "init.psi0": _Key("floats", ()),
    "init.psi1": _Key("floats", ()),
    "init.psi2": _Key("floats", ()),
    "output.path": _Key("str"),
    "output.stride": _Key("int", 10),
    "check.smallness_threshold": _Key("float"),
    "check.decay_rtol": _Key("float", 0.05),
}


def _convert(kind, raw, key, line):
    def number(tok, cast):
        try:
            value = cast(tok)
        except ValueError:
            raise ConfigError(f"line {line}: {key}: cannot read {tok!r} as {cast.__name__}", key, line) from None
        if cast is float and not math.isfinite(value):
            raise ConfigError(f"line {line}: {key}: value must be finite", key, line)
        return value

    if kind in ("floats", "ints"):
        body = raw.strip()
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"line {line}: {key}: unterminated list", key, line)
            body = body[1:-1]
        toks = [t.strip() for t in body.split(",") if t.strip()]
        cast = float if kind == "floats" else int
        return tuple(number(t, cast) for t in toks)
    if kind == "float":
        return number(raw, float)
    if kind == "int":
        return number(raw, int)
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {line}: {key}: expected true or false, got {raw!r}", key, line)
    return raw.strip().strip('"').strip("'")


def parse_raw(text: str) -> dict:
    """Parse text into ``{key: (value, line)}``, applying type conversion only."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}", None, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key, lineno)
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key, lineno)
        if not value:
            raise ConfigError(f"line {lineno}: {key}: missing value", key, lineno)
        values[key] = (_convert(KEYS[key].kind, value, key, lineno), lineno)
    return values


def parse_config(text: str) -> SimConfig:
    raw = parse_raw(text)
    for key, entry in KEYS.items():
        if entry.required and key not in raw:
            raise ConfigError(f"missing required key {key!r}", key)

    def get(key):
        return raw[key][0] if key in raw else KEYS[key].default

    def guarded(key, build):
        try:
            return build()
        except ConfigError:
            raise
        except (BCWError, ValueError, TypeError) as exc:
            line = raw[key][1] if key in raw else None
            where = f"line {line}: " if line else ""
            raise ConfigError(f"{where}{key}: {exc}", key, line) from exc

    domain = guarded("domain.lengths", lambda: BoxDomain(get("domain.lengths"), get("domain.modes")))

    physical = [k for k in ("medium.nu", "medium.prandtl", "medium.b_over_a") if k in raw]
    if physical:
        if len(physical) != 3:
            raise ConfigError("medium.nu, medium.prandtl and medium.b_over_a must be given together", physical[0])
        for k in ("medium.a", "medium.sigma"):
            if k in raw:
                raise ConfigError(f"{k} is derived when the physical medium keys are given", k, raw[k][1])
        medium = guarded("medium.b", lambda: MediumParams.from_physical(
            get("medium.nu"), get("medium.prandtl"), get("medium.b"), get("medium.c"), get("medium.b_over_a")))
    else:
        if "medium.a" not in raw:
            raise ConfigError("missing required key 'medium.a'", "medium.a")
        try:
            medium = MediumParams(get("medium.a"), get("medium.b"), get("medium.c"), get("medium.sigma") or 0.0)
        except BCWError as exc:
            # parameter errors start with the offending name
            key = "medium." + str(exc).split()[0]
            key = key if key in KEYS else "medium.b"
            line = raw[key][1] if key in raw else None
            where = f"line {line}: " if line else ""
            raise ConfigError(f"{where}{key}: {exc}", key, line) from exc
    path = get("output.path")
    return guarded("time.dt", lambda: SimConfig(
        domain=domain, medium=medium, t_end=get("time.t_end"), dt=get("time.dt"),
        nonlinear_enabled=get("solver.nonlinear"), picard_tol=get("solver.picard_tol"),
        picard_max_iter=get("solver.picard_max_iter"), dealias=get("solver.dealias"),
        psi0=get("init.psi0"), psi1=get("init.psi1"), psi2=get("init.psi2"),
        output_path=Path(path) if path else None, stride=get("output.stride")))


def load_config(path) -> tuple[SimConfig, dict]:
    """Read a configuration file; also returns the raw ``check.*`` options."""
    text = Path(path).read_text(encoding="utf-8")
    raw = parse_raw(text)
    checks = {k.split(".", 1)[1]: v for k, (v, _) in raw.items() if k.startswith("check.")}
    for k, entry in KEYS.items():
        if k.startswith("check.") and entry.default is not None:
            checks.setdefault(k.split(".", 1)[1], entry.default)
    return parse_config(text), checks


def format_float(x: float) -> str:
    return f"{float(x):.16e}"


def energies_csv_text(samples) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for s in samples:
        writer.writerow([format_float(getattr(s, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def write_energies_csv(samples, path) -> Path:
    """Write ``t,E1,...,e`` rows, every value with 17 significant digits (exact round trip)."""
    path = Path(path)
    path.write_text(energies_csv_text(samples), encoding="utf-8")
    return path


def read_energies_csv(path):
    from .energy import EnergySample

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ConfigError(f"{path}: unexpected header {reader.fieldnames}")
        return [EnergySample(**{k: float(row[k]) for k in CSV_FIELDS}) for row in reader]

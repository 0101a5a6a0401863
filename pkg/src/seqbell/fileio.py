"""Plain-text file formats: scenario configs, complex matrices, behavior tables, JSON."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .lhv import BehaviorTable


class ConfigError(ValueError):
    """Malformed input file (maps to CLI exit code 2)."""


# --- config ---------------------------------------------------------------------

_OBSERVABLE_KEYS = {
    f"observable.{name}.{angle}"
    for name in ("a", "a_prime", "b", "b_prime")
    for angle in ("theta", "phi")
}

KNOWN_KEYS = {
    "state.kind",
    "state.alpha_sq",
    "state.p1",
    "state.matrix_file",
    "protocol.kind",
    "protocol.settings",
    "protocol.filter_a",
    "protocol.filter_b",
    "protocol.allow_swap",
    "sweep.alpha_sq_min",
    "sweep.alpha_sq_max",
    "sweep.p1_min",
    "sweep.p1_max",
    "sweep.resolution",
    "lhv.table_file",
    "output.format",
    "output.path",
    "output.seed",
    "output.tol",
} | _OBSERVABLE_KEYS


def parse_config(text: str) -> dict[str, str]:
    """Parse ``section.key = value`` lines; ``#`` starts a comment. Unknown keys are rejected."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config(text)
    for key in ("state.matrix_file", "lhv.table_file", "protocol.filter_a", "protocol.filter_b"):
        if key in cfg and cfg[key] != "identity" and not Path(cfg[key]).is_absolute():
            cfg[key] = str(path.parent / cfg[key])
    return cfg


def dump_config(cfg: dict[str, object]) -> str:
    return "".join(f"{key} = {_format_value(cfg[key])}\n" for key in sorted(cfg))


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def get_float(cfg: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} = {cfg[key]!r} is not a number") from None


def get_int(cfg: dict[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} = {cfg[key]!r} is not an integer") from None


def get_bool(cfg: dict[str, str], key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} = {cfg[key]!r} is not a boolean")


# --- complex matrices -------------------------------------------------------------


def parse_complex(token: str) -> complex:
    """``"0.5"``, ``"-1i"``, ``"0.25-0.5i"`` and the like."""
    tok = token.strip().replace("i", "j")
    try:
        return complex(tok)
    except ValueError:
        raise ConfigError(f"bad complex entry {token!r}") from None


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append([parse_complex(tok) for tok in line.split()])
    if not rows:
        raise ConfigError("matrix file is empty")
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("matrix rows have different lengths")
    m = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ConfigError("matrix has non-finite entries")
    return m


def read_matrix(path: str | Path) -> np.ndarray:
    try:
        return parse_matrix(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from None


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def format_matrix(m: np.ndarray) -> str:
    return "".join(" ".join(format_complex(complex(z)) for z in row) + "\n" for row in m)


# --- behavior tables --------------------------------------------------------------


def parse_table(text: str) -> np.ndarray:
    """Header ``settings_a settings_b outcomes_a outcomes_b``, then one line per ``(x, y)``.

    Each data line lists ``P(a, b | x, y)`` row-major in ``(a, b)``; lines run
    over ``x`` first, then ``y``. Normalization is not checked here.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("behavior table file is empty")
    try:
        header = [int(tok) for tok in lines[0].split()]
    except ValueError:
        raise ConfigError(f"bad header line {lines[0]!r}") from None
    if len(header) != 4 or min(header) < 1:
        raise ConfigError("header must be four positive integers: settings_a settings_b outcomes_a outcomes_b")
    x_n, y_n, a_n, b_n = header
    data = lines[1:]
    if len(data) != x_n * y_n:
        raise ConfigError(f"expected {x_n * y_n} data lines, found {len(data)}")
    p = np.zeros((x_n, y_n, a_n, b_n))
    for k, line in enumerate(data):
        try:
            vals = [float(tok) for tok in line.split()]
        except ValueError:
            raise ConfigError(f"data line {k + 1} has non-numeric entries") from None
        if len(vals) != a_n * b_n or not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"data line {k + 1} must hold {a_n * b_n} finite numbers")
        x, y = divmod(k, y_n)
        p[x, y] = np.reshape(vals, (a_n, b_n))
    return p


def read_table(path: str | Path) -> np.ndarray:
    try:
        return parse_table(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read table file {path}: {exc}") from None


def format_table(t: BehaviorTable) -> str:
    x_n, y_n, a_n, b_n = t.shape
    lines = [f"{x_n} {y_n} {a_n} {b_n}"]
    for x in range(x_n):
        for y in range(y_n):
            lines.append(" ".join(f"{v:.17g}" for v in t.p[x, y].reshape(-1)))
    return "\n".join(lines) + "\n"


# --- JSON -------------------------------------------------------------------------


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return "null"
        return f"{v:.17g}"
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    return json.dumps(s)

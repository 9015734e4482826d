"""Model, certificate, configuration and trace files.

All structured files are JSON objects.  Matrices are row-major nested
arrays; every float is written with 17 significant digits so values
round-trip bit-exactly.

A model document holds either ``A``, ``B``, ``C`` (discrete) or
``continuous: {Ac, Bc, C}`` together with ``h``.  When both are present the
discrete matrices are the model and the continuous block is provenance, as
in the files written by ``nihigs zoh``.  Certificates use ``P`` (or ``X``
for the bilinear form).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, NIHigsError
from .higs import HigsParams
from .lti import ContinuousModel, StateSpaceModel
from .loop import ClosedLoopTrace
from .ni import BilinearCertificate, NICertificate

__all__ = [
    "fmt",
    "dumps",
    "write_atomic",
    "load_document",
    "model_to_dict",
    "model_from_dict",
    "certificate_to_dict",
    "RunConfig",
    "load_config",
    "parse_config",
    "trace_csv_header",
    "trace_to_csv",
]


def fmt(v: float) -> str:
    """17-significant-digit representation of a float."""
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    s = format(v, ".17g")
    # keep a float literal so that -0.0 survives a JSON round trip
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        # rows of numbers stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


# --- field readers -------------------------------------------------------


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {type(v).__name__}", where)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError("value must be finite", where)
    return v


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {type(v).__name__}", where)
    return v


def _matrix(v, where: str, shape: str = "matrix") -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty array", where)
    if all(not isinstance(r, list) for r in v):
        row = [_number(x, f"{where}[{j}]") for j, x in enumerate(v)]
        a = np.array(row)
        return a.reshape(-1, 1) if shape == "column" else a.reshape(1, -1)
    rows = []
    for i, r in enumerate(v):
        if not isinstance(r, list):
            raise ConfigError("mixed rows and scalars", f"{where}[{i}]")
        rows.append([_number(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("rows have different lengths", where)
    return np.array(rows)


def _vector(v, where: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ConfigError("expected an array of numbers", where)
    return np.array([_number(x, f"{where}[{i}]") for i, x in enumerate(v)])


def _positive(v, where: str) -> float:
    v = _number(v, where)
    if v <= 0:
        raise ConfigError(f"must be > 0, got {v}", where)
    return v


def _wrap(fn, where):
    """Run ``fn`` and turn library validation errors into ConfigError."""
    try:
        return fn()
    except ConfigError:
        raise
    except (NIHigsError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc


def model_to_dict(m: StateSpaceModel, continuous: Optional[ContinuousModel] = None, h: Optional[float] = None) -> dict:
    d: dict[str, Any] = {"A": m.A, "B": m.B, "C": m.C}
    if continuous is not None:
        c: dict[str, Any] = {"Ac": continuous.Ac, "Bc": continuous.Bc, "C": continuous.C}
        if continuous.params:
            c["params"] = dict(continuous.params)
        d["continuous"] = c
    if h is not None:
        d["h"] = float(h)
    return d


def model_from_dict(d: dict, where: str = "") -> tuple[Optional[StateSpaceModel], Optional[ContinuousModel], Optional[float]]:
    """Parse the model fields of a document.

    Returns ``(discrete, continuous, h)``; any of them may be ``None``.
    """
    pre = f"{where}." if where else ""
    present = [k for k in ("A", "B", "C") if k in d]
    discrete = None
    if present:
        missing = [k for k in ("A", "B", "C") if k not in d]
        if missing:
            raise ConfigError(f"discrete model needs A, B and C (missing {', '.join(missing)})", where or None)
        A = _matrix(d["A"], pre + "A")
        B = _matrix(d["B"], pre + "B", "column")
        C = _matrix(d["C"], pre + "C", "row")
        discrete = _wrap(lambda: StateSpaceModel(A, B, C), where or "model")
    continuous = None
    if "continuous" in d:
        c = d["continuous"]
        cw = pre + "continuous"
        if not isinstance(c, dict):
            raise ConfigError("expected an object with Ac, Bc, C", cw)
        for k in ("Ac", "Bc", "C"):
            if k not in c:
                raise ConfigError(f"missing field {k}", cw)
        Ac = _matrix(c["Ac"], cw + ".Ac")
        Bc = _matrix(c["Bc"], cw + ".Bc", "column")
        Cc = _matrix(c["C"], cw + ".C", "row")
        params = {}
        if "params" in c:
            if not isinstance(c["params"], dict):
                raise ConfigError("expected an object", cw + ".params")
            params = {k: _number(v, f"{cw}.params.{k}") for k, v in c["params"].items()}
        continuous = _wrap(lambda: ContinuousModel(Ac, Bc, Cc, params), cw)
    h = _number(d["h"], pre + "h") if "h" in d else None
    return discrete, continuous, h


def certificate_to_dict(cert) -> dict:
    if isinstance(cert, NICertificate):
        return {"P": cert.P}
    if isinstance(cert, BilinearCertificate):
        return {"X": cert.X}
    raise TypeError(f"not a certificate: {type(cert).__name__}")


# --- run configuration ---------------------------------------------------


@dataclass
class RunConfig:
    """Everything a CLI command may need, parsed and validated.

    The model comes from exactly one source: discrete matrices, or a
    continuous model plus ``h``.
    """

    model: Optional[StateSpaceModel] = None
    continuous: Optional[ContinuousModel] = None
    h: Optional[float] = None
    certificate: Optional[NICertificate] = None
    bilinear: Optional[BilinearCertificate] = None
    higs: Optional[HigsParams] = None
    xh0: float = 0.0
    x0: Optional[np.ndarray] = None
    n_steps: int = 2000
    tol: float = 1e-9
    margin: float = 0.9
    search: dict = field(default_factory=lambda: {"eps": 1e-6, "max_iters": 50_000, "tol": 1e-6, "method": "sdp"})
    trials: int = 0
    horizon: int = 50
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def model_source(self) -> Optional[str]:
        if self.model is not None:
            return "discrete"
        if self.continuous is not None:
            return "continuous"
        return None


def _subdocument(doc: dict, key: str, base: Path) -> tuple[dict, str]:
    """Return the object referenced by ``key`` (inline or a relative path)."""
    v = doc[key]
    if isinstance(v, str):
        return load_document(base / v), key
    if isinstance(v, dict):
        return v, key
    raise ConfigError("expected an object or a file path", key)


_KNOWN = {
    "A", "B", "C", "continuous", "h", "model", "certificate", "P", "X", "higs",
    "x0", "n_steps", "tol", "margin", "search", "trials", "horizon", "seed",
}


def parse_config(doc: dict, base_dir=None) -> RunConfig:
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    cfg = RunConfig(base_dir=base)

    if "model" in doc:
        if any(k in doc for k in ("A", "B", "C", "continuous")):
            raise ConfigError("give the model either inline or under 'model', not both", "model")
        mdoc, where = _subdocument(doc, "model", base)
    else:
        mdoc, where = doc, ""
    cfg.model, cfg.continuous, cfg.h = model_from_dict(mdoc, where)
    if "h" in doc and "model" in doc:
        cfg.h = _number(doc["h"], "h")
    if cfg.model is None and cfg.continuous is not None and cfg.h is None:
        raise ConfigError("continuous model requires sampling period h", "h")
    if cfg.h is not None and cfg.h <= 0:
        raise ConfigError(f"must be > 0, got {cfg.h}", "h")

    if "certificate" in doc:
        if "P" in doc or "X" in doc:
            raise ConfigError("give P/X either inline or under 'certificate', not both", "certificate")
        cdoc, cw = _subdocument(doc, "certificate", base)
        cpre = cw + "."
    else:
        cdoc, cpre = doc, ""
    if "P" in cdoc:
        P = _matrix(cdoc["P"], cpre + "P")
        cfg.certificate = _wrap(lambda: NICertificate(P), cpre + "P")
    if "X" in cdoc:
        X = _matrix(cdoc["X"], cpre + "X")
        cfg.bilinear = _wrap(lambda: BilinearCertificate(X), cpre + "X")

    if "higs" in doc:
        hd = doc["higs"]
        if not isinstance(hd, dict):
            raise ConfigError("expected an object with omega_h, k_h", "higs")
        for k in ("omega_h", "k_h"):
            if k not in hd:
                raise ConfigError(f"missing field {k}", "higs")
        w = _number(hd["omega_h"], "higs.omega_h")
        k = _number(hd["k_h"], "higs.k_h")
        cfg.higs = _wrap(lambda: HigsParams(w, k), "higs")
        if "x0" in hd:
            cfg.xh0 = _number(hd["x0"], "higs.x0")

    if "x0" in doc:
        cfg.x0 = _vector(doc["x0"], "x0")
    if "n_steps" in doc:
        cfg.n_steps = _int(doc["n_steps"], "n_steps")
        if cfg.n_steps < 1:
            raise ConfigError(f"must be >= 1, got {cfg.n_steps}", "n_steps")
    if "tol" in doc:
        cfg.tol = _positive(doc["tol"], "tol")
    if "margin" in doc:
        cfg.margin = _number(doc["margin"], "margin")
        if not 0 < cfg.margin < 1:
            raise ConfigError(f"must lie in (0, 1), got {cfg.margin}", "margin")
    if "search" in doc:
        sd = doc["search"]
        if not isinstance(sd, dict):
            raise ConfigError("expected an object", "search")
        for k, v in sd.items():
            if k in ("eps", "tol"):
                cfg.search[k] = _positive(v, f"search.{k}")
            elif k == "max_iters":
                cfg.search[k] = _int(v, "search.max_iters")
            elif k == "method":
                if v not in ("sdp", "subgradient"):
                    raise ConfigError("must be 'sdp' or 'subgradient'", "search.method")
                cfg.search[k] = v
            else:
                raise ConfigError("unknown field", f"search.{k}")
    if "trials" in doc:
        cfg.trials = _int(doc["trials"], "trials")
    if "horizon" in doc:
        cfg.horizon = _int(doc["horizon"], "horizon")
    if "seed" in doc:
        cfg.seed = _int(doc["seed"], "seed")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(load_document(path), base_dir=path.parent)


# --- traces ----------------------------------------------------------------


def trace_csv_header(n: int, with_w: bool) -> str:
    cols = ["k"] + [f"x{i + 1}" for i in range(n)] + ["x_tilde", "e", "u", "mode"]
    if with_w:
        cols.append("W")
    return ",".join(cols)


def trace_to_csv(t: ClosedLoopTrace) -> str:
    n = t.x.shape[1] if t.x.ndim == 2 and t.x.shape[0] else len(t.x0)
    with_w = t.W is not None
    lines = [trace_csv_header(n, with_w)]
    for k in range(len(t)):
        fields = [str(k)]
        fields += [fmt(v) for v in t.x[k]]
        fields += [fmt(t.x_tilde[k]), fmt(t.e[k]), fmt(t.u[k]), str(t.mode[k])]
        if with_w:
            fields.append(fmt(t.W[k]))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"

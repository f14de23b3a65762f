"""Varifold text files and JSON report records.

Varifold file
-------------
Header ``varifold m=<int> ell=<int> n=<int>`` followed by ``n`` records::

    p_1 ... p_m | w | e_11 ... e_1m ; ... ; e_l1 ... e_lm | b

with ``b`` in ``{0, 1}`` the boundary flag. Floats are written with
``repr`` so that a read/write cycle is exact. Blank lines and lines starting
with ``#`` are ignored.
"""

import hashlib
import json
import math
import re

import numpy as np

from .errors import FormatError
from .varifold import DiscreteVarifold

FRAME_TOL = 1e-6
_HEADER = re.compile(r"^varifold\s+m=(\d+)\s+ell=(\d+)\s+n=(\d+)\s*$")


def _fmt(x):
    return repr(float(x))


def dumps_varifold(V):
    lines = [f"varifold m={V.m} ell={V.ell} n={V.n}"]
    for p, w, E, b in zip(V.points, V.weights, V.frames, V.boundary_mask):
        frame = " ; ".join(" ".join(_fmt(x) for x in e) for e in E)
        lines.append(f"{' '.join(_fmt(x) for x in p)} | {_fmt(w)} | {frame} | {int(b)}")
    return "\n".join(lines) + "\n"


def write_varifold(path, V):
    with open(path, "w") as fh:
        fh.write(dumps_varifold(V))


def _floats(text, lineno, what):
    try:
        return [float(t) for t in text.split()]
    except ValueError:
        raise FormatError(f"could not parse {what}", lineno) from None


def loads_varifold(text):
    header = None
    recs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            mt = _HEADER.match(line)
            if not mt:
                raise FormatError("malformed header, expected 'varifold m=<int> ell=<int> n=<int>'", lineno)
            header = tuple(int(g) for g in mt.groups())
            m, ell, n = header
            if not 1 <= ell < m:
                raise FormatError("header needs 1 <= ell < m", lineno)
            continue
        m, ell, n = header
        parts = [s.strip() for s in line.split("|")]
        if len(parts) != 4:
            raise FormatError(f"expected 4 '|'-separated fields, got {len(parts)}", lineno)
        p = _floats(parts[0], lineno, "point")
        if len(p) != m:
            raise FormatError(f"point has {len(p)} coordinates, expected {m}", lineno)
        w = _floats(parts[1], lineno, "weight")
        if len(w) != 1 or not w[0] > 0 or not math.isfinite(w[0]):
            raise FormatError("weight must be a single positive number", lineno)
        vecs = [s for s in parts[2].split(";")]
        if len(vecs) != ell:
            raise FormatError(f"frame has {len(vecs)} vectors, expected {ell}", lineno)
        E = np.array([_floats(v, lineno, "frame vector") for v in vecs], dtype=object)
        if any(len(e) != m for e in E):
            raise FormatError(f"frame vectors must have {m} components", lineno)
        E = np.array([list(e) for e in E], dtype=float)
        defect = np.max(np.abs(E @ E.T - np.eye(ell)))
        if defect > FRAME_TOL:
            raise FormatError(f"frame is not orthonormal (defect {defect:.3e})", lineno)
        if parts[3] not in ("0", "1"):
            raise FormatError("boundary flag must be 0 or 1", lineno)
        recs.append((p, w[0], E, parts[3] == "1"))
    if header is None:
        raise FormatError("missing header", 1)
    m, ell, n = header
    if len(recs) != n:
        raise FormatError(f"header announces n={n} records, found {len(recs)}")
    if n == 0:
        raise FormatError("varifold has no records")
    pts = np.array([r[0] for r in recs])
    w = np.array([r[1] for r in recs])
    fr = np.array([r[2] for r in recs])
    b = np.array([r[3] for r in recs])
    return DiscreteVarifold(pts, w, fr, b, ell, frame_tol=FRAME_TOL)


def read_varifold(path):
    with open(path) as fh:
        return loads_varifold(fh.read())


# ---------------------------------------------------------------------------
# reports


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__
                            if not k.startswith("_") and not callable(getattr(obj, k))})
    if obj is None or isinstance(obj, (str, int)):
        return obj
    return str(obj)


def canonical_hash(payload):
    text = json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def make_report(command, inputs, outputs, verdict, provenance, version, wall_clock):
    """Report record; ``outputs_hash`` covers command, inputs, outputs and
    verdict but not the wall-clock time."""
    core = {"command": command, "inputs": inputs, "outputs": outputs, "verdict": verdict}
    rec = dict(core)
    rec["provenance"] = provenance
    rec["toolkit_version"] = version
    rec["wall_clock_s"] = wall_clock
    rec["outputs_hash"] = canonical_hash(core)
    return to_jsonable(rec)


def write_csv(path, columns):
    """Write equal-length named columns as CSV."""
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    n = len(data[0])
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(d[i]) for d in data) + "\n")

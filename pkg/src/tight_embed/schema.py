"""JSON schemas for spaces and curves, and atomic file output."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .moduli import ModulusCurve
from .spaces import FiniteMetricSpace, LpPointSet, exponent_to_json, validate_metric


def space_from_json(obj: dict) -> LpPointSet | FiniteMetricSpace:
    kind = obj.get("type") if isinstance(obj, dict) else None
    if kind == "points":
        return LpPointSet(obj["p"], np.asarray(obj["coords"], dtype=float), obj.get("basepoint"))
    if kind == "matrix":
        return validate_metric(obj["d"], basepoint=int(obj.get("basepoint", 0)))
    raise ValueError("space JSON needs type 'points' or 'matrix'")


def space_to_json(space: LpPointSet | FiniteMetricSpace) -> dict:
    if isinstance(space, LpPointSet):
        out = {"type": "points", "p": exponent_to_json(space.p), "coords": space.points.tolist()}
        if space.basepoint is not None:
            out["basepoint"] = space.basepoint
        return out
    return {"type": "matrix", "d": space.d.tolist(), "basepoint": space.basepoint}


def as_metric(space: LpPointSet | FiniteMetricSpace) -> FiniteMetricSpace:
    return space.metric() if isinstance(space, LpPointSet) else space


def curve_from_arg(text: str) -> ModulusCurve:
    """Parse a curve from inline JSON, a JSON file, or shorthand ``family[:alpha]``."""
    text = text.strip()
    if text.startswith("{"):
        return ModulusCurve.from_spec(json.loads(text))
    if os.path.exists(text):
        return ModulusCurve.from_spec(load_json(text))
    fam, _, alpha = text.partition(":")
    spec = {"family": fam}
    if alpha:
        spec["alpha"] = float(alpha)
    return ModulusCurve.from_spec(spec)


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def atomic_write(path, text: str) -> None:
    """Write-then-rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

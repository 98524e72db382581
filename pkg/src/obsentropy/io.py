"""Operator files: JSON documents holding a list of complex matrices.

Layout::

    {"dimension": 2,
     "matrices": [[[1, 0], [0, 0], [0, 0], [0, 0]]],
     "weights": [1.0],            # optional, ensembles only
     "labels": ["a"]}             # optional, POVMs only

Each matrix is row-major, either flat (d*d entries) or nested (d rows of d
entries); every entry is a ``[re, im]`` pair.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .ensembles import UnitaryEnsemble
from .qcore import DensityOperator, Povm, ValidationError


class ParseError(ValueError):
    """Structurally malformed input (as opposed to a violated physical invariant)."""


def _entry(value, where: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ParseError(f"{where}: expected a [re, im] pair of numbers, got {value!r}")
    return complex(value[0], value[1])


def parse_matrix(raw, d: int, where: str = "matrix") -> np.ndarray:
    if not isinstance(raw, list):
        raise ParseError(f"{where}: expected a list, got {type(raw).__name__}")
    # nested rows hold pairs; a flat list holds the pairs directly
    if raw and isinstance(raw[0], list) and raw[0] and isinstance(raw[0][0], list):
        if len(raw) != d:
            raise ParseError(f"{where}: {len(raw)} rows, expected {d}")
        for i, r in enumerate(raw):
            if not isinstance(r, list) or len(r) != d:
                raise ParseError(f"{where}, row {i}: expected {d} entries")
        flat = [e for r in raw for e in r]
    else:
        flat = raw
    if len(flat) != d * d:
        raise ParseError(f"{where}: {len(flat)} entries, expected d*d = {d * d}")
    out = np.array([_entry(v, f"{where}, entry {k}") for k, v in enumerate(flat)], dtype=complex)
    return out.reshape(d, d)


def read_operator_file(path) -> dict:
    """Parse an operator file into ``dimension``, ``matrices`` (N, d, d), ``weights``, ``labels``."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    d = doc.get("dimension")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError(f"{path}: 'dimension' must be a positive integer, got {d!r}")
    mats = doc.get("matrices")
    if not isinstance(mats, list) or not mats:
        raise ParseError(f"{path}: 'matrices' must be a nonempty list")
    stack = np.stack([parse_matrix(m, d, f"{path}: matrix {i}") for i, m in enumerate(mats)])
    weights = doc.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != len(mats):
            raise ParseError(f"{path}: 'weights' must list one number per matrix")
        weights = np.asarray(weights, dtype=float)
    labels = doc.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(mats)):
        raise ParseError(f"{path}: 'labels' must list one label per matrix")
    return {"dimension": d, "matrices": stack, "weights": weights, "labels": labels}


def write_operator_file(path, matrices: Sequence[np.ndarray], weights: Optional[Sequence[float]] = None,
                        labels: Optional[Sequence] = None) -> None:
    mats = [np.asarray(m, dtype=complex) for m in matrices]
    doc = {"dimension": int(mats[0].shape[0]),
           "matrices": [[[float(z.real), float(z.imag)] for z in m.ravel()] for m in mats]}
    if weights is not None:
        doc["weights"] = [float(w) for w in weights]
    if labels is not None:
        doc["labels"] = list(labels)
    Path(path).write_text(json.dumps(doc, indent=1))


def load_state(path) -> DensityOperator:
    doc = read_operator_file(path)
    if len(doc["matrices"]) != 1:
        raise ParseError(f"{path}: a state file holds exactly one matrix, found {len(doc['matrices'])}")
    return DensityOperator.from_matrix(doc["matrices"][0])


def load_povm(path) -> Povm:
    doc = read_operator_file(path)
    return Povm.from_matrices(doc["matrices"], doc["labels"])


def load_ensemble(path, name: str = "explicit") -> UnitaryEnsemble:
    doc = read_operator_file(path)
    if doc["labels"] is not None:
        raise ValidationError("ensemble files take weights, not labels")
    return UnitaryEnsemble.explicit(doc["matrices"], doc["weights"], name=name)

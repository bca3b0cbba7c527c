"""Orbit documents (JSON) and plot-ready trajectory exports (CSV)."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .assembly import Classification
from .boundary import RotationAngle
from .dynamics import MassSystem, PhaseState

SCHEMA_VERSION = 1
CSV_HEADER = ["t"] + [f"q{i}{c}" for i in range(1, 5) for c in "xy"] + [
    f"v{i}{c}" for i in range(1, 5) for c in "xy"
]


@dataclass
class OrbitDocument:
    masses: tuple
    theta: RotationAngle
    T: float
    a_vector: list
    initial_state: PhaseState
    classification: Classification
    samples: list = field(default_factory=list)  # [(t, q (4,2), v (4,2))]
    stability: Optional[dict] = None
    provenance: dict = field(default_factory=dict)
    action: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def mass_system(self) -> MassSystem:
        return MassSystem(tuple(self.masses))

    def to_dict(self) -> dict:
        return dict(
            schema_version=self.schema_version,
            masses=list(self.masses),
            theta=self.theta.to_dict(),
            T=self.T,
            a_vector=[float(x) for x in self.a_vector],
            action=self.action,
            initial_state=dict(q=self.initial_state.q.tolist(), v=self.initial_state.v.tolist()),
            classification=self.classification.to_dict(),
            samples=[dict(t=float(t), q=np.asarray(q).tolist(), v=np.asarray(v).tolist())
                     for t, q, v in self.samples],
            stability=self.stability,
            diagnostics=self.diagnostics,
            provenance=self.provenance,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitDocument":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {version!r}")
        st = d["initial_state"]
        return cls(
            masses=tuple(d["masses"]),
            theta=RotationAngle.from_dict(d["theta"]),
            T=float(d["T"]),
            a_vector=list(d["a_vector"]),
            initial_state=PhaseState(np.array(st["q"]), np.array(st["v"])),
            classification=Classification.from_dict(d["classification"]),
            samples=[(s["t"], np.array(s["q"]), np.array(s["v"])) for s in d.get("samples", [])],
            stability=d.get("stability"),
            provenance=d.get("provenance", {}),
            action=d.get("action"),
            diagnostics=d.get("diagnostics", {}),
        )


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_document(doc: OrbitDocument, path) -> None:
    # json writes floats with repr, which round-trips binary64 exactly
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc.to_dict(), fh, indent=1, allow_nan=False)
    os.replace(tmp, path)


def read_document(path) -> OrbitDocument:
    with open(path) as fh:
        return OrbitDocument.from_dict(json.load(fh))


def export_csv(doc: OrbitDocument, path) -> int:
    """Write one row per sample; returns the row count."""
    if not doc.samples:
        raise ValueError("document has no samples")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for t, q, v in doc.samples:
            w.writerow([repr(float(t))] + [repr(float(x)) for x in np.ravel(q)]
                       + [repr(float(x)) for x in np.ravel(v)])
    return len(doc.samples)


def read_csv(path):
    """``(t, q, v)`` arrays from an exported CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    n = len(data)
    return data[:, 0], data[:, 1:9].reshape(n, 4, 2), data[:, 9:17].reshape(n, 4, 2)

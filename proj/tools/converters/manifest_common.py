"""Shared writer for the normalized manifest CSV.

Columns: image_path,image_id,reference_id,kinds,levels,score,polarity,database
``kinds`` and ``levels`` are ``+``-joined ordered lists. Reference rows carry
their own id as ``reference_id`` and leave kinds, levels and score empty.
Image paths are written relative to the manifest's directory when possible.
"""

import csv
import os
from dataclasses import dataclass, field
from typing import List, Optional

HEADER = ["image_path", "image_id", "reference_id", "kinds", "levels", "score", "polarity", "database"]


@dataclass
class Row:
    image_path: str
    image_id: str
    reference_id: str
    kinds: List[str] = field(default_factory=list)
    levels: List[int] = field(default_factory=list)
    score: Optional[float] = None


def reference_row(path: str, ref_id: str) -> Row:
    return Row(path, ref_id, ref_id)


def write_manifest(out_path: str, rows: List[Row], polarity: str, database: str) -> None:
    if polarity not in ("mos", "dmos"):
        raise ValueError(f"polarity must be 'mos' or 'dmos', got {polarity!r}")
    ids = set()
    refs = {r.image_id for r in rows if r.image_id == r.reference_id}
    for r in rows:
        if r.image_id in ids:
            raise ValueError(f"duplicate image id {r.image_id!r}")
        ids.add(r.image_id)
        if r.reference_id not in refs:
            raise ValueError(f"{r.image_id!r} references unknown reference {r.reference_id!r}")
        if r.levels and len(r.levels) != len(r.kinds):
            raise ValueError(f"{r.image_id!r}: kinds/levels length mismatch")

    base = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(base, exist_ok=True)
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            path = os.path.abspath(r.image_path)
            try:
                path = os.path.relpath(path, base)
            except ValueError:
                pass
            w.writerow([
                path.replace(os.sep, "/"),
                r.image_id,
                r.reference_id,
                "+".join(k.lower() for k in r.kinds),
                "+".join(str(v) for v in r.levels),
                "" if r.score is None else repr(float(r.score)),
                polarity,
                database,
            ])


def find_case_insensitive(directory: str, name: str) -> str:
    """Vendor archives differ in file-name case across releases."""
    direct = os.path.join(directory, name)
    if os.path.exists(direct):
        return direct
    lowered = name.lower()
    for entry in os.listdir(directory):
        if entry.lower() == lowered:
            return os.path.join(directory, entry)
    raise FileNotFoundError(os.path.join(directory, name))


def stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]

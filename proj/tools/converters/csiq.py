#!/usr/bin/env python3
"""CSIQ database -> normalized manifest.

Assumed layout under ROOT:

    src_imgs/<ref>.png                          30 references
    dst_imgs/<type dir>/<ref>.<TYPE>.<level>.png
    csiq_dmos.csv                               the "all_by_image" sheet of
                                                csiq.DMOS.xlsx exported as CSV

The CSV must contain the columns ``image``, ``dst_type``, ``dst_lev`` and
``dmos``. ``dst_type`` is one of: noise, jpeg, jpeg 2000, fnoise, blur,
contrast. Images are located by scanning ``dst_imgs`` for a file whose name
matches ``<image>.<any type tag>.<level>.png`` in the matching type directory,
so the capitalisation differences between releases do not matter.

Usage: csiq.py ROOT OUT.csv [--scores csiq_dmos.csv]
"""

import argparse
import csv
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from manifest_common import Row, reference_row, stem, write_manifest  # noqa: E402

# dst_type -> (kind written to the manifest, directory under dst_imgs)
TYPES = {
    "noise": ("awgn", "awgn"),
    "jpeg": ("jpeg", "jpeg"),
    "jpeg 2000": ("jp2k", "jpeg2000"),
    "fnoise": ("fnoise", "fnoise"),
    "blur": ("gblur", "blur"),
    "contrast": ("contrast", "contrast"),
}


def index_directory(directory):
    """Map (reference, level) -> file path for one distortion directory."""
    found = {}
    for name in os.listdir(directory):
        parts = name.split(".")
        if len(parts) >= 4 and parts[-1].lower() == "png" and parts[-2].isdigit():
            found[(parts[0].lower(), int(parts[-2]))] = os.path.join(directory, name)
    return found


def convert(root, scores_csv):
    rows = []
    src = os.path.join(root, "src_imgs")
    refs = {}
    for name in sorted(os.listdir(src)):
        if name.lower().endswith(".png"):
            refs[stem(name).lower()] = stem(name)
            rows.append(reference_row(os.path.join(src, name), stem(name)))

    indexes = {}
    with open(scores_csv, newline="") as f:
        for rec in csv.DictReader(f):
            dst_type = rec["dst_type"].strip().lower()
            if dst_type not in TYPES:
                raise ValueError(f"unknown CSIQ distortion type {rec['dst_type']!r}")
            kind, dirname = TYPES[dst_type]
            ref_key = str(rec["image"]).strip().lower()
            level = int(float(rec["dst_lev"]))
            if dirname not in indexes:
                indexes[dirname] = index_directory(os.path.join(root, "dst_imgs", dirname))
            path = indexes[dirname].get((ref_key, level))
            if path is None:
                raise FileNotFoundError(f"no image for {ref_key} {dst_type} level {level}")
            ref_id = refs[ref_key]
            rows.append(Row(path, f"{ref_id}_{kind}_{level}", ref_id, [kind], [level], float(rec["dmos"])))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("out")
    ap.add_argument("--scores", default="csiq_dmos.csv")
    args = ap.parse_args(argv)
    rows = convert(args.root, os.path.join(args.root, args.scores))
    write_manifest(args.out, rows, "dmos", "CSIQ")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()

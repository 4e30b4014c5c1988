#!/usr/bin/env python3
"""LIVE Multiply Distorted (LIVEMD) -> normalized manifest.

Assumed layout under ROOT:

    Part 1/ and Part 2/
        <image files>                 references and distorted images side by side
        index.csv                     one row per image with columns
                                      image, reference, blur, second, dmos

``index.csv`` is exported from each part's score file. ``blur`` and
``second`` are level indices 0..3 where 0 means the distortion is absent;
``second`` is JPEG in Part 1 and white noise in Part 2. Rows with both
levels at 0 are references. The blur is applied first in both parts, so a
combined image is written with kinds ``gblur+jpeg`` or ``gblur+awgn`` and the
matching ``+``-joined levels; singly distorted images keep one kind.

Usage: livemd.py ROOT OUT.csv
"""

import argparse
import csv
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from manifest_common import Row, find_case_insensitive, reference_row, stem, write_manifest  # noqa: E402

PARTS = [("Part 1", "p1", "jpeg"), ("Part 2", "p2", "awgn")]


def convert(root):
    rows, refs_seen = [], set()
    for dirname, tag, second_kind in PARTS:
        part = os.path.join(root, dirname)
        with open(os.path.join(part, "index.csv"), newline="") as f:
            records = list(csv.DictReader(f))
        for rec in records:
            blur, second = int(rec["blur"]), int(rec["second"])
            ref_id = f"{tag}_{stem(rec['reference'])}"
            path = find_case_insensitive(part, rec["image"].strip())
            if blur == 0 and second == 0:
                if ref_id not in refs_seen:
                    refs_seen.add(ref_id)
                    rows.append(reference_row(path, ref_id))
                continue
            kinds, levels = [], []
            if blur:
                kinds.append("gblur")
                levels.append(blur)
            if second:
                kinds.append(second_kind)
                levels.append(second)
            rows.append(Row(path, f"{tag}_{stem(rec['image'])}", ref_id, kinds, levels, float(rec["dmos"])))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("out")
    args = ap.parse_args(argv)
    rows = convert(args.root)
    write_manifest(args.out, rows, "dmos", "LIVEMD")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()

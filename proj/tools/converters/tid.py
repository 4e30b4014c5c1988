#!/usr/bin/env python3
"""TID2008 / TID2013 -> normalized manifest.

Assumed layout under ROOT (both releases):

    reference_images/I<rr>.BMP            25 references
    distorted_images/i<rr>_<tt>_<l>.bmp   type tt (01..17 or 01..24), level l
    mos_with_names.txt                    "<mos> <distorted file name>" per line

MOS is higher-is-better. Kinds are written as ``t<tt>`` (for example ``t01``
for additive Gaussian noise) since the two releases share the first 17 codes.

Usage: tid.py ROOT OUT.csv --database TID2008|TID2013
"""

import argparse
import os
import re
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from manifest_common import Row, find_case_insensitive, reference_row, stem, write_manifest  # noqa: E402

NAME = re.compile(r"^i(\d+)_(\d+)_(\d+)\.bmp$", re.IGNORECASE)
TYPE_COUNT = {"TID2008": 17, "TID2013": 24}


def convert(root, database):
    rows = []
    ref_dir = os.path.join(root, "reference_images")
    refs = {}
    for name in sorted(os.listdir(ref_dir)):
        m = re.match(r"^i(\d+)\.bmp$", name, re.IGNORECASE)
        if m:
            ref_id = f"I{int(m.group(1)):02d}"
            refs[int(m.group(1))] = ref_id
            rows.append(reference_row(os.path.join(ref_dir, name), ref_id))

    dist_dir = os.path.join(root, "distorted_images")
    with open(os.path.join(root, "mos_with_names.txt")) as f:
        for line in f:
            parts = line.split()
            if len(parts) < 2:
                continue
            score, name = float(parts[0]), parts[1]
            m = NAME.match(name)
            if not m:
                raise ValueError(f"unexpected TID file name {name!r}")
            ref, kind, level = (int(g) for g in m.groups())
            if kind > TYPE_COUNT[database]:
                raise ValueError(f"distortion type {kind} outside {database}")
            rows.append(Row(find_case_insensitive(dist_dir, name), stem(name).lower(), refs[ref],
                            [f"t{kind:02d}"], [level], score))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("out")
    ap.add_argument("--database", choices=sorted(TYPE_COUNT), required=True)
    args = ap.parse_args(argv)
    rows = convert(args.root, args.database)
    write_manifest(args.out, rows, "mos", args.database)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()

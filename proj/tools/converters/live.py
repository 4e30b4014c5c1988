#!/usr/bin/env python3
"""LIVE Image Quality Assessment Database (release 2) -> normalized manifest.

Assumed layout under ROOT:

    refimgs/<name>.bmp                29 references
    jp2k/ jpeg/ wn/ gblur/ fastfading/
        img<N>.bmp                    distorted images
        info.txt                      "<reference>.bmp img<N>.bmp <parameter>" per line
    dmos.mat                          variables ``dmos`` and ``orgs`` (1 x 982)

``dmos.mat`` is indexed in folder order jp2k (227), jpeg (233), wn (174),
gblur (174), fastfading (174), each block in ``img<N>`` order. Entries flagged
in ``orgs`` are reference copies and are skipped, leaving 779 distorted rows.

Kinds are written as jp2k, jpeg, awgn, gblur, fastfading. LIVE has no
discrete severity ladder, so levels are the 1-based rank of the distortion
parameter within (reference, kind), ordered from mildest to strongest.

Usage: live.py ROOT OUT.csv [--dmos-file dmos.mat]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from manifest_common import Row, find_case_insensitive, reference_row, stem, write_manifest  # noqa: E402

FOLDERS = [("jp2k", "jp2k", 227), ("jpeg", "jpeg", 233), ("wn", "awgn", 174),
           ("gblur", "gblur", 174), ("fastfading", "fastfading", 174)]

# Parameter direction per folder: True when a larger value means stronger distortion.
# JP2K/JPEG parameters are bit rates, fast fading is a channel SNR.
LARGER_IS_STRONGER = {"jp2k": False, "jpeg": False, "wn": True, "gblur": True, "fastfading": False}


def load_scores(path):
    from scipy.io import loadmat

    mat = loadmat(path)
    dmos = [float(v) for v in mat["dmos"].ravel()]
    orgs = [int(v) for v in mat["orgs"].ravel()]
    if len(dmos) != len(orgs):
        raise ValueError("dmos and orgs lengths differ")
    return dmos, orgs


def parse_info(folder):
    entries = []
    with open(os.path.join(folder, "info.txt")) as f:
        for line in f:
            parts = line.split()
            if len(parts) >= 3:
                entries.append((parts[0], parts[1], float(parts[2])))
    return entries


def convert(root, dmos, orgs):
    rows = []
    ref_dir = os.path.join(root, "refimgs")
    for name in sorted(os.listdir(ref_dir)):
        if name.lower().endswith(".bmp"):
            rows.append(reference_row(os.path.join(ref_dir, name), stem(name)))

    offset = 0
    for folder, kind, count in FOLDERS:
        path = os.path.join(root, folder)
        info = {img: (ref, p) for ref, img, p in parse_info(path)}
        grouped = {}
        for n in range(1, count + 1):
            img = f"img{n}.bmp"
            idx = offset + n - 1
            if idx >= len(dmos):
                raise ValueError(f"score vector shorter than expected at {folder}/{img}")
            if orgs[idx] or img not in info:
                continue
            ref, param = info[img]
            grouped.setdefault(stem(ref), []).append((param, img, dmos[idx]))
        for ref_id, items in sorted(grouped.items()):
            items.sort(key=lambda t: t[0], reverse=not LARGER_IS_STRONGER[folder])
            for level, (_, img, score) in enumerate(items, start=1):
                rows.append(Row(find_case_insensitive(path, img), f"{folder}_{stem(img)}", ref_id,
                                [kind], [level], score))
        offset += count
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("out")
    ap.add_argument("--dmos-file", default="dmos.mat")
    args = ap.parse_args(argv)
    dmos, orgs = load_scores(os.path.join(args.root, args.dmos_file))
    rows = convert(args.root, dmos, orgs)
    write_manifest(args.out, rows, "dmos", "LIVE")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Builds miniature vendor layouts and runs every converter on them.

Writes live.csv, csiq.csv, tid2008.csv, tid2013.csv and livemd.csv into OUT.
Image files are empty placeholders; only names and scores matter here.
"""

import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
CONVERTERS = os.path.join(HERE, "..", "..", "tools", "converters")


def touch(path):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    open(path, "wb").close()


def run(script, *args):
    subprocess.run([sys.executable, os.path.join(CONVERTERS, script), *args], check=True)


def fake_live(root):
    import numpy as np
    from scipy.io import savemat

    refs = [f"ref{i:02d}" for i in range(29)]
    for r in refs:
        touch(os.path.join(root, "refimgs", f"{r}.bmp"))
    # Keeping 155 + 4 * 156 = 779 images per folder prefix leaves at most 7 per reference and kind.
    folders = [("jp2k", 227, 155), ("jpeg", 233, 156), ("wn", 174, 156), ("gblur", 174, 156), ("fastfading", 174, 156)]
    dmos, orgs = [], []
    for folder, count, kept in folders:
        lines = []
        for n in range(1, count + 1):
            touch(os.path.join(root, folder, f"img{n}.bmp"))
            lines.append(f"{refs[(n - 1) % 29]}.bmp img{n}.bmp {n * 0.5}")
            dmos.append(float(n))
            orgs.append(0 if n <= kept else 1)
        with open(os.path.join(root, folder, "info.txt"), "w") as f:
            f.write("\n".join(lines) + "\n")
    savemat(os.path.join(root, "dmos.mat"), {"dmos": np.array([dmos]), "orgs": np.array([orgs])})


def fake_csiq(root):
    rows = ["image,dst_idx,dst_type,dst_lev,dmos_std,dmos"]
    tags = {"noise": ("awgn", "AWGN"), "blur": ("blur", "BLUR"), "jpeg 2000": ("jpeg2000", "jpeg2000")}
    for ref in ["1600", "fisher"]:
        touch(os.path.join(root, "src_imgs", f"{ref}.png"))
        for t, (d, tag) in tags.items():
            for lev in range(1, 4):
                touch(os.path.join(root, "dst_imgs", d, f"{ref}.{tag}.{lev}.png"))
                rows.append(f"{ref},0,{t},{lev},0.01,{lev / 10}")
    with open(os.path.join(root, "csiq_dmos.csv"), "w") as f:
        f.write("\n".join(rows) + "\n")


def fake_tid(root, types, levels):
    lines = []
    for ref in (1, 2):
        touch(os.path.join(root, "reference_images", f"I{ref:02d}.BMP"))
        for t in range(1, types + 1):
            for lev in range(1, levels + 1):
                name = f"i{ref:02d}_{t:02d}_{lev}.bmp"
                touch(os.path.join(root, "distorted_images", name))
                lines.append(f"{6 - lev * 0.5} {name}")
    with open(os.path.join(root, "mos_with_names.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def fake_livemd(root):
    for part in ("Part 1", "Part 2"):
        rows = ["image,reference,blur,second,dmos"]
        for ref in ("cactus", "lake"):
            touch(os.path.join(root, part, f"{ref}.bmp"))
            rows.append(f"{ref}.bmp,{ref}.bmp,0,0,0")
            for b in range(4):
                for s in range(4):
                    if b or s:
                        name = f"{ref}_b{b}_s{s}.bmp"
                        touch(os.path.join(root, part, name))
                        rows.append(f"{name},{ref}.bmp,{b},{s},{b * 10 + s}")
        with open(os.path.join(root, part, "index.csv"), "w") as f:
            f.write("\n".join(rows) + "\n")


def main():
    out = os.path.abspath(sys.argv[1])
    os.makedirs(out, exist_ok=True)
    fake_live(os.path.join(out, "live"))
    run("live.py", os.path.join(out, "live"), os.path.join(out, "live.csv"))
    fake_csiq(os.path.join(out, "csiq"))
    run("csiq.py", os.path.join(out, "csiq"), os.path.join(out, "csiq.csv"))
    fake_tid(os.path.join(out, "tid2008"), 17, 4)
    run("tid.py", os.path.join(out, "tid2008"), os.path.join(out, "tid2008.csv"), "--database", "TID2008")
    fake_tid(os.path.join(out, "tid2013"), 24, 5)
    run("tid.py", os.path.join(out, "tid2013"), os.path.join(out, "tid2013.csv"), "--database", "TID2013")
    fake_livemd(os.path.join(out, "livemd"))
    run("livemd.py", os.path.join(out, "livemd"), os.path.join(out, "livemd.csv"))


if __name__ == "__main__":
    main()

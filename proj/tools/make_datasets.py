#!/usr/bin/env python3
"""Regenerate the LIBSVM files under data/.

mpg / mpg_scale
    UCI Auto-MPG, rows with a missing target or horsepower dropped (392 rows,
    7 features: cylinders, displacement, horsepower, weight, acceleration,
    model year, origin). Source table: the cars.json shipped with the
    ``vega_datasets`` wheel. ``mpg_scale`` maps every feature to [-1, 1] with
    min/max over all rows, as ``svm-scale`` does by default.

liver-disorders_scale.train / liver-disorders_scale.val
    BUPA liver disorders (345 rows, the bupa.dat shipped with the ``keel-ds``
    wheel, same row order as UCI). Features are the five blood tests; the
    label is +1 when ``drinks`` >= 3 and -1 otherwise; the selector column is
    dropped. Features are scaled to [-1, 1] over all rows, then the first 145
    rows form the training file and the remaining 200 the validation file.

wdbc_scale.train / wdbc_scale.val
    Wisconsin diagnostic breast cancer (scikit-learn copy), features scaled to
    [-1, 1], labels benign=+1 / malignant=-1, shuffled with a fixed seed and
    split 145 train / 200 validation.

Usage: make_datasets.py CARS_JSON BUPA_DAT OUT_DIR
"""

import json
import sys
from pathlib import Path

import numpy as np

ORIGIN = {"USA": 1, "Europe": 2, "Japan": 3}


def fmt(v):
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def write_libsvm(path, features, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for row, label in zip(features, labels):
            cells = [fmt(label)]
            cells += [f"{j + 1}:{fmt(v)}" for j, v in enumerate(row) if v != 0]
            out.write(" ".join(cells) + "\n")


def minmax_scale(features):
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.where(hi > lo, -1.0 + 2.0 * (features - lo) / span, 0.0)


def main():
    cars_json, bupa_dat, out_dir = Path(sys.argv[1]), Path(sys.argv[2]), Path(sys.argv[3])
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = json.loads(cars_json.read_text())
    rows = [r for r in rows if r["Miles_per_Gallon"] is not None and r["Horsepower"] is not None]
    feats = np.array(
        [
            [
                r["Cylinders"],
                r["Displacement"],
                r["Horsepower"],
                r["Weight_in_lbs"],
                r["Acceleration"],
                int(r["Year"][:4]) - 1900,
                ORIGIN[r["Origin"]],
            ]
            for r in rows
        ],
        dtype=float,
    )
    target = np.array([r["Miles_per_Gallon"] for r in rows], dtype=float)
    write_libsvm(out_dir / "mpg", feats, target)
    write_libsvm(out_dir / "mpg_scale", np.round(minmax_scale(feats), 6), target)

    bupa = np.array(
        [[float(v) for v in line.split(",")] for line in bupa_dat.read_text().splitlines() if line.strip()]
    )
    liver_x = np.round(minmax_scale(bupa[:, :5]), 6)
    liver_y = np.where(bupa[:, 5] >= 3, 1.0, -1.0)
    write_libsvm(out_dir / "liver-disorders_scale.train", liver_x[:145], liver_y[:145])
    write_libsvm(out_dir / "liver-disorders_scale.val", liver_x[145:], liver_y[145:])

    from sklearn.datasets import load_breast_cancer

    bc = load_breast_cancer()
    x = np.round(minmax_scale(bc.data), 6)
    y = np.where(bc.target == 1, 1.0, -1.0)
    order = np.random.RandomState(0).permutation(len(y))
    train, val = order[:145], order[145:345]
    write_libsvm(out_dir / "wdbc_scale.train", x[train], y[train])
    write_libsvm(out_dir / "wdbc_scale.val", x[val], y[val])


if __name__ == "__main__":
    main()

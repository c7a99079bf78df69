"""Build the bundled mini-corpus of labeled outlier-detection datasets.

Each dataset follows the usual ODDS recipe: one or more majority classes are
kept as inliers and a minority class, downsampled deterministically (first
rows in source order), becomes the outlier class. Output is one CSV per
dataset with numeric features and a final `outlier` column in {0, 1}.

Sources are bundled with scikit-learn and the `rdatasets` wheel, so this
script runs offline.
"""

import os
import sys

import numpy as np
import pandas as pd
from sklearn import datasets as skd

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "minicorpus")


def rd(pkg, name):
    import rdatasets

    return rdatasets.data(pkg, name).drop(columns=["rownames"], errors="ignore")


def compose(features, is_outlier_class, n_out, inlier_mask=None):
    features = features.reset_index(drop=True)
    is_outlier_class = np.asarray(is_outlier_class)
    if inlier_mask is None:
        inlier_mask = ~is_outlier_class
    inl = np.flatnonzero(np.asarray(inlier_mask))
    out = np.flatnonzero(is_outlier_class)[:n_out]
    idx = np.sort(np.concatenate([inl, out]))
    df = features.iloc[idx].copy()
    df["outlier"] = is_outlier_class[idx].astype(int)
    return df


def wine():
    b = skd.load_wine(as_frame=True)
    return compose(b.data, b.target.values == 0, 10)


def wdbc():
    b = skd.load_breast_cancer(as_frame=True)
    # sklearn: 0 = malignant
    return compose(b.data, b.target.values == 0, 10)


def iris():
    b = skd.load_iris(as_frame=True)
    return compose(b.data, b.target.values == 2, 10)


def digits():
    b = skd.load_digits(as_frame=True)
    y = b.target.values
    keep = np.zeros(len(y), dtype=bool)
    for d in range(1, 10):
        keep[np.flatnonzero(y == d)[:60]] = True
    return compose(b.data, y == 0, 10, inlier_mask=keep)


def glass():
    d = rd("MASS", "fgl")
    return compose(d.drop(columns=["type"]), d["type"].values == "Tabl", 9)


def wbc():
    d = rd("MASS", "biopsy").dropna()
    feats = d.drop(columns=["ID", "class"]).reset_index(drop=True)
    cls = d["class"].values
    keep = np.zeros(len(cls), dtype=bool)
    keep[np.flatnonzero(cls == "benign")[:213]] = True
    return compose(feats, cls == "malignant", 10, inlier_mask=keep)


def pima():
    d = pd.concat([rd("MASS", "Pima.tr"), rd("MASS", "Pima.te")], ignore_index=True)
    return compose(d.drop(columns=["type"]), d["type"].values == "Yes", 10**9)


def penguins():
    d = rd("palmerpenguins", "penguins")
    d = d.dropna(subset=["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g"])
    feats = d[["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g"]]
    return compose(feats, d["species"].values == "Chinstrap", 10)


def diabetes():
    d = rd("heplots", "Diabetes")
    return compose(d.drop(columns=["group"]), d["group"].values == "Overt_Diabetic", 10)


def cells():
    d = rd("modeldata", "cells")
    feats = d.drop(columns=["case", "class"]).reset_index(drop=True)
    cls = d["class"].values
    keep = np.zeros(len(cls), dtype=bool)
    keep[np.flatnonzero(cls == "PS")[:600]] = True
    return compose(feats, cls == "WS", 30, inlier_mask=keep)


BUILDERS = {
    "cells": cells,
    "diabetes": diabetes,
    "digits": digits,
    "glass": glass,
    "iris": iris,
    "penguins": penguins,
    "pima": pima,
    "wbc": wbc,
    "wdbc": wdbc,
    "wine": wine,
}


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, build in BUILDERS.items():
        df = build()
        df.columns = [str(c).replace(" ", "_") for c in df.columns]
        path = os.path.join(OUT, f"{name}.csv")
        df.to_csv(path, index=False, float_format="%.10g")
        print(f"{name}: n={len(df)} d={df.shape[1] - 1} outliers={df['outlier'].mean() * 100:.2f}%", file=sys.stderr)


if __name__ == "__main__":
    main()

"""Seeded synthetic stand-ins for tabular clinical data.

``make_hlh_like`` produces 101 patients x 13 laboratory-style numeric
variables with a binary six-month survival outcome. The outcome depends
non-linearly on platelet count (sharp risk below ~20 G/l, plateau above),
on prolonged APTT (above ~40 s), on age, bilirubin and haemoglobin, so
different model families pick up the effects differently.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .data import Dataset, VariableKind, VariableMeta, load_csv, write_csv

HLH_VARIABLES = ("ALT", "ANC", "APTT", "AST", "Age", "Bilirubin", "CRP", "Ferritin",
                 "Fibronectin", "Fluid", "Hb", "PLT", "RBC")
HLH_SEED = 2024
HLH_TARGET = "survival_6m"
HLH_FILE = "hlh_synthetic.csv"


def make_hlh_like(seed: int = HLH_SEED, n: int = 101) -> Dataset:
    rng = np.random.default_rng(seed)
    cols = {
        "ALT": np.round(rng.lognormal(4.2, 0.8, n), 0),
        "ANC": np.round(rng.lognormal(0.6, 0.9, n), 2),
        "APTT": np.round(rng.normal(38.0, 9.0, n).clip(22.0, 90.0), 1),
        "AST": np.round(rng.lognormal(4.5, 0.9, n), 0),
        "Age": np.round(rng.uniform(18.0, 85.0, n), 0),
        "Bilirubin": np.round(rng.lognormal(0.6, 0.9, n), 2),
        "CRP": np.round(rng.lognormal(4.0, 0.8, n), 1),
        "Ferritin": np.round(rng.lognormal(8.5, 1.3, n), 0),
        "Fibronectin": np.round(rng.normal(2.5, 1.0, n).clip(0.3, 6.0), 2),
        "Fluid": rng.integers(0, 2, n).astype(float),
        "Hb": np.round(rng.normal(9.5, 1.8, n).clip(5.0, 15.0), 1),
        "PLT": np.round(rng.lognormal(3.8, 1.0, n).clip(3.0, 450.0), 0),
        "RBC": np.round(rng.normal(3.3, 0.6, n).clip(1.8, 5.5), 2),
    }
    plt_effect = 2.2 * np.tanh((cols["PLT"] - 20.0) / 12.0)
    aptt_effect = -1.6 / (1.0 + np.exp(-(cols["APTT"] - 40.0) / 2.5))
    margin = (
        0.6
        + plt_effect
        + aptt_effect
        - 0.035 * (cols["Age"] - 50.0)
        - 0.45 * np.log(cols["Bilirubin"])
        + 0.25 * (cols["Hb"] - 9.5)
        - 0.3 * cols["Fluid"]
    )
    prob = 1.0 / (1.0 + np.exp(-margin))
    y = (rng.uniform(size=n) < prob).astype(np.int64)
    rows = np.column_stack([cols[v] for v in HLH_VARIABLES])
    variables = tuple(
        VariableMeta(v, VariableKind.NUMERIC, (float(rows[:, j].min()), float(rows[:, j].max())))
        for j, v in enumerate(HLH_VARIABLES)
    )
    return Dataset("hlh_synthetic", rows, y, variables, HLH_TARGET, ("died", "survived"))


def hlh_csv_path() -> Path:
    return Path(str(resources.files("rashomon_detect") / "data" / HLH_FILE))


def load_hlh_like() -> Dataset:
    return load_csv(hlh_csv_path(), HLH_TARGET, name="hlh_synthetic")


def write_hlh_like(path: str | Path, seed: int = HLH_SEED) -> None:
    write_csv(make_hlh_like(seed), path)

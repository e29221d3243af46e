"""Seeded synthetic vehicle dataset for desk-scale runs and tests.

CO2 (g/km) is a smooth function of kerb mass and engine displacement plus a
per-fuel offset and Gaussian noise (sigma 2 g/km). A manufacturer column
carries no signal, and a small fraction of cells are blanked so the
null-row cleaning step has something to do.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dataset import ColumnSchema, save_schema

FUELS = ("diesel", "e85", "hybrid", "lpg", "petrol")
FUEL_PROBS = (0.35, 0.05, 0.1, 0.05, 0.45)
FUEL_OFFSET = {"diesel": -12.0, "e85": -5.0, "hybrid": -35.0, "lpg": -8.0, "petrol": 0.0}
EURO = ("euro4", "euro5", "euro6")
MAKERS = ("alfa", "bmw", "citroen", "dacia", "fiat", "ford", "kia", "opel", "renault", "skoda")
NOISE_SIGMA = 2.0

SCHEMA = (
    ColumnSchema("mass_kg", "numeric"),
    ColumnSchema("engine_cc", "numeric"),
    ColumnSchema("power_kw", "numeric"),
    ColumnSchema("fuel_type", "nominal"),
    ColumnSchema("manufacturer", "nominal"),
    ColumnSchema("euro_standard", "ordinal", EURO),
    ColumnSchema("co2_g_km", "target"),
)
HEADER = ("id",) + tuple(c.name for c in SCHEMA)


def co2_signal(mass, engine_cc, fuel):
    """Noise-free emission level in g/km."""
    mass = np.asarray(mass, dtype=np.float64)
    cc = np.asarray(engine_cc, dtype=np.float64)
    offset = np.array([FUEL_OFFSET[f] for f in np.atleast_1d(fuel)])
    return (40.0 + 0.05 * mass + 0.02 * cc + 4e-6 * (cc - 2000.0) ** 2
            + 6.0 * np.sin(mass / 300.0) + offset)


def generate(n: int, seed: int = 0, missing_rate: float = 0.01) -> list[list[str]]:
    """Rows of CSV cells (strings), without header."""
    rng = np.random.default_rng(seed)
    mass = rng.uniform(900.0, 2500.0, n)
    cc = np.clip(800.0 + 0.9 * (mass - 900.0) + rng.normal(0.0, 250.0, n), 900.0, 5000.0)
    power = np.clip(0.055 * cc + rng.normal(0.0, 12.0, n), 40.0, None)
    fuel = rng.choice(FUELS, size=n, p=FUEL_PROBS)
    maker = rng.choice(MAKERS, size=n)
    euro = rng.choice(EURO, size=n, p=(0.15, 0.35, 0.5))
    co2 = co2_signal(mass, cc, fuel) + rng.normal(0.0, NOISE_SIGMA, n)
    rows = []
    for i in range(n):
        rows.append([str(i), f"{mass[i]:.0f}", f"{cc[i]:.0f}", f"{power[i]:.1f}",
                     str(fuel[i]), str(maker[i]), str(euro[i]), f"{co2[i]:.2f}"])
    blank = rng.random(n) < missing_rate
    cols = rng.integers(1, len(HEADER), size=n)
    for i in np.flatnonzero(blank):
        rows[i][cols[i]] = ""
    return rows


def write_dataset(csv_path, n: int, seed: int = 0, schema_path=None, missing_rate: float = 0.01):
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(generate(n, seed, missing_rate))
    if schema_path is not None:
        save_schema(SCHEMA, schema_path)
    return csv_path

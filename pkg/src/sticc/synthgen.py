"""Synthetic benchmark: ten rectangular regions drawn from seven clusters.

Attribute distributions per cluster (mean, standard deviation), attributes A..E:

    cluster  A      B      C        D           E
    0        4, 1   1, 3   80, 20   1000, 350   999, 3
    1        5, 1   7, 3   30, 20    900, 350   992, 3
    2        6, 1   2, 3   20, 20    600, 350  1005, 3
    3        1, 1   3, 3  100, 20    700, 350  1003, 3
    4        3, 1   6, 3   60, 20    800, 350   999, 3
    5        7, 1   4, 3   70, 20    400, 350   998, 3
    6        2, 1   5, 3   40, 20    500, 350  1008, 3
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import GeoDataset

ATTR_NAMES = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class ClusterAttrSpec:
    mu: tuple[float, ...]
    theta: tuple[float, ...]

    def __post_init__(self):
        if len(self.mu) != len(self.theta):
            raise ValueError("mu and theta must have equal length")
        if any(t <= 0 for t in self.theta):
            raise ValueError("theta must be positive")


CLUSTER_ATTRS = (
    ClusterAttrSpec((4, 1, 80, 1000, 999), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((5, 7, 30, 900, 992), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((6, 2, 20, 600, 1005), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((1, 3, 100, 700, 1003), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((3, 6, 60, 800, 999), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((7, 4, 70, 400, 998), (1, 3, 20, 350, 3)),
    ClusterAttrSpec((2, 5, 40, 500, 1008), (1, 3, 20, 350, 3)),
)


@dataclass(frozen=True)
class RegionSpec:
    id: int
    cluster: int
    rect: tuple[float, float, float, float]  # x0, y0, x1, y1
    point_count: int
    density: str = "uniform"                 # or "gradient"

    def __post_init__(self):
        x0, y0, x1, y1 = self.rect
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"region {self.id}: degenerate rectangle {self.rect}")
        if self.point_count < 1:
            raise ValueError(f"region {self.id}: point_count must be >= 1")
        if self.density not in ("uniform", "gradient"):
            raise ValueError(f"region {self.id}: unknown density {self.density!r}")


def default_layout() -> list[RegionSpec]:
    """Ten regions on a 10500 x 7500 canvas.

    Repeats: R1/R4, R2/R10 and R3/R9 share clusters without touching.  R5
    and R6 touch (both with a density gradient), R7 touches R9 at a similar
    density and R8 at a much lower one, R5 sits just below R2 across a gap.
    """
    return [
        RegionSpec(1, 0, (0, 5000, 2500, 7500), 130, "uniform"),
        RegionSpec(2, 1, (3000, 5500, 5000, 7500), 120, "uniform"),
        RegionSpec(3, 2, (5500, 5000, 7500, 7500), 120, "uniform"),
        RegionSpec(4, 0, (8000, 5000, 10500, 7500), 120, "uniform"),
        RegionSpec(5, 3, (3000, 2500, 5250, 5000), 140, "gradient"),
        RegionSpec(6, 4, (5250, 2500, 7500, 5000), 140, "gradient"),
        RegionSpec(7, 5, (2000, 0, 4000, 2000), 110, "uniform"),
        RegionSpec(8, 6, (4000, 0, 7500, 2000), 100, "uniform"),
        RegionSpec(9, 2, (0, 0, 2000, 2000), 110, "uniform"),
        RegionSpec(10, 1, (8000, 0, 10500, 2500), 120, "uniform"),
    ]


def _gradient_unit(u: np.ndarray, ratio: float = 4.0) -> np.ndarray:
    # inverse CDF of density proportional to 1 + (ratio - 1) * t on [0, 1]
    a = ratio - 1.0
    return (-1.0 + np.sqrt(1.0 + a * (2.0 + a) * u)) / a


def generate(regions, attrs=CLUSTER_ATTRS, seed: int = 0) -> tuple[GeoDataset, np.ndarray]:
    regions = list(regions)
    if not regions:
        raise ValueError("at least one region is required")
    for r in regions:
        if not 0 <= r.cluster < len(attrs):
            raise ValueError(f"region {r.id} references unknown cluster {r.cluster}")
    rng = np.random.default_rng(seed)
    coords, values, truth = [], [], []
    for r in regions:
        x0, y0, x1, y1 = r.rect
        n = r.point_count
        ux, uy = rng.random(n), rng.random(n)
        if r.density == "gradient":
            ux = _gradient_unit(ux)
        coords.append(np.column_stack([x0 + ux * (x1 - x0), y0 + uy * (y1 - y0)]))
        spec = attrs[r.cluster]
        values.append(rng.normal(spec.mu, spec.theta, size=(n, len(spec.mu))))
        truth.append(np.full(n, r.cluster, dtype=np.int64))
    coords = np.vstack(coords)
    values = np.vstack(values)
    truth = np.concatenate(truth)
    D = values.shape[1]
    names = ATTR_NAMES if D == len(ATTR_NAMES) else tuple(f"a{i}" for i in range(D))
    ds = GeoDataset(np.arange(len(truth)), coords, values, names)
    return ds, truth


class LayoutError(ValueError):
    pass


def parse_layout(text: str) -> list[RegionSpec]:
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(items, list):
        raise LayoutError("layout must be a JSON array of regions")
    out = []
    for i, it in enumerate(items):
        try:
            out.append(RegionSpec(int(it["id"]), int(it["cluster"]), tuple(float(v) for v in it["rect"]),
                                  int(it["n"]), it.get("density", "uniform")))
        except (KeyError, TypeError, ValueError) as exc:
            raise LayoutError(f"region #{i}: {exc}") from None
    return out


def load_layout(path) -> list[RegionSpec]:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read())


def layout_to_json(regions) -> str:
    return json.dumps([{"id": r.id, "cluster": r.cluster, "rect": list(r.rect), "n": r.point_count,
                        "density": r.density} for r in regions], indent=1)

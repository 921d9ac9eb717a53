"""Point data loading, exact k-NN and stacked subregions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EmptyInputError(ValueError):
    pass


class PointRecord(NamedTuple):
    id: int
    coord: tuple[float, float]
    attrs: np.ndarray


@dataclass(frozen=True)
class ColumnSpec:
    """Which CSV columns hold the id, the coordinates and the attributes.

    ``attrs=None`` takes every remaining column, in header order.
    """

    id: str = "id"
    x: str = "x"
    y: str = "y"
    attrs: tuple[str, ...] | None = None


@dataclass(eq=False)
class GeoDataset:
    ids: np.ndarray          # (N,) int
    coords: np.ndarray       # (N, 2) float
    attrs: np.ndarray        # (N, D) float
    attr_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.attrs = np.asarray(self.attrs, dtype=float)
        if self.attrs.ndim == 1:
            self.attrs = self.attrs[:, None]
        n = len(self.ids)
        if n == 0:
            raise EmptyInputError("dataset has no points")
        if self.coords.shape[0] != n or self.attrs.shape[0] != n:
            raise ValueError("ids, coords and attrs must have the same length")
        if self.attrs.shape[1] < 1:
            raise ValueError("at least one attribute is required")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("coordinates must be finite")
        if not np.all(np.isfinite(self.attrs)):
            raise ValueError("attribute values must be finite")
        if len(np.unique(self.ids)) != n:
            raise ValueError("point ids must be unique")
        if not self.attr_names:
            self.attr_names = tuple(f"a{i}" for i in range(self.dim_attributes))
        if len(self.attr_names) != self.dim_attributes:
            raise ValueError("attr_names length must equal D")

    @property
    def count(self) -> int:
        return len(self.ids)

    @property
    def dim_attributes(self) -> int:
        return self.attrs.shape[1]

    def record(self, i: int) -> PointRecord:
        return PointRecord(int(self.ids[i]), (float(self.coords[i, 0]), float(self.coords[i, 1])), self.attrs[i])

    @property
    def points(self) -> list[PointRecord]:
        return [self.record(i) for i in range(self.count)]

    def __eq__(self, other):
        if not isinstance(other, GeoDataset):
            return NotImplemented
        return (
            self.attr_names == other.attr_names
            and np.array_equal(self.ids, other.ids)
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.attrs, other.attrs)
        )


def load_csv(path, schema: ColumnSpec | None = None) -> GeoDataset:
    schema = schema or ColumnSpec()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyInputError(f"{path}: empty file") from None
        for col in (schema.id, schema.x, schema.y):
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        if schema.attrs is None:
            attr_cols = [h for h in header if h not in (schema.id, schema.x, schema.y)]
        else:
            attr_cols = list(schema.attrs)
            missing = [c for c in attr_cols if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing attribute columns {missing}")
        if not attr_cols:
            raise SchemaError(f"{path}: no attribute columns")
        pos = {h: i for i, h in enumerate(header)}

        ids, coords, attrs = [], [], []
        for row_idx, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(row)}", row_idx)
            try:
                pid = int(row[pos[schema.id]])
            except ValueError:
                raise ParseError(f"non-integer id {row[pos[schema.id]]!r}", row_idx) from None
            vals = []
            for col in (schema.x, schema.y, *attr_cols):
                cell = row[pos[col]]
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r} in column {col!r}", row_idx) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite value {cell!r} in column {col!r}", row_idx)
                vals.append(v)
            ids.append(pid)
            coords.append(vals[:2])
            attrs.append(vals[2:])
    if not ids:
        raise EmptyInputError(f"{path}: no data rows")
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate point ids")
    return GeoDataset(np.array(ids), np.array(coords), np.array(attrs), tuple(attr_cols))


def save_csv(ds: GeoDataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y", *ds.attr_names])
        for i in range(ds.count):
            # repr() round-trips float64 exactly
            w.writerow([int(ds.ids[i]), *(repr(float(v)) for v in ds.coords[i]),
                        *(repr(float(v)) for v in ds.attrs[i])])


def _as_coords(ds_or_coords) -> np.ndarray:
    if isinstance(ds_or_coords, GeoDataset):
        return ds_or_coords.coords
    return np.asarray(ds_or_coords, dtype=float)


def knn(ds: GeoDataset | np.ndarray, k: int, chunk: int = 1024) -> np.ndarray:
    """Exact k nearest neighbours of every point, excluding the point itself.

    Returns an (N, k) int array ordered by ascending Euclidean distance; equal
    distances are ordered by lower point index.  Brute force over row chunks,
    so memory stays at ``chunk * N`` floats.
    """
    xy = _as_coords(ds)
    n = len(xy)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, N-1] = [1, {n - 1}], got {k}")
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = xy[start:stop, None, :] - xy[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable argsort keeps lower ids first among equal distances
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


@dataclass
class SubregionSet:
    radius: int
    stacked: np.ndarray                 # (N, D*R)
    neighbor_lists: np.ndarray          # (N, R-1)
    nearest_subregion: np.ndarray       # (N,)
    dim_attributes: int
    # extra edges joining the connected components of the nearest-subregion
    # graph into a single spatial tree; empty for hand-built sets
    links: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    @property
    def count(self) -> int:
        return self.stacked.shape[0]


def pointer_components(pointers: np.ndarray) -> np.ndarray:
    """Component id per node of the functional graph ``n -> pointers[n]``."""
    n = len(pointers)
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in enumerate(pointers):
        ra, rb = find(a), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n)])
    _, comp = np.unique(roots, return_inverse=True)
    return comp


def component_links(coords: np.ndarray, comp: np.ndarray) -> np.ndarray:
    """Edges of a minimum spanning tree over components (Boruvka rounds).

    Each edge joins the closest pair of points lying in two different
    components; ties go to the lower (distance, i, j).
    """
    coords = np.asarray(coords, dtype=float)
    comp = np.asarray(comp).copy()
    links = []
    while True:
        labels = np.unique(comp)
        if len(labels) <= 1:
            break
        best = {}
        for c in labels:
            inside = np.flatnonzero(comp == c)
            outside = np.flatnonzero(comp != c)
            diff = coords[inside, None, :] - coords[None, outside, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            flat = np.argmin(d2)
            i, j = np.unravel_index(flat, d2.shape)
            a, b = int(inside[i]), int(outside[j])
            best[int(c)] = (float(d2[i, j]), min(a, b), max(a, b))
        # merge along chosen edges, skipping ones that would close a cycle
        parent = {int(c): int(c) for c in labels}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for _, a, b in sorted(best.values()):
            ra, rb = find(int(comp[a])), find(int(comp[b]))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
                links.append((a, b))
        comp = np.array([find(int(c)) for c in comp])
    return np.array(links, dtype=np.int64).reshape(-1, 2)


def build_subregions(ds: GeoDataset, R: int, attrs: np.ndarray | None = None) -> SubregionSet:
    """Stack each point with its R-1 nearest neighbours into a D*R vector.

    ``attrs`` optionally replaces ``ds.attrs`` (e.g. standardized values)
    while keeping the neighbourhoods of ``ds``.
    """
    n = ds.count
    if not 1 <= R <= n:
        raise ValueError(f"R must be in [1, N] = [1, {n}], got {R}")
    X = ds.attrs if attrs is None else np.asarray(attrs, dtype=float)
    if n == 1:
        raise ValueError("need at least two points to define nearest subregions")
    nbrs = knn(ds, max(R - 1, 1))
    neighbor_lists = nbrs[:, : R - 1]
    nearest = nbrs[:, 0].copy()
    stacked = np.concatenate([X, *(X[neighbor_lists[:, r]] for r in range(R - 1))], axis=1)
    links = component_links(ds.coords, pointer_components(nearest))
    return SubregionSet(R, stacked, neighbor_lists, nearest, ds.dim_attributes, links)


def subregions_from_pointers(stacked: np.ndarray, nearest: Sequence[int], R: int = 1,
                             D: int | None = None) -> SubregionSet:
    """Hand-built subregion set (no coordinates, no component links)."""
    stacked = np.atleast_2d(np.asarray(stacked, dtype=float))
    nearest = np.asarray(nearest, dtype=np.int64)
    if np.any(nearest == np.arange(len(nearest))):
        raise ValueError("nearest_subregion[n] must differ from n")
    D = D if D is not None else stacked.shape[1] // R
    return SubregionSet(R, stacked, np.empty((len(nearest), R - 1), dtype=np.int64), nearest, D)

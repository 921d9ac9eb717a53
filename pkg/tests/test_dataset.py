import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_knn
from sticc.dataset import (
    ColumnSpec, EmptyInputError, GeoDataset, ParseError, SchemaError, build_subregions, knn, load_csv,
    pointer_components, save_csv, subregions_from_pointers,
)
from sticc.synthgen import default_layout, generate


def _ds(coords, attrs=None):
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    attrs = np.arange(n, dtype=float)[:, None] if attrs is None else attrs
    return GeoDataset(np.arange(n), coords, attrs)


def test_three_row_csv(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("id,x,y,a,b\n0,0,0,1,2\n1,1,0,3,4\n2,0,1,5,6\n")
    ds = load_csv(p)
    assert ds.count == 3 and ds.dim_attributes == 2
    assert ds.attr_names == ("a", "b")
    np.testing.assert_array_equal(ds.attrs[2], [5, 6])


def test_nan_cell_reports_row(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("id,x,y,a\n0,0,0,1\n1,1,0,nan\n2,0,1,5\n")
    with pytest.raises(ParseError) as exc:
        load_csv(p)
    assert exc.value.row == 1


@pytest.mark.parametrize("text, err", [
    ("", EmptyInputError),
    ("id,x,y,a\n", EmptyInputError),
    ("id,x,a\n0,1,2\n", SchemaError),
    ("id,x,y\n0,1,2\n", SchemaError),
    ("id,x,y,a\n0,1,2,3\n0,2,3,4\n", ParseError),
    ("id,x,y,a\n0,1,2\n", ParseError),
    ("id,x,y,a\nzero,1,2,3\n", ParseError),
])
def test_malformed_csv(tmp_path, text, err):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(err):
        load_csv(p)


def test_explicit_attribute_columns(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("id,x,y,a,b,c\n0,0,0,1,2,3\n1,1,0,4,5,6\n")
    ds = load_csv(p, ColumnSpec(attrs=("c", "a")))
    np.testing.assert_array_equal(ds.attrs, [[3, 1], [6, 4]])


def test_synthetic_round_trip(tmp_path):
    ds, _ = generate(default_layout(), seed=3)
    save_csv(ds, tmp_path / "pts.csv")
    assert load_csv(tmp_path / "pts.csv") == ds


def test_dataset_rejects_duplicates_and_nonfinite():
    with pytest.raises(ValueError):
        GeoDataset([0, 0], [[0, 0], [1, 1]], [1.0, 2.0])
    with pytest.raises(ValueError):
        GeoDataset([0, 1], [[0, np.inf], [1, 1]], [1.0, 2.0])
    with pytest.raises(EmptyInputError):
        GeoDataset([], np.empty((0, 2)), np.empty((0, 1)))


def test_knn_collinear_fixture():
    ds = _ds([[0, 0], [1, 0], [3, 0]])
    np.testing.assert_array_equal(knn(ds, 1)[:, 0], [1, 0, 1])
    nb = knn(ds, 2)
    assert nb[0].tolist() == [1, 2]
    assert nb[2].tolist() == [1, 0]


def test_knn_matches_brute_force(rng):
    xy = rng.uniform(size=(200, 2))
    np.testing.assert_array_equal(knn(xy, 5), brute_knn(xy, 5))


def test_knn_chunking_is_transparent(rng):
    xy = rng.uniform(size=(97, 2))
    np.testing.assert_array_equal(knn(xy, 4, chunk=7), knn(xy, 4))


@pytest.mark.parametrize("k", [0, 3])
def test_knn_bad_k(k):
    with pytest.raises(ValueError):
        knn(np.zeros((3, 2)) + np.arange(3)[:, None], k)


def test_subregions_r1_is_raw_attributes(rng):
    ds = _ds(rng.uniform(size=(30, 2)), rng.normal(size=(30, 4)))
    s = build_subregions(ds, 1)
    np.testing.assert_array_equal(s.stacked, ds.attrs)
    assert s.neighbor_lists.shape == (30, 0)


def test_subregions_r3_d5_length():
    ds, _ = generate(default_layout(), seed=0)
    s = build_subregions(ds, 3)
    assert s.stacked.shape == (ds.count, 15)


def test_asymmetric_nearest():
    # A=0 at 0, B=1 at 2, C=2 at 3: A->B, B->C
    ds = _ds([[0, 0], [2, 0], [3, 0]])
    s = build_subregions(ds, 2)
    assert s.nearest_subregion[0] == 1
    assert s.nearest_subregion[1] == 2


def test_links_join_all_components(rng):
    ds = _ds(rng.uniform(size=(60, 2)))
    s = build_subregions(ds, 2)
    comp = pointer_components(s.nearest_subregion)
    n_comp = len(np.unique(comp))
    assert len(s.links) == n_comp - 1
    # pointer edges plus links form one connected graph
    parent = list(range(60))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for a, b in list(enumerate(s.nearest_subregion)) + [tuple(l) for l in s.links]:
        parent[find(int(a))] = find(int(b))
    assert len({find(i) for i in range(60)}) == 1


def test_build_subregions_errors():
    ds = _ds([[0, 0], [1, 0]])
    with pytest.raises(ValueError):
        build_subregions(ds, 3)
    with pytest.raises(ValueError):
        build_subregions(_ds([[0, 0]]), 1)
    with pytest.raises(ValueError):
        subregions_from_pointers(np.zeros((2, 1)), [1, 1])


coords_strategy = st.integers(4, 25).flatmap(
    lambda n: arrays(np.float64, (n, 2), elements=st.floats(-100, 100, allow_nan=False, width=32),
                     unique=False))


@settings(max_examples=60, deadline=None)
@given(coords_strategy, st.integers(1, 4))
def test_subregion_invariants(coords, R):
    n = len(coords)
    R = min(R, n)
    attrs = np.arange(n * 2, dtype=float).reshape(n, 2)
    ds = _ds(coords, attrs)
    s = build_subregions(ds, R)
    # own attributes first, then neighbours by ascending distance
    np.testing.assert_array_equal(s.stacked[:, :2], attrs)
    for i in range(n):
        nb = s.neighbor_lists[i]
        assert i not in nb and len(set(nb.tolist())) == len(nb)
        d = np.linalg.norm(coords[nb] - coords[i], axis=1)
        assert np.all(np.diff(d) >= 0)
        for r, j in enumerate(nb):
            np.testing.assert_array_equal(s.stacked[i, 2 * (r + 1):2 * (r + 2)], attrs[j])
    assert np.all(s.nearest_subregion != np.arange(n))
    again = build_subregions(ds, R)
    np.testing.assert_array_equal(again.stacked, s.stacked)
    np.testing.assert_array_equal(again.links, s.links)

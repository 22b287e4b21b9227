import numpy as np
import pytest

from pinvset.dataset import (
    Dataset,
    EmptyDatasetError,
    MalformedRowError,
    SamplePair,
    UnknownSystemError,
    dyadic_grid_points,
    gen_dyadic_grid,
    gen_uniform,
    get_system,
    load_dataset,
    save_dataset,
    tabulated_oracle,
)
from pinvset.geometry import Box, BoxList, DimensionMismatchError


def make_dataset(points):
    return Dataset([SamplePair(tuple(p), tuple(p)) for p in points])


# -- loading -----------------------------------------------------------------


def test_load_two_rows(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("0,0,0,0\n1,1,0.5,0.5\n")
    ds = load_dataset(f)
    assert ds.m == 2
    assert ds.pairs[1] == SamplePair((1.0, 1.0), (0.5, 0.5))


def test_load_header_comments_metadata(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text(
        "# system=linear2d seed=7 m=2 lipschitz=0.8225\n"
        "x1,x2,xp1,xp2\n"
        "0,0,0,0\n"
        "# trailing comment\n"
        "0.5,0.5,0.1,0.1\n"
    )
    ds = load_dataset(f)
    assert ds.m == 2
    assert ds.metadata["system"] == "linear2d"
    assert ds.metadata["seed"] == 7
    assert ds.metadata["lipschitz"] == pytest.approx(0.8225)


def test_load_dimension_error(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("0,0,1\n")
    with pytest.raises(DimensionMismatchError):
        load_dataset(f, dim=2)


def test_load_odd_columns_malformed(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("0,0,1\n")
    with pytest.raises(MalformedRowError):
        load_dataset(f)


def test_load_non_numeric_cell(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("0,0,0,0\nx,y,z,w\n")
    with pytest.raises(MalformedRowError):
        load_dataset(f)


def test_load_empty_file(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("")
    with pytest.raises(EmptyDatasetError):
        load_dataset(f)


def test_load_rejects_out_of_domain_rows(tmp_path, caplog):
    f = tmp_path / "d.csv"
    f.write_text("0,0,0,0\n5,5,0,0\n0.5,0.5,0,0\n")
    domain = BoxList((Box((0.0, 0.0), 1.0),))
    with caplog.at_level("WARNING"):
        ds = load_dataset(f, domain=domain)
    assert ds.m == 2
    assert any("out-of-domain" in r.message for r in caplog.records)


def test_save_load_round_trip(tmp_path, lin_oracle):
    ds = gen_uniform(lin_oracle, 50, seed=3)
    f = tmp_path / "d.csv"
    save_dataset(ds, f)
    back = load_dataset(f)
    assert back.pairs == ds.pairs
    assert back.metadata["system"] == "linear2d"


# -- generators ---------------------------------------------------------------


def test_gen_uniform_in_domain_and_deterministic(lin_oracle):
    a = gen_uniform(lin_oracle, 100, seed=1)
    b = gen_uniform(lin_oracle, 100, seed=1)
    assert a.pairs == b.pairs
    assert all(lin_oracle.domain.contains_point(p.x) for p in a.pairs)
    c = gen_uniform(lin_oracle, 100, seed=2)
    assert c.pairs != a.pairs


def test_gen_uniform_byte_identical(lin_oracle, tmp_path):
    fa, fb = tmp_path / "a.csv", tmp_path / "b.csv"
    save_dataset(gen_uniform(lin_oracle, 200, seed=42), fa)
    save_dataset(gen_uniform(lin_oracle, 200, seed=42), fb)
    assert fa.read_bytes() == fb.read_bytes()


def test_gen_uniform_successors_can_exit_domain(nonlin_oracle):
    assert nonlin_oracle((1.0, 1.0)) == pytest.approx((-0.2, 1.9))
    ds = gen_uniform(nonlin_oracle, 10000, seed=0)
    outside = [
        p for p in ds.pairs if not nonlin_oracle.domain.contains_point(p.x_plus)
    ]
    assert outside  # the map pushes some states out of the square


def test_gen_uniform_rejects_zero(lin_oracle):
    with pytest.raises(ValueError):
        gen_uniform(lin_oracle, 0, seed=0)


def test_dyadic_grid_level_counts(lin_oracle):
    domain = BoxList((Box((0.375, -0.375), 0.625),))
    assert len(dyadic_grid_points(domain, 0.3125)) == 1 + 4
    assert len(dyadic_grid_points(domain, 1.0)) == 1
    # levels with target radius >= tau: 0.625/2^l >= 0.01 holds through l=5,
    # so sum(4^l, l=0..5) = (4^6 - 1)/3
    assert len(dyadic_grid_points(domain, 0.01)) == (4 ** 6 - 1) // 3 == 1365
    with pytest.raises(ValueError):
        dyadic_grid_points(domain, 0.0)


def test_dyadic_grid_matches_tree_centers(lin_oracle):
    # every level-l center must be reachable by l halvings from the root
    domain = lin_oracle.domain
    pts = dyadic_grid_points(domain, 0.15625)
    assert len(pts) == 1 + 4 + 16
    root = domain[0]
    lo, _ = root.rect()
    for level, count in ((0, 1), (1, 4), (2, 16)):
        radius = root.radius / 2 ** level
        expected = {
            (lo[0] + (2 * i + 1) * radius, lo[1] + (2 * j + 1) * radius)
            for i in range(2 ** level)
            for j in range(2 ** level)
        }
        assert expected <= set(pts)


def test_gen_dyadic_grid_contains_exact_centers(nonlin_oracle):
    ds = gen_dyadic_grid(nonlin_oracle, 0.25)
    xs = {p.x for p in ds.pairs}
    assert (0.0, 0.0) in xs
    assert (0.5, 0.5) in xs and (-0.5, 0.5) in xs
    assert (0.25, -0.75) in xs
    assert ds.metadata["mode"] == "grid"


# -- nearest neighbor ----------------------------------------------------------


def test_nearest_basic():
    ds = make_dataset([(0.0, 0.0), (1.0, 1.0)])
    idx, pair, dist = ds.nearest((0.2, 0.1))
    assert idx == 0 and dist == pytest.approx(0.2)
    # equidistant: lowest index wins
    idx, _, dist = ds.nearest((0.5, 0.5))
    assert idx == 0 and dist == pytest.approx(0.5)
    idx, _, dist = ds.nearest((1.0, 1.0))
    assert idx == 1 and dist == 0.0


def test_nearest_dimension_mismatch():
    ds = make_dataset([(0.0, 0.0)])
    with pytest.raises(DimensionMismatchError):
        ds.nearest((0.0, 0.0, 0.0))


def test_nearest_matches_linear_scan_exactly(rng):
    pts = rng.uniform(-2, 3, size=(400, 2))
    ds = make_dataset([tuple(p) for p in pts])
    for _ in range(1000):
        q = tuple(rng.uniform(-3, 4, size=2))
        gi, _, gd = ds.nearest(q)
        li, _, ld = ds.nearest_linear(q)
        assert gi == li
        assert gd == ld


def test_nearest_matches_linear_scan_3d(rng):
    pts = rng.uniform(-1, 1, size=(200, 3))
    ds = make_dataset([tuple(p) for p in pts])
    for _ in range(300):
        q = tuple(rng.uniform(-1.5, 1.5, size=3))
        assert ds.nearest(q)[0] == ds.nearest_linear(q)[0]


def test_nearest_with_duplicate_points_breaks_ties_low():
    ds = make_dataset([(0.5, 0.5), (0.5, 0.5), (0.0, 0.0)])
    assert ds.nearest((0.5, 0.5))[0] == 0
    assert ds.nearest((0.4, 0.4))[0] == 0


def test_empty_dataset_rejected():
    with pytest.raises(EmptyDatasetError):
        Dataset([])


# -- oracles -------------------------------------------------------------------


def test_builtin_lipschitz_bounds_hold(lin_oracle, nonlin_oracle, rng):
    for oracle, samples in ((lin_oracle, 10 ** 5), (nonlin_oracle, 10 ** 5)):
        lo, hi = oracle.domain[0].rect()
        p = rng.uniform(lo, hi, size=(samples, 2))
        q = rng.uniform(lo, hi, size=(samples, 2))
        num = np.abs(oracle.map_points(p) - oracle.map_points(q)).max(axis=1)
        den = np.abs(p - q).max(axis=1)
        mask = den > 0
        assert (num[mask] <= oracle.lipschitz * den[mask] + 1e-12).all()


def test_oracle_point_and_batch_agree(nonlin_oracle, rng):
    pts = rng.uniform(-1, 1, size=(100, 2))
    batch = nonlin_oracle.map_points(pts)
    single = np.array([nonlin_oracle(tuple(p)) for p in pts])
    assert np.allclose(batch, single, atol=0)


def test_get_system_unknown():
    with pytest.raises(UnknownSystemError):
        get_system("bogus")


def test_tabulated_oracle():
    pairs = [SamplePair((0.0, 0.0), (0.1, 0.1)), SamplePair((1.0, 0.0), (0.2, 0.0))]
    oracle = tabulated_oracle(pairs, 1.0, BoxList((Box((0.5, 0.0), 0.5),)))
    assert oracle((0.0, 0.0)) == (0.1, 0.1)
    with pytest.raises(Exception):
        oracle((0.5, 0.5))

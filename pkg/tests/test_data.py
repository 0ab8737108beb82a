import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgaimpute import synthgen
from dgaimpute.data import (GASES, Dataset, GasRecord, Label, NormStats, denormalize,
                            fit_normalizer, normalize, parse_records, read_records,
                            within_std_correct, write_records)
from dgaimpute.errors import DegenerateVariable, ParseError, SchemaError


def _column_dataset(col, other=(1.0, 2.0, 4.0)):
    """Dataset whose first variable is ``col``; the rest are non-degenerate fillers."""
    recs = []
    for i, v in enumerate(col):
        vals = np.array([v] + [other[i % len(other)] * (j + 1) for j in range(9)])
        recs.append(GasRecord(vals, id=str(i)))
    return Dataset(recs)


def _one_pass_stats(X):
    """Welford recomputation, independent of numpy reductions."""
    p = X.shape[1]
    out = {"min": [], "max": [], "mean": [], "std": []}
    for j in range(p):
        n = 0
        mean = m2 = 0.0
        lo, hi = math.inf, -math.inf
        for v in X[:, j]:
            if math.isnan(v):
                continue
            n += 1
            d = v - mean
            mean += d / n
            m2 += d * (v - mean)
            lo, hi = min(lo, v), max(hi, v)
        out["min"].append(lo)
        out["max"].append(hi)
        out["mean"].append(mean)
        out["std"].append(math.sqrt(m2 / (n - 1)))
    return {k: np.array(v) for k, v in out.items()}


def test_fit_normalizer_simple_column():
    s = fit_normalizer(_column_dataset([0.0, 5.0, 10.0]))
    assert (s.min[0], s.max[0], s.mean[0]) == (0.0, 10.0, 5.0)
    assert s.std[0] == pytest.approx(5.0, rel=1e-15)


def test_fit_normalizer_degenerate():
    with pytest.raises(DegenerateVariable):
        fit_normalizer(_column_dataset([3.0, 3.0, 3.0]))


def test_fit_normalizer_matches_one_pass_oracle():
    ds = synthgen.generate(synthgen.GenConfig(n_records=500, seed=42))
    ds = synthgen.mask_missing(ds, 2, seed=9)
    s = fit_normalizer(ds)
    ref = _one_pass_stats(ds.values)
    for key in ("min", "max", "mean", "std"):
        np.testing.assert_allclose(getattr(s, key), ref[key], rtol=1e-9)


def test_fit_normalizer_ignores_missing_cells():
    ds = _column_dataset([0.0, 5.0, 10.0, 1000.0])
    ds.records[3].mask[0] = True
    s = fit_normalizer(ds)
    assert s.max[0] == 10.0


def test_fit_normalizer_permutation_invariant():
    ds = synthgen.generate(synthgen.GenConfig(n_records=60, seed=3))
    rev = Dataset(ds.records[::-1])
    a, b = fit_normalizer(ds), fit_normalizer(rev)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12)
    np.testing.assert_allclose(a.std, b.std, rtol=1e-12)
    np.testing.assert_array_equal(a.min, b.min)


@pytest.fixture
def stats():
    lo = np.arange(1.0, 11.0)
    return NormStats(lo, lo * 7, lo * 3, lo, GASES)


def test_normalize_endpoints(stats):
    r = GasRecord(stats.min.copy())
    np.testing.assert_allclose(normalize(r, stats).values, 0.1)
    r = GasRecord((stats.min + stats.max) / 2)
    np.testing.assert_allclose(normalize(r, stats).values, 0.5)


def test_denormalize_endpoints(stats):
    r = GasRecord(np.full(10, 0.1))
    np.testing.assert_allclose(denormalize(r, stats).values, stats.min)
    r = GasRecord(np.full(10, 0.9))
    np.testing.assert_allclose(denormalize(r, stats).values, stats.max)


def test_normalize_extrapolates_and_keeps_mask(stats):
    r = GasRecord(stats.max * 2, mask=[True] + [False] * 9)
    n = normalize(r, stats)
    assert np.isnan(n.values[0])
    assert np.all(n.values[1:] > 0.9)
    np.testing.assert_array_equal(n.mask, r.mask)


def test_normalize_degenerate_raises():
    s = NormStats(np.zeros(10), np.ones(10), np.zeros(10), np.zeros(10))
    s = NormStats(s.min, np.where(np.arange(10) == 4, 0.0, 1.0), s.mean, s.std)
    with pytest.raises(DegenerateVariable):
        normalize(GasRecord(np.ones(10)), s)


def test_round_trip_random_records(stats):
    rng = np.random.default_rng(0)
    for _ in range(100):
        r = GasRecord(rng.uniform(0, 1000, 10))
        back = denormalize(normalize(r, stats), stats)
        np.testing.assert_allclose(back.values, r.values, rtol=1e-9, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    lo=st.floats(0, 1e4), width=st.floats(1e-3, 1e5),
    frac=st.floats(-0.5, 1.5),
)
def test_round_trip_property(lo, width, frac):
    s = NormStats(np.full(10, lo), np.full(10, lo + width), np.full(10, lo), np.ones(10))
    x = max(lo + frac * width, 0.0)
    r = GasRecord(np.full(10, x))
    back = denormalize(normalize(r, s), s).values
    assert np.allclose(back, x, rtol=1e-9, atol=1e-9 * (lo + width))


def test_within_std_examples():
    assert within_std_correct(4.0, 4.0, 1.0)
    assert not within_std_correct(4.0 + 2 * 1.5, 4.0, 1.5)
    assert not within_std_correct(-1.0, 0.5, 100.0)
    assert within_std_correct(5.0, 4.0, 1.0)


@given(x=st.floats(0, 1e6), s=st.floats(1e-6, 1e6))
def test_within_std_identity(x, s):
    assert within_std_correct(x, x, s)


def test_record_validation():
    with pytest.raises(ValueError):
        GasRecord([1.0, -2.0])
    with pytest.raises(SchemaError):
        GasRecord([1.0, 2.0], mask=[True])
    # masked slots may hold anything, including NaN
    r = GasRecord([1.0, np.nan], mask=[False, True])
    assert r.n_missing == 1


# ------------------------------------------------------------------ CSV

HEADER = "id,H2,CH4,C2H6,C2H4,C2H2,CO,CO2,O2,N2,TDCG,label\n"


def test_parse_row_with_empty_cell():
    ds = parse_records(io.StringIO(HEADER + "b1,100,,3,4,5,6,7,8,9,10,acceptable\n"))
    r = ds[0]
    assert r.id == "b1" and r.label is Label.ACCEPTABLE
    assert r.mask.tolist() == [False, True] + [False] * 8
    assert r.values[0] == 100.0 and r.values[9] == 10.0


def test_parse_wrong_width():
    with pytest.raises(SchemaError):
        parse_records(io.StringIO(HEADER + "b1,1,2,3,4,5,6,7,8,9,acceptable\n"))


def test_parse_bad_number_reports_location():
    with pytest.raises(ParseError) as err:
        parse_records(io.StringIO(HEADER + "b1,1,2,x3,4,5,6,7,8,9,10,\n"))
    assert err.value.row == 2 and err.value.column == "C2H6"


def test_write_read_round_trip(tmp_path):
    ds = synthgen.generate(synthgen.GenConfig(n_records=500, seed=11))
    ds = synthgen.mask_missing(ds, 3, seed=2)
    path = tmp_path / "d.csv"
    write_records(ds, path)
    back = read_records(path)
    assert back.same_as(ds)
    assert [r.id for r in back] == [r.id for r in ds]
    # present values survive bit for bit
    np.testing.assert_array_equal(back.values[~back.mask], ds.values[~ds.mask])


def test_written_file_is_lf_and_blank_for_missing(tmp_path):
    r = GasRecord(np.arange(1.0, 11.0), mask=[False, True] + [False] * 8, label="unusable", id="x")
    path = tmp_path / "d.csv"
    write_records(Dataset([r]), path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[1] == "x,1.0,,3.0,4.0,5.0,6.0,7.0,8.0,9.0,10.0,unusable"

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from dgaimpute.data import Dataset, GasRecord, Label, write_records
from dgaimpute.errors import IncompleteRecord, InvalidConfig, InvalidK
from dgaimpute.synthgen import (GenConfig, RuleTable, apply_rule, generate, loading_matrix,
                                mask_missing)


def test_empty_dataset():
    assert len(generate(GenConfig(n_records=0))) == 0


def test_rank_one_log_columns_perfectly_correlated():
    ds = generate(GenConfig(n_records=200, latent_rank=1, noise_fraction=0.0, seed=4))
    C = np.corrcoef(np.log(ds.values), rowvar=False)
    np.testing.assert_allclose(C, 1.0, atol=1e-9)


@pytest.mark.parametrize("rank", [1, 2, 3, 5])
def test_noise_free_log_matrix_has_latent_rank(rank):
    ds = generate(GenConfig(n_records=300, latent_rank=rank, noise_fraction=0.0, seed=rank))
    L = np.log(ds.values) - np.log(np.asarray(GenConfig().scales))
    sv = np.linalg.svd(L, compute_uv=False)
    assert np.all(sv[rank:] < 1e-8 * sv[0])
    assert sv[rank - 1] > 1e-3 * sv[0]


def test_generation_is_deterministic(tmp_path):
    cfg = GenConfig(n_records=50, seed=9)
    write_records(generate(cfg), tmp_path / "a.csv")
    write_records(generate(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_records_do_not_depend_on_dataset_size():
    small = generate(GenConfig(n_records=5, seed=2))
    big = generate(GenConfig(n_records=40, seed=2))
    for a, b in zip(small, big):
        np.testing.assert_array_equal(a.values, b.values)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), rank=st.integers(1, 10), noise=st.floats(0, 0.99))
def test_values_strictly_positive(seed, rank, noise):
    ds = generate(GenConfig(n_records=20, latent_rank=rank, noise_fraction=noise, seed=seed))
    assert np.all(ds.values > 0)


def test_default_std_spread_resembles_field_data():
    from dgaimpute.data import fit_normalizer
    s = fit_normalizer(generate(GenConfig(n_records=500, seed=0)))
    assert s.std.min() < 10 and s.std.max() > 1000


@pytest.mark.parametrize("bad", [
    dict(latent_rank=0), dict(latent_rank=11), dict(noise_fraction=1.0),
    dict(scales=(1.0,) * 9 + (-1.0,)), dict(n_records=-1),
])
def test_invalid_config(bad):
    with pytest.raises(InvalidConfig):
        generate(GenConfig(**bad))


def test_loading_first_factor_positive():
    L = loading_matrix(10, 3, 0)
    assert L.shape == (10, 3) and np.all(L[:, 0] > 0)


# ----------------------------------------------------------------- rules

RULE = RuleTable({"H2": 100.0, "CO": 350.0})


def _rec(h2=10.0, co=10.0, mask=None):
    v = np.full(10, 1.0)
    v[0], v[5] = h2, co
    return GasRecord(v, mask=mask)


def test_rule_below_thresholds_acceptable():
    assert apply_rule(_rec(), RULE) is Label.ACCEPTABLE


def test_rule_exceedance_unusable():
    assert apply_rule(_rec(co=351.0), RULE) is Label.UNUSABLE


def test_rule_equal_threshold_acceptable():
    assert apply_rule(_rec(h2=100.0, co=350.0), RULE) is Label.ACCEPTABLE


def test_rule_ignores_unthresholded_gases():
    r = _rec()
    r.values[8] = 1e9
    assert apply_rule(r, RULE) is Label.ACCEPTABLE


def test_rule_missing_input_gas():
    with pytest.raises(IncompleteRecord):
        apply_rule(_rec(mask=[True] + [False] * 9), RULE)
    # masking a gas the rule does not use is fine
    assert apply_rule(_rec(mask=[False, True] + [False] * 8), RULE) is Label.ACCEPTABLE


def test_rule_file_round_trip(tmp_path):
    path = tmp_path / "rules.txt"
    RULE.save(path)
    assert RuleTable.load(path) == RULE
    text = "# comment\nH2 = 50  # trailing\n\nC2H2=1\n"
    assert RuleTable.loads(text).thresholds == {"H2": 50.0, "C2H2": 1.0}


@pytest.mark.parametrize("text", ["", "H2=-1", "XX=4", "H2"])
def test_rule_file_invalid(text):
    with pytest.raises(InvalidConfig):
        RuleTable.loads(text)


def test_generated_labels_follow_rule():
    ds = generate(GenConfig(n_records=300, seed=1))
    labels = {r.label for r in ds}
    assert labels == {Label.ACCEPTABLE, Label.UNUSABLE}
    for r in ds:
        assert r.label is apply_rule(r, GenConfig().rule)


# --------------------------------------------------------------- masking

@pytest.fixture(scope="module")
def pool():
    return generate(GenConfig(n_records=200, seed=8))


def test_mask_k0(pool):
    assert not mask_missing(pool, 0, seed=1).mask.any()


def test_mask_k10_mcar(pool):
    assert mask_missing(pool, 10, seed=1).mask.all()


@pytest.mark.parametrize("mech", ["MCAR", "MAR"])
@pytest.mark.parametrize("k", [1, 3, 9])
def test_mask_exact_count_and_values_kept(pool, mech, k):
    m = mask_missing(pool, k, mech, seed=5)
    assert np.all(m.mask.sum(axis=1) == k)
    for a, b in zip(pool, m):
        np.testing.assert_array_equal(a.values, b.values)
        assert a.label is b.label


def test_mar_never_masks_first_variable(pool):
    m = mask_missing(pool, 9, "MAR", seed=3)
    assert not m.mask[:, 0].any()
    with pytest.raises(InvalidK):
        mask_missing(pool, 10, "MAR")


def test_mar_depends_on_first_variable():
    ds = generate(GenConfig(n_records=4000, seed=2))
    m = mask_missing(ds, 1, "MAR", seed=6).mask
    first = ds.values[:, 0]
    low, high = first < np.median(first), first >= np.median(first)
    # low-H2 records lose high-index gases more often, and vice versa
    assert m[low, 9].mean() > m[high, 9].mean()
    assert m[high, 1].mean() > m[low, 1].mean()


@pytest.mark.parametrize("k", [-1, 11])
def test_mask_invalid_k(pool, k):
    with pytest.raises(InvalidK):
        mask_missing(pool, k)


def test_mcar_single_missing_uniform():
    base = Dataset([GasRecord(np.ones(10), id=str(i)) for i in range(10_000)])
    counts = mask_missing(base, 1, "MCAR", seed=123).mask.sum(axis=0)
    assert counts.sum() == 10_000
    assert chisquare(counts).pvalue > 0.01

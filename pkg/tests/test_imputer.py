import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from dgaimpute import imputer, synthgen
from dgaimpute.data import GasRecord
from dgaimpute.errors import AllMissing, InvalidConfig, ModelMismatch, TooManyMissing
from dgaimpute.evo import GAConfig, PSOConfig
from dgaimpute.imputer import ImputeConfig

SMALL_GA = ImputeConfig(optimizer="ga", ga=GAConfig(population=10, generations=10))
SMALL_PSO = ImputeConfig(optimizer="pso", pso=PSOConfig(swarm=10, iterations=10))


def sigmoid(a):
    return 1 / (1 + math.exp(-a))


@pytest.fixture(scope="module")
def masked_test(desk_data):
    return synthgen.mask_missing(desk_data[1], 2, seed=17)


# ------------------------------------------------------------ objective

def test_em_objective_toy_both_modes(toy_model):
    rec = GasRecord([5.0, np.nan], mask=[False, True])
    z = math.tanh(0.5 * 0.5 - 0.5 * 0.3)
    known = (0.5 - sigmoid(z)) ** 2
    full = known + (0.3 - sigmoid(2 * z)) ** 2
    assert imputer.em_objective(toy_model, rec, [0.3], "full") == pytest.approx(full, rel=1e-14)
    assert imputer.em_objective(toy_model, rec, [0.3], "known") == pytest.approx(known, rel=1e-14)


def test_em_objective_empty_mask_is_sse(desk_ae, desk_data):
    rec = desk_data[1][3]
    x = desk_ae.stats.scale(rec.values)
    y = desk_ae.reconstruct(x[None])[0]
    assert imputer.em_objective(desk_ae, rec) == pytest.approx(float(np.sum((x - y) ** 2)), rel=1e-12)


def test_em_objective_known_mode_all_missing(toy_model):
    rec = GasRecord([1.0, 1.0], mask=[True, True])
    with pytest.raises(AllMissing):
        imputer.em_objective(toy_model, rec, [0.1, 0.1], "known")
    assert imputer.em_objective(toy_model, rec, [0.1, 0.1], "full") >= 0


def test_search_bounds_map_zero_and_headroom(desk_ae):
    mask = np.array([True] + [False] * 8 + [True])
    b = imputer.search_bounds(desk_ae.stats, mask)
    lo = desk_ae.stats.scale(np.zeros(10))[mask]
    hi = desk_ae.stats.scale(1.1 * desk_ae.stats.max)[mask]
    np.testing.assert_array_equal(b.lower, lo)
    np.testing.assert_array_equal(b.upper, hi)


# ------------------------------------------------------------- impute

def test_no_missing_is_identity(desk_ae, desk_data):
    rec = desk_data[1][0]
    res = imputer.impute(desk_ae, rec)
    np.testing.assert_array_equal(res.record.values, rec.values)
    assert res.evaluations == 0 and res.converged and res.restarts == 0


def test_model_mismatch(desk_ae):
    with pytest.raises(ModelMismatch):
        imputer.impute(desk_ae, GasRecord([1.0, 2.0], mask=[False, True]))


@pytest.mark.parametrize("cfg", [SMALL_GA, SMALL_PSO])
def test_result_contract(desk_ae, masked_test, cfg):
    for rec in masked_test[:10]:
        res = imputer.impute(desk_ae, rec, cfg)
        assert res.record.complete
        assert np.all(res.record.values >= 0)
        np.testing.assert_array_equal(res.record.values[~rec.mask], rec.values[~rec.mask])
        assert res.evaluations == (res.restarts + 1) * cfg.budget
        assert 0 <= res.restarts < cfg.max_restarts
        assert res.converged == (res.known_error <= cfg.tolerance)
        cand = desk_ae.stats.scale(res.record.values)[rec.mask]
        assert res.objective == pytest.approx(imputer.em_objective(desk_ae, rec, cand), rel=1e-12)


def test_masked_values_never_read(desk_ae, masked_test):
    rec = masked_test[5]
    poisoned = rec.copy(values=np.where(rec.mask, np.nan, rec.values))
    huge = rec.copy(values=np.where(rec.mask, 1e12, rec.values))
    for cfg in (SMALL_GA, SMALL_PSO):
        a, b, c = (imputer.impute(desk_ae, r, cfg) for r in (rec, poisoned, huge))
        np.testing.assert_array_equal(a.record.values, b.record.values)
        np.testing.assert_array_equal(a.record.values, c.record.values)
        assert np.all(np.isfinite(b.record.values))


def test_positivity_many_trials(desk_ae, desk_data):
    rng = np.random.default_rng(0)
    test = desk_data[1]
    n = 0
    for trial in range(250):
        k = int(rng.integers(1, 5))
        rec = synthgen.mask_missing(test[trial % len(test): trial % len(test) + 1], k, seed=trial)[0]
        for cfg in (SMALL_GA, SMALL_PSO):
            for mode in ("full", "known"):
                res = imputer.impute(desk_ae, rec, replace(cfg, mode=mode, seed=trial))
                assert np.all(res.record.values >= 0)
                n += 1
    assert n == 1000


@pytest.mark.parametrize("cfg", [ImputeConfig(optimizer="ga"), ImputeConfig(optimizer="pso")])
def test_never_worse_than_mean_fill(desk_ae, masked_test, cfg):
    for rec in masked_test[:20]:
        res = imputer.impute(desk_ae, rec, cfg)
        mean_cand = desk_ae.stats.scale(desk_ae.stats.mean)[rec.mask]
        assert res.objective <= imputer.em_objective(desk_ae, rec, mean_cand) + 1e-12


def test_seed_determinism(desk_ae, masked_test):
    rec = masked_test[2]
    for cfg in (SMALL_GA, SMALL_PSO):
        a, b = imputer.impute(desk_ae, rec, cfg), imputer.impute(desk_ae, rec, cfg)
        np.testing.assert_array_equal(a.record.values, b.record.values)
        assert (a.objective, a.evaluations, a.restarts) == (b.objective, b.evaluations, b.restarts)


def test_restarts_capped_when_tolerance_unreachable(desk_ae, masked_test):
    cfg = ImputeConfig(optimizer="pso", pso=PSOConfig(swarm=4, iterations=3), tolerance=1e-300,
                       max_restarts=3)
    res = imputer.impute(desk_ae, masked_test[0], cfg)
    assert res.restarts == 2 and res.evaluations == 3 * 12 and not res.converged


def test_all_missing_record(desk_ae):
    rec = GasRecord(np.zeros(10), mask=np.ones(10, bool))
    res = imputer.impute(desk_ae, rec, SMALL_PSO)
    assert res.record.complete and np.isnan(res.known_error)
    assert res.evaluations == SMALL_PSO.budget


# ------------------------------------------------------------ baselines

def test_mean_baseline(toy_model):
    rec = GasRecord([7.0, np.nan], mask=[False, True])
    out = imputer.impute_baseline(rec, toy_model.stats, "mean")
    np.testing.assert_array_equal(out.values, [7.0, 5.0])
    assert out.complete


def test_zero_baseline(toy_model):
    out = imputer.impute_baseline(GasRecord([7.0, np.nan], mask=[False, True]), toy_model.stats, "zero")
    np.testing.assert_array_equal(out.values, [7.0, 0.0])


def test_baseline_empty_mask_unchanged(toy_model):
    rec = GasRecord([7.0, 1.0])
    np.testing.assert_array_equal(imputer.impute_baseline(rec, toy_model.stats).values, rec.values)
    with pytest.raises(InvalidConfig):
        imputer.impute_baseline(rec, toy_model.stats, "median")


def test_baseline_via_impute_reports_no_evaluations(desk_ae, masked_test):
    res = imputer.impute(desk_ae, masked_test[0], ImputeConfig(optimizer="mean"))
    assert res.evaluations == 0
    np.testing.assert_array_equal(res.imputed_values, desk_ae.stats.mean[masked_test[0].mask])


# ---------------------------------------------------------- grid oracle

def test_grid_step_half_evaluates_three_points(toy_model, monkeypatch):
    seen = []
    real = imputer.em_objective_batch

    def spy(model, record, P, mode="full"):
        seen.append(np.array(P))
        return real(model, record, P, mode)

    monkeypatch.setattr(imputer, "em_objective_batch", spy)
    rec = GasRecord([5.0, np.nan], mask=[False, True])
    best, val = imputer.grid_oracle(toy_model, rec, step=0.5)
    pts = np.concatenate(seen)
    np.testing.assert_array_equal(pts[:, 0], [0.0, 0.5, 1.0])
    vals = [real(toy_model, rec, p[None])[0] for p in pts]
    assert val == min(vals) and best[0] == pts[int(np.argmin(vals)), 0]


def test_grid_convex_surrogate(monkeypatch, toy_model):
    monkeypatch.setattr(imputer, "em_objective_batch",
                        lambda m, r, P, mode="full": (np.asarray(P)[:, 0] - 0.3) ** 2)
    rec = GasRecord([5.0, np.nan], mask=[False, True])
    for step in (0.5, 0.1, 0.07, 1e-3):
        best, _ = imputer.grid_oracle(toy_model, rec, step)
        assert abs(best[0] - 0.3) <= step / 2 + 1e-12


def test_grid_ties_go_to_lexicographic_first(monkeypatch, toy_model):
    monkeypatch.setattr(imputer, "em_objective_batch", lambda m, r, P, mode="full": np.zeros(len(P)))
    rec = GasRecord([np.nan, np.nan], mask=[True, True])
    best, val = imputer.grid_oracle(toy_model, rec, 0.25)
    np.testing.assert_array_equal(best, [0.0, 0.0])


def test_grid_refinement_nested(desk_ae, desk_data):
    for rec in synthgen.mask_missing(desk_data[1][:5], 1, seed=4):
        coarse = imputer.grid_oracle(desk_ae, rec, 1e-2)[1]
        fine = imputer.grid_oracle(desk_ae, rec, 1e-3)[1]
        assert fine <= coarse


def test_grid_two_missing_and_limits(desk_ae, desk_data):
    rec = synthgen.mask_missing(desk_data[1][:1], 2, seed=0)[0]
    best, val = imputer.grid_oracle(desk_ae, rec, 0.05)
    assert best.shape == (2,) and val == pytest.approx(imputer.em_objective(desk_ae, rec, best), rel=1e-12)
    with pytest.raises(TooManyMissing):
        imputer.grid_oracle(desk_ae, synthgen.mask_missing(desk_data[1][:1], 3, seed=0)[0])


# ------------------------------------------------------------ batch mode

def test_impute_dataset_independent_of_jobs(desk_ae, masked_test):
    sub = masked_test[:8]
    a, ra = imputer.impute_dataset(desk_ae, sub, SMALL_PSO, jobs=1)
    b, rb = imputer.impute_dataset(desk_ae, sub, SMALL_PSO, jobs=2)
    np.testing.assert_array_equal(a.values, b.values)
    assert [r.objective for r in ra] == [r.objective for r in rb]


def test_write_report(desk_ae, masked_test, tmp_path):
    _, results = imputer.impute_dataset(desk_ae, masked_test[:3], SMALL_GA)
    imputer.write_report(results, tmp_path / "r.csv")
    with open(tmp_path / "r.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == imputer.REPORT_HEADER
    for row, res in zip(rows, results):
        assert int(row["k_missing"]) == 2
        assert float(row["known_error"]) == res.known_error
        assert int(row["evaluations"]) == res.evaluations


def test_config_validation():
    for bad in (dict(optimizer="sa"), dict(mode="both"), dict(tolerance=0.0), dict(max_restarts=0)):
        with pytest.raises(InvalidConfig):
            ImputeConfig(**bad)


def test_derive_seed_stable():
    assert imputer.derive_seed(1, 2) == imputer.derive_seed(1, 2)
    assert imputer.derive_seed(1, 2) != imputer.derive_seed(2, 1)

# # Recovering a missing gas reading
#
# When a reading is lost, we search for the value that makes the completed
# record look most like something the autoencoder can reproduce. The search
# is done by a genetic algorithm or a particle swarm; for one or two missing
# values a brute-force grid gives the exact answer to compare against.

# %%
import numpy as np

from dgaimpute import autoenc, imputer, synthgen
from dgaimpute.data import within_std_correct
from dgaimpute.imputer import ImputeConfig

ds = synthgen.generate(synthgen.GenConfig(n_records=700, seed=1))
train, test = ds[:500], ds[500:]
model = autoenc.train_autoencoder(train)

# %% [markdown]
# Blank one gas in a test record. The masked slot is overwritten with NaN so
# that nothing downstream can peek at the true value.

# %%
masked = synthgen.mask_missing(test[:1], 1, seed=3)[0]
j = int(np.flatnonzero(masked.mask)[0])
truth = masked.values[j]
masked = masked.copy(values=np.where(masked.mask, np.nan, masked.values))
print(f"missing gas: {model.stats.names[j]}, true value {truth:.3f}")

# %% [markdown]
# GA (population 20, 25 generations) and PSO (swarm 20, 50 iterations), then
# the exhaustive grid at spacing 0.001 in normalized units.

# %%
for name in ("ga", "pso", "mean"):
    res = imputer.impute(model, masked, ImputeConfig(optimizer=name, seed=0))
    value = res.record.values[j]
    ok = within_std_correct(value, truth, model.stats.std[j])
    print(f"{name:>4}: {value:10.3f}  objective {res.objective:.3e}  "
          f"evaluations {res.evaluations:5d}  within one std: {ok}")

point, best = imputer.grid_oracle(model, masked, 1e-3)
full = np.full(10, 0.5)
full[j] = point[0]
print(f"grid: {model.stats.unscale(full)[j]:10.3f}  objective {best:.3e}")

# %% [markdown]
# The objective along the missing coordinate is smooth and has a single
# basin here, which is why both optimizers land on the grid minimum.

# %%
xs = np.linspace(0, 1, 11)
vals = imputer.em_objective_batch(model, masked, xs[:, None])
for x, v in zip(xs, vals):
    print(f"{x:4.1f}  {v:.4f}  " + "#" * int(60 * v / vals.max()))

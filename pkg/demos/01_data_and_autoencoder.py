# # Synthetic DGA records and the autoencoder
#
# Field gas readings are not public, so we draw records from a correlated
# log-normal generator. A handful of latent factors drive all ten gases, which
# is what gives an autoencoder something to learn.

# %%
import numpy as np

from dgaimpute import autoenc, synthgen
from dgaimpute.data import GASES, fit_normalizer

ds = synthgen.generate(synthgen.GenConfig(n_records=700, seed=1))
train, test = ds[:500], ds[500:]
print(len(train), "training records,", len(test), "test records")

# %% [markdown]
# The default rule table marks a record unusable when hydrogen, acetylene or
# carbon monoxide exceed a threshold. Roughly a third of records end up unusable.

# %%
labels = [r.label.value for r in ds]
print({name: labels.count(name) for name in sorted(set(labels))})

# %% [markdown]
# Gas scales differ by orders of magnitude, so everything is min-max scaled
# onto [0.1, 0.9] with training statistics before reaching a network.

# %%
stats = fit_normalizer(train)
for name, lo, hi, sd in zip(GASES, stats.min, stats.max, stats.std):
    print(f"{name:>5}  min {lo:10.2f}  max {hi:10.2f}  std {sd:10.2f}")

# %% [markdown]
# A 10-7-10 autoencoder trained with scaled conjugate gradients. The hidden
# layer is narrower than the input, so the network has to exploit the
# correlation between gases to reproduce its input.

# %%
model = autoenc.train_autoencoder(train)
print(f"epochs run: {len(model.trace)}")
print(f"final training error: {model.trace[-1]:.2e}")
print(f"test reconstruction error: {autoenc.reconstruction_error(model, test):.2e}")

# %%
x = model.stats.scale(test[0].values)
y = model.reconstruct(x[None])[0]
print(np.round(np.c_[x, y], 4))

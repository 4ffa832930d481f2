# %% [markdown]
# # Rearrangements, Lorentz norms and truncation
#
# u = 1/|x| is in no single Lebesgue space but splits into L^2 + L^4 pieces.

# %%
import numpy as np

from dhgrad import lorentz_norm, lp_norm, sum_space_norm, truncate, weak_norm
from dhgrad.norms import RearrangedProfile, radial_samples

# %%
edges = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 4000)])
prof = RearrangedProfile.from_samples(*radial_samples(lambda r: 1.0 / r, edges))
print("weak L^3 norm", weak_norm(prof, 3.0))

# %%
res = sum_space_norm(prof, 2.0, 4.0)
print(f"L^2 + L^4 norm {res.value:.5f} at k = {res.k:.4f}")

# %%
gauss = RearrangedProfile.from_samples(*radial_samples(lambda r: np.exp(-r**2 / 2), np.linspace(0, 12, 4001)))
print("L^2", lp_norm(gauss, 2.0), "exact", np.pi**0.75)
print("L^(3,2)", lorentz_norm(gauss, 3.0, 2.0))
G, T = truncate(np.array([0.2, 1.5, -3.0]), 1.0)
print(G, T)

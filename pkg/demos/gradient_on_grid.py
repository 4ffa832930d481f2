# %% [markdown]
# # Nonlocal gradient of a Gaussian on a periodic grid
#
# Compute G u spectrally, check it is curl free and reconstruct u from it.

# %%
import numpy as np

from dhgrad import (Grid3, KernelSpec, curl_residual, gaussian_field, make_kernel,
                    nonlocal_gradient_spectral, radial_ft, reconstruct)
from dhgrad.field_ops import limit_s_to_1

# %%
grid = Grid3(64, 16.0)
u = gaussian_field(grid)
prof = make_kernel(KernelSpec.default("riesz", s=0.7))
sp = radial_ft(prof, xi_min=1e-3, xi_max=1e3, n=1024)
Gu = nonlocal_gradient_spectral(u, sp)
print("curl residual", curl_residual(Gu))

# %%
back = reconstruct(Gu, sp, u.values.mean())
print("relative reconstruction error", np.linalg.norm(back.values - u.values) / np.linalg.norm(u.values))

# %% [markdown]
# As s -> 1 the Riesz gradient approaches the classical one.

# %%
for row in limit_s_to_1(u, (0.9, 0.95, 0.99)):
    print(row)

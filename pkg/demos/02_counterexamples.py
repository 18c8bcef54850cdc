# %% [markdown]
# # Two continuous-time averages with closed forms
#
# With the weight `2 sin^2(pi y)` and `F1 = F2 = sin(2 pi x)` started at 0,
# the continuous average has an exact expression. Two rotation choices are
# interesting.

# %%
import math

from multiergodic import AverageSpec, Continuous, cmw, counterexample_H, make_joint, make_sin, make_weight, resonant_H
from multiergodic.analysis import envelope, fit_power
from multiergodic.averaging import counterexample_rhos

sin = make_sin(1)
w = make_weight("sin2")

# %% [markdown]
# ## A nonresonant pair that stalls at third order
#
# `rho = (4 +- pi)/2` has gap `pi`. Along `T_n = n/pi` one of the two
# oscillating terms vanishes and what is left decays like `T^-3`, no matter how
# smooth the weight is.

# %%
r1, r2 = counterexample_rhos()
for T in (5.0, 10.0, 20.0):
    q = cmw(AverageSpec(w, (sin, sin), make_joint([r1, r2]), 0.0, Continuous(T))).value
    print(f"T={T:5.1f}  quadrature={q: .15e}  closed form={counterexample_H(T): .15e}")

curve = [(n / math.pi, abs(counterexample_H(n / math.pi))) for n in range(5, 201)]
print(fit_power(envelope(curve)))

# %% [markdown]
# ## A resonant pair that converges to the wrong limit
#
# With `rho1 = rho2` the product is `sin^2`, whose mean is 1/2, while the
# product of the means is 0.

# %%
phi = (math.sqrt(5) - 1) / 2
for T in (10.0, 100.0, 1000.0):
    r = cmw(AverageSpec(w, (sin, sin), make_joint([phi, phi]), 0.0, Continuous(T)))
    print(f"T={T:7.1f}  value={r.value:.12f}  closed form={resonant_H(T, phi):.12f}  error vs target={r.abs_error:.6f}")

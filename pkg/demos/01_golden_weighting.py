# %% [markdown]
# # Weighting a two-factor average along a golden rotation
#
# Two copies of `sin(2 pi x)` are averaged along the orbit of
# `theta -> theta + ((sqrt 5 - 1)/2, 1)` starting at `theta0 = 0.1`. The
# second rotation is an integer, so its factor is frozen at `sin(0.2 pi)`;
# all the dynamics comes from the golden factor.

# %%
import numpy as np

from multiergodic import AverageSpec, Discrete, error_curve, make_joint, make_sin, make_weight
from multiergodic.analysis import envelope, fit_power, fit_stretched, window
from multiergodic.rotations import golden

sin = make_sin(1)
joint = make_joint([golden(), 1.0])


def spec(weight):
    return AverageSpec(make_weight(weight), (sin, sin), joint, 0.1, Discrete(10))


# %% [markdown]
# ## Error curves
#
# `error_curve` returns one result per N, each carrying its own rounding floor.

# %%
grid = np.unique(np.round(np.geomspace(10, 20000, 120)).astype(int))
plain = error_curve(spec("uniform"), grid)
bumped = error_curve(spec("bump"), grid)

print(f"{'N':>6} {'uniform':>12} {'bump':>12}")
for a, b in zip(plain, bumped):
    if a.scale in (10, 20, 50, 100, 200, 500, 1000, 2000):
        print(f"{a.scale:6d} {a.abs_error:12.3e} {b.abs_error:12.3e}")

# %% [markdown]
# ## Rates
#
# The unweighted curve oscillates, so fit its dyadic envelope. The weighted
# curve hits the rounding floor near N = 250; only the points above it count.

# %%
print(fit_power(window(envelope(plain), 100, 1e4)))

env = window(envelope(bumped), 20, 1000)
p, s = fit_power(env), fit_stretched(env)
print(p)
print(s)
print("stretched beats power:", s.residual < p.residual)

# %% [markdown]
# ## Plot (optional)

# %%
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots()
    ax.loglog([r.scale for r in plain], [r.abs_error for r in plain], label="uniform")
    ax.loglog([r.scale for r in bumped], [max(r.abs_error, 1e-18) for r in bumped], label="bump")
    ax.set_xlabel("N")
    ax.set_ylabel("abs error")
    ax.legend()
    fig.savefig("golden_weighting.png", dpi=120)

# %% [markdown]
# # Small divisors, lattice shells and summability audits
#
# The rate of a weighted average is governed by how small `k . rho - n` can
# get, and by how fast the Fourier coefficients decay to pay for it.

# %%
import math

import numpy as np

from multiergodic import (
    audit_boundedness,
    audit_truncated_smallness,
    bump_derivative_l1,
    continued_fraction,
    make_joint,
    shell_count,
    smallest_divisor,
)
from multiergodic.rotations import diophantine_witness, golden, liouville_truncated

# %% [markdown]
# ## Golden versus nearly rational

# %%
for name, rot in (("golden", golden()), ("liouville", liouville_truncated())):
    j = make_joint([rot])
    scans = [smallest_divisor(j, K) for K in (10, 100, 1000)]
    print(name, [(s.argmin_k, f"{s.min_divisor:.2e}") for s in scans])
    print("   K * min divisor:", [f"{diophantine_witness(j, K, 1.0):.3g}" for K in (10, 100, 1000)])

print(continued_fraction(liouville_truncated().phases[0], 6)[0])

# %% [markdown]
# ## Shells of the eta-weighted lattice
#
# Finitely supported integer sequences with `sum max(1,|j|)^2 |k_j| = nu`.
# The count grows only like `exp(C sqrt(nu) log nu)`.

# %%
for nu in (4, 8, 12, 16, 20):
    c = shell_count(2, nu)
    print(f"nu={nu:2d} count={c:8d} log(count)/(sqrt(nu) log nu)={math.log(c) / (math.sqrt(nu) * math.log(nu)):.3f}")

# %% [markdown]
# ## Derivatives of the bump
#
# `log ||w^(n)||_1 / (n log n)` stays bounded, i.e. the norms grow like `n^(beta n)`.

# %%
for n in range(2, 13, 2):
    l1 = bump_derivative_l1(n)
    print(f"n={n:2d} ||w^(n)||_1={l1:.4e} ratio={math.log(l1) / (n * math.log(n)):.3f}")

# %% [markdown]
# ## Audits
#
# Polynomial small divisors against analytic coefficients: partial sums settle
# for every power tried. Quadratic decay against linear divisors with m = 3 does not.

# %%
for m in range(1, 6):
    a = audit_boundedness("power:2.5", ["analytic:0.5"] * 2, m, 1, list(range(10, 101, 10)))
    print(m, a.verdict.value, f"{a.partial_sums[-1]:.6g}")
print(audit_boundedness("power:1", ["power:2"], 3, 1, [10, 20, 40, 80, 160]).verdict.value)

tail = audit_truncated_smallness(["double_exp:1"] * 2, "exp:0.25", "sqrt", 2, np.linspace(5, 60, 23), eta=2)
print(tail.verdict.value, f"rate={tail.details['rate']:.2f}")

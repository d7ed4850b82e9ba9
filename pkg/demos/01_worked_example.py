"""
A two-atom instance solved by hand and by machine
=================================================

Two atoms ``a, b`` of mass 1, both slots use the family ``u = (3, 0)``,
``v = (0, 1)``, weights ``theta = (1/2, 1/2)`` and exponent ``q = 1/2``.
Stationarity of ``(3 alpha)**q + beta**q`` on the simplex gives
``alpha = 3 beta``, so the least constant is 2 at ``g = (3/4, 1/4)``.
"""

# %%
from pathlib import Path

import numpy as np

from disentangle import (
    Factorisation,
    OracleConfig,
    brute_force_search,
    build_factorisation,
    evaluate_functional,
    identity_check,
    load_instance,
    maximize,
    verify_factorisation,
)

e1 = load_instance(Path(__file__).parent / "data" / "e1.json")
print("I at (3/4, 1/4):", evaluate_functional(e1, [[0.75, 0.25], [0.75, 0.25]]))

# %%
# The solver: multistart projected ascent, then a Newton polish on the
# first-order conditions.
ext = maximize(e1)
print("A =", ext.value, " g =", [g.round(12) for g in ext.g])
print("T_j g_j =", ext.transformed[0], " KKT gap:", ext.kkt_gap)

# %%
# An independent check: exhaustive search over a 1001 x 1001 grid.
orc = brute_force_search(e1, OracleConfig(resolution=1000))
print("oracle:", orc.value, "+-", orc.grid_bound)

# %%
# The factorisation phi_i = prod_j (T_j g_j)**(theta_j q) / T_i g_i.
fac = build_factorisation(ext, e1)
print("phi =", fac.phi[0])  # (2/3, 2)
rep = verify_factorisation(e1, fac)
print("geometric side:", rep.geometric_bound, "componentwise:", rep.componentwise[0])
print("passed:", rep.passed, " identity gap:", identity_check(ext, e1))

# %%
# Raising one entry breaks the componentwise bound at key v.
bad = Factorisation((np.array([2 / 3, 2.1]), fac.phi[1]), fac.constant, fac.q)
print("tampered:", verify_factorisation(e1, bad).failures)

"""
Saturation, covers, and the two instance rewrites
=================================================
"""

# %%
import numpy as np

from disentangle import (
    MeasureSpace,
    WeightFamily,
    brute_force_constant,
    check_saturation,
    check_strong_saturation,
    composite_support_check,
    dummy_lift,
    greedy_cover,
    upgrade_to_probability,
)
from disentangle.generate import random_instance

pair = MeasureSpace(("a", "b"), [1.0, 1.0])
uv = WeightFamily(("u", "v"), [[3.0, 0.0], [0.0, 1.0]])
print("saturating:", check_saturation(pair, uv),
      " strong key:", check_strong_saturation(pair, uv))

# %%
# Greedy cover: each step takes the key capturing the most uncovered mass.
fam = WeightFamily(("small", "big"), [[1, 0], [1, 1]])
print(greedy_cover(MeasureSpace(("a", "b"), [2.0, 1.0]), fam))

# %%
# Upgrade to a probability space with strongly saturating families.  Each
# family gains an aggregate key, positive on the whole support.
up = upgrade_to_probability(MeasureSpace(("a", "b"), [2.0, 2.0]), [uv, uv])
print("nu =", up.nu.mass, " w =", up.w)
print("V_0 =", dict(zip(up.augmented[0].keys, up.augmented[0].values.tolist())))

# %%
# The dummy lift turns an exponent-q instance into a q = 1 instance with
# one more slot.  Least constants agree.
inst = random_instance(np.random.default_rng(3), probability=True)
lifted = dummy_lift(inst)
print("theta:", inst.theta, "->", lifted.theta)
print("constants:", brute_force_constant(inst), brute_force_constant(lifted))

# %%
# Products of saturating families still saturate; disjoint single keys do not.
print(composite_support_check(pair, [uv, uv]),
      composite_support_check(pair, [WeightFamily(("u",), [[3, 0]]),
                                     WeightFamily(("v",), [[0, 1]])]))

"""
Passing to q = 1 along a schedule
=================================

At ``q = 1`` a maximiser of the two-atom example vanishes on atom ``b``, so
the factorisation formula cannot be used there.  Instead we solve at
``q = 1 - 2**-m`` for m = 1..12 and watch the normalised ``phi / A``.  For
disjointly supported weights the limit is ``1_{supp u}/|u|_1 +
1_{supp v}/|v|_1 = (1/3, 1)``, and the q = 1 constant is
``max(|u|_1, |v|_1) = 3``.
"""

# %%
from pathlib import Path

from disentangle import brute_force_constant, dummy_lift, limit_certificate, load_instance, q_sweep

e1 = load_instance(Path(__file__).parent / "data" / "e1.json")
res = q_sweep(e1)  # mu is not a probability, so the instance is upgraded first
for p in res.points:
    print(f"q={p.q:.6f}  A={p.factorisation.constant:.6f}  phi/A={p.normalized_phi[0]}")

# %%
# Each factorisation also certifies every earlier exponent of the schedule.
print(len(res.monotonicity), "transfers,",
      sum(not m.report.passed for m in res.monotonicity), "violations")

# %%
a1 = brute_force_constant(e1.with_q(1.0))
lifted = brute_force_constant(dummy_lift(e1.with_q(res.schedule[-1])))
print("A_1 =", a1, " lifted constant at the last q:", lifted)
cert = limit_certificate(e1, res.limit_estimate, a1)
print("limit certificate:", cert.passed, cert.geometric_bound, cert.componentwise)

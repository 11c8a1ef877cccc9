"""
Weak drive: efficiency, transfer rate and the quasi-dark state
==============================================================

At Omega = kappa / 100 the pair leaves |i,0> exponentially with rate
Omega^2 / (Gamma (2C + 1)). The steady superposition it follows is close
to the first-order dark state over (|i,0>, |e,0>, |g,1>).
"""

# %%
from cavchem import analytics, validation
from cavchem.analytics import mhz

gamma = mhz(12.0)
p = analytics.SystemParams.from_cooperativity(5.0, gamma, gamma)
p = p.replace(omega=p.kappa / 100)

# %%
# Every engine-vs-formula comparison at this point: efficiency, fitted
# rate, dark-state populations (from a repump-closed steady state) and
# independence of the repump rate.
for r in validation.weak_drive_point(p):
    print(f"{r.name:<28} engine {r.engine:.8g}  formula {r.oracle:.8g}  rel. error {r.rel_error:.1e}")

# %%
# The dark-state amplitudes themselves.
D = analytics.dark_state(p)
for label, amp in zip(("i,0", "e,0", "g,1"), D):
    print(f"|{label}>: {amp:.3e}")

"""
Collective decay of N = 1..3 molecules in one cavity mode
=========================================================

All molecules start in |e> with the cavity empty and the drive off. Shared
coupling to the mode speeds up the decay for two and three molecules.
Whether the per-molecule cavity yield also grows depends on how much of
the free-space decay lands back in |g>: a molecule sitting in |g> can
reabsorb a photon that another molecule put into the cavity.
"""

# %%
from cavchem import analytics, collective
from cavchem.analytics import mhz

gamma = mhz(12.0)
p = analytics.SystemParams.from_cooperativity(1.0, 10 * gamma, gamma, f_fc=0.37)
print(f"single-molecule reference eta_pi = {analytics.eta_pi(p.g, p.kappa, p.gamma):.6f}")

# %%
for n in (1, 2, 3):
    traj, obs = collective.run_collective_decay(n, p, diagnostics=False)
    print(f"N = {n}: dimension {collective.CollectiveBasis(n).dim:3d}, "
          f"yield per molecule {obs.cavity_yield_per_molecule:.6f}, "
          f"1/e decay rate {collective.decay_rate(traj) / gamma:.4f} Gamma")

# %%
# Branching-ratio sweep (N = 1, 2). The single-molecule yield does not
# depend on f_fc; for N = 2 reabsorption by a |g> neighbour grows with f_fc
# and eventually reverses the enhancement.
for f in (0.0, 0.37, 0.5, 0.7, 1.0):
    q = p.replace(gamma_g=f * gamma, gamma_h=(1 - f) * gamma)
    y = [collective.run_collective_decay(n, q, diagnostics=False)[1].cavity_yield_per_molecule for n in (1, 2)]
    print(f"f_fc = {f:4.2f}: N=1 {y[0]:.5f}  N=2 {y[1]:.5f}")

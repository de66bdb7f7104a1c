"""Checking the exact law against simulated walks.

Walks are stopped once they leave a ball of radius R; far from the set they
move in large multinomial blocks, which keeps the cost per walk small. The
truncated count J_R sits below J, and the bias bound reports how far.
A short run is used here; the acceptance suite uses 2e5 walks at R = 1000.
"""

from occulattice import SimConfig, ball1, estimate_tail_slope, occupation_law, simulate_occupation, srw

walk = srw(3)
sites = ball1(3)
est = simulate_occupation(SimConfig.for_set(walk, sites, n_walks=20_000, radius=300.0, seed=1))
law = occupation_law(walk, sites)

print(f"mean steps per walk: {est.mean_steps:.0f}, bias bound: {est.bias_bound:.2e}")
print(" u   simulated   exact      stderr")
for u in range(0, 12):
    print(f"{u:2d}   {est.survival_hat(u):.5f}    {law.survival(u):.5f}    {est.stderr(u):.5f}")

slope, err = estimate_tail_slope(est, 4, 14)
print(f"\nfitted tail rate {slope:.4f} +- {err:.4f}; exact leading rate {law.tail_asymptote()[1]:.4f}")

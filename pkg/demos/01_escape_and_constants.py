"""Escape probabilities and frequently-visited-set constants.

Start with the simple random walk on Z^3. The walk returns to the origin with
probability 1 - gamma_3, so the mean number of visits is G(0) = 1 / gamma_3.
For a finite set A, the Perron eigenvalue Lambda_A of the Green matrix plays
the part of G(0), and -1 / log(1 - 1/Lambda_A) is the growth constant of the
most visited translate of A.
"""

from occulattice import ball1, escape_probability, green, lambda_max, limit_constant, origin_set, pair_set, sphere1, srw

for d in (3, 4):
    walk = srw(d)
    g0 = green(walk, (0,) * d)
    print(f"d={d}: G(0) = {g0:.12f}, gamma = {escape_probability(walk):.12f}")

walk = srw(3)
print("\nPerron eigenvalues and limit constants on Z^3")
for name, sites in [("origin", origin_set(3)), ("pair {0, e1}", pair_set((1, 0, 0))),
                    ("unit sphere", sphere1(3)), ("unit ball", ball1(3))]:
    lam = lambda_max(walk, sites)
    c = limit_constant(lam)
    print(f"  {name:<14} Lambda = {lam:.6f}  theta* = {c.theta_star:.6f}  constant = {c.constant:.6f}")

# larger sets are visited more often in total, so the constant grows with the set

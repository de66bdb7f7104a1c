"""The exact law of the total time spent in a set.

Diagonalising G_A gives P(J > u) = sum_j h_j f_j^u with f_j = 1 - 1/lambda_j.
For a single site this is the geometric law. For the unit ball two eigenvalues
carry weight and one ratio is negative, so the law is not a mixture of
geometrics: consecutive survival ratios oscillate before settling.
"""

from occulattice import ball1, occupation_law, origin_set, srw

walk = srw(3)
single = occupation_law(walk, origin_set(3))
ball = occupation_law(walk, ball1(3))

print("nonzero weights for the ball:")
for h, f in zip(ball.weights, ball.ratios):
    if abs(h) > 1e-10:
        print(f"  h = {h:+.6f}   f = {f:+.6f}")

print("\n u   P(J>u) origin   P(J>u) ball   ratio S(u+1)/S(u) for the ball")
for u in range(0, 10):
    print(f"{u:2d}   {single.survival(u):.6e}    {ball.survival(u):.6e}   {ball.survival(u + 1) / ball.survival(u):.6f}")

h1, theta = ball.tail_asymptote()
print(f"\ntail: P(J>u) ~ {h1:.6f} * exp(-{theta:.6f} u)")

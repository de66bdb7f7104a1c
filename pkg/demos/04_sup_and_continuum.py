"""Most visited sites along one path, and the continuum limit.

For a path of n steps, the largest local time divided by log n drifts toward
the limit constant for {0}, about 0.9283. Convergence is logarithmic, so even
long paths only show the trend.

Shrinking the lattice spacing over the unit ball, the rescaled Perron
eigenvalue eps^2 Lambda sigma^2 approaches 8 / pi^2, the norm of the
Newtonian potential operator on the ball.
"""

from fractions import Fraction

from occulattice import DomainSpec, convergence_study, limit_trend, origin_set, srw

walk = srw(3)
rows, _ = limit_trend(walk, origin_set(3), [10**4, 10**5, 10**6], reps=5, seed=3)
for r in rows:
    print(f"n={r.n:>8}: median sup/log n = {r.median_x:.3f} (IQR {r.q1_x:.3f}..{r.q3_x:.3f}), limit {r.predicted:.4f}")

rep = convergence_study(walk, DomainSpec.ball(1, 3), [Fraction(1, 4), Fraction(1, 6), Fraction(1, 8)])
print()
for row in rep.rows:
    print(f"eps={str(row.epsilon):>4}  |L|={row.set_size:5d}  value={row.rescaled_value:.6f}  "
          f"reference={row.reference:.6f}  error={row.relative_error:.1%}")

"""Sweeping the exponent toward the critical value.

For each exponent the sweep computes the coupled and uncoupled ground
states, the ray scaling onto the critical manifold, and a concentration
estimate.  At fixed resolution the levels m_p descend toward the critical
level m_star as p increases (the limit itself is out of reach of any
fixed grid: concentration eventually drops below the spacing).
"""

import sps

grid = sps.build_grid(sps.DomainSpec.ball(1.0), 17)
params = sps.ProblemParams(lam=1.0, p=5.0)
opts = sps.SolveOptions(seed=7)
m_star = sps.critical_level(10_000)

records = sps.sweep_p(grid, params, [4.4, 4.8, 5.2, 5.6], opts)

print(f"m_star = {m_star:.6f}\n")
print(f"{'p':>4} {'m_p':>10} {'m_tilde':>10} {'m_p - m_*':>10} "
      f"{'t_*':>8} {'R_est':>8} {'conv':>5}")
for r in records:
    print(f"{r.p:>4.1f} {r.m_p:>10.5f} {r.m_tilde_p:>10.5f} "
          f"{r.m_p - m_star:>+10.5f} {r.t_star_simple:>8.4f} "
          f"{r.R_est:>8.4f} {r.converged!s:>5}")

print("\nthe gap m_p - m_star shrinks as p approaches the critical "
      "exponent,")
print("the uncoupled level always sits below the coupled one, and the")
print("ray scaling t_* onto the critical manifold approaches 1.")

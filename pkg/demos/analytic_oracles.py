"""Closed forms, quadrature, and the analytic inequalities.

Every expectation the laboratory verifies by simulation also has an
analytic oracle; this script shows the oracles agreeing with each other
and the inequality checks holding on a coarse grid.
"""

import math

from sbmlab.kernels import (
    C2,
    C3,
    bm_abs_moment,
    expected_local_time,
    green_function_3d,
    local_time_mean_closed,
    occupation_singular_integral,
    singular_kernel_moment,
)

print("== Green function vs long-horizon occupation (d=3) ==")
for r in (0.5, 0.2, 0.1):
    finite = local_time_mean_closed(50.0, r, 3)
    print(f"  |x|={r}: E L_50 = {finite:.6f}   c3/|x| = {green_function_3d((r, 0, 0)):.6f}")

print("\n== Quadrature matches the closed forms ==")
for d in (2, 3):
    q = expected_local_time(1.0, 0.2, d)
    c = local_time_mean_closed(1.0, 0.2, d)
    print(f"  d={d}: quad = {q.value:.12f} (err<{q.abs_error_estimate:.1e})  closed = {c:.12f}")

print("\n== Mollification bias ladder (d=3, |x|=0.2, t=1) ==")
limit = local_time_mean_closed(1.0, 0.2, 3)
for k in (16.0, 4.0, 1.0):
    eps = k * (0.2 / 4.0) ** 2
    val = local_time_mean_closed(1.0, 0.2, 3, eps=eps)
    print(f"  eps={eps:.2e}: mean = {val:.6f}  bias = {val - limit:+.2e}")

print("\n== Singular moment bound  E|B_t - x|^(-a) <= lhs of C t^(-a/2) ==")
for d, alpha in ((3, 1.0), (3, 2.5), (2, 1.5)):
    worst = 0.0
    for t in (0.1, 1.0, 5.0):
        for r in (0.0, 0.3, 1.0):
            got = singular_kernel_moment(t, r, alpha, d).value
            worst = max(worst, got * t ** (alpha / 2.0))
    print(f"  d={d} alpha={alpha}: sup over grid of E*t^(a/2) = {worst:.4f}")

print("\n== Occupation bound, equality at the origin ==")
for d in (2, 3):
    lhs = occupation_singular_integral(1.0, 0.0, 1.0, d).value
    rhs = 2.0 / (d - 1) * bm_abs_moment(1.0, d)
    print(f"  d={d}: int_0^1 E|B_s|^-1 ds = {lhs:.10f}   (2/(d-1)) E|B_1| = {rhs:.10f}")

print("\n== Planar centering constant ==")
print(f"  c2 = 1/pi = {C2:.12f}; centered mean at |x|=0.05: "
      f"{local_time_mean_closed(1.0, 0.05, 2) - C2 * math.log(1 / 0.05):+.6f}")

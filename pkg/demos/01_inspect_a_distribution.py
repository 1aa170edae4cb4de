"""
Inspecting a correlated step distribution
=========================================

Parse a two-step distribution from its text format, then read off the
quantities the rest of the toolkit is built on: diagonal mass, product
mass, the double-sample kernel, and the correlation between steps.
"""

from pathlib import Path

from corrhit import (
    alpha,
    beta,
    double_sample_kernel,
    equal_marginals,
    kernel_second_eigenvalue,
    marginal,
    maximal_correlation,
    parse_distribution,
    rho,
)

here = Path(__file__).parent

# the running example: alphabet {0, 1, 2}, two steps, mass 1/6 on each
# diagonal pair (a, a) and on each forward cycle edge (a, a+1 mod 3)
p = parse_distribution((here / "data" / "basic.dist").read_text())
print("support:")
for tup, w in p.support():
    print("  ", tup, w)

# alpha is the smallest diagonal cell; beta the smallest product of
# marginal supports that the distribution can hit jointly
print("alpha =", alpha(p))
print("beta  =", beta(p))
print("equal marginals:", equal_marginals(p))
print("step-1 marginal:", marginal(p, 1).probs)

# the double-sample kernel resamples step 2 twice given step 1;
# for this distribution it is the circulant (1/2, 1/4, 1/4)
k = double_sample_kernel(p, 1)
for row in k.rows:
    print("kernel row:", row)
print("lambda_2 =", kernel_second_eigenvalue(k))

# two independent routes to the correlation between the steps:
# sqrt of the kernel's second eigenvalue, and an SVD of the joint table
print("rho (eigen route) =", rho(p))
print("rho (svd route)   =", maximal_correlation(p, [1], [2]))

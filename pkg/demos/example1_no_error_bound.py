"""Example 1: a solvable problem whose merit admits no linear error bound.

nu(x) = sqrt(x1^4 + x2^4) on the negative orthant. The unique solution is the
origin, yet the slope of nu along x_n = (-1/n, -1/n) is 2/n, so no constant
tau > 0 can make dist(x, Solv) <= nu(x) / tau hold near 0.

    python3 demos/example1_no_error_bound.py
"""

import math

import numpy as np

from svebound import RunConfig, example_1
from svebound.certify import BoundCertificate, CertificationFailed, certify_via_sigma, validate_bound
from svebound.merit import nu
from svebound.slope import restricted_slope, ssinf_upper

p = example_1()
cfg = RunConfig()
sampled = cfg.with_(use_closed_form=False)

print("sampled merit against the closed form")
for x in ([-2.0, -2.0], [-1.0, -0.5], [-0.2, 0.0]):
    v = nu(p, x, sampled).nu
    print(f"  x={x}  nu~{v:.6f}  exact={math.sqrt(x[0] ** 4 + x[1] ** 4):.6f}")

print("\nslope along x_n = (-1/n, -1/n)")
for n in (2, 5, 10, 20):
    s = restricted_slope(p, [-1 / n, -1 / n], cfg).value
    print(f"  n={n:>2}  slope={s:.4f}  2/n={2 / n:.4f}")

ss = ssinf_upper(p, cfg, extra_probes=[[-1 / n, -1 / n] for n in range(1, 21)])
print(f"\nss-inf is at most {ss.upper_bound:.2e} (witness {np.round(ss.argmin_witness, 6)})")

try:
    certify_via_sigma(p, cfg)
except CertificationFailed as e:
    print(f"sigma route: no certificate ({e.stage})")

row = validate_bound(p, BoundCertificate.forced(1.0), [[-0.1, -0.1]], cfg).rows[0]
print(f"forcing tau = 1 at (-0.1, -0.1): bound {row.bound:.4f} < distance {row.true_dist:.4f}")
print("no valid error bound: confirmed" if not row.passed else "unexpected: bound held")

"""Example 2: the sector K_theta, where the B-derivative route gives sigma = sin(theta).

f(x, z) = z - x and C = R^2_+. Moving from x toward the apex along
-(cos, sin) of the sector's lower edge pushes every image into C with depth
sin(theta), so dist(x, Solv) <= nu(x) / sin(theta) on K.

    python3 demos/sector_sigma_bound.py [theta]
"""

import math
import sys

import numpy as np

from svebound import RunConfig, example_2
from svebound.certify import certify_via_sigma, validate_bound
from svebound.slope import restricted_slope
from svebound.solver import solve

theta = float(sys.argv[1]) if len(sys.argv) > 1 else math.pi / 6
p = example_2(theta)
cfg = RunConfig()

cert = certify_via_sigma(p, cfg)
print(f"theta = {theta:.4f}: sigma = {cert.constant:.6f}, sin(theta) = {math.sin(theta):.6f}")
for c in cert.audit:
    print(f"  audit {c.name:<12} {c.status}")

table = validate_bound(p, cert, cfg=cfg)
worst = min((r for r in table.rows if r.true_dist > 0), key=lambda r: r.bound / r.true_dist)
print(f"validation: {sum(r.passed for r in table.rows)}/{len(table.rows)} rows pass; "
      f"tightest row x={np.round(worst.x, 3)} bound {worst.bound:.3f} >= dist {worst.true_dist:.3f}")

x = np.array([1.0, 1.2])
print(f"restricted slope at {x}: {restricted_slope(p, x, cfg).value:.4f} (>= sigma)")

r = solve(p, cfg, cert, 1.2 * np.array([math.sqrt(3), 1.0]))
print(f"solve: status {r.status}, |x*| = {np.linalg.norm(r.x_star):.2e}, "
      f"certified distance {r.certified_distance:.2e}, {r.evaluations} evaluations")

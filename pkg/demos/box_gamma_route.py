"""The subdifferential route on a box: f(x, z) = -x, C = R^2_+, K = [0, 1]^2.

Here nu(x) = |x| on K and Solv = {0}. At every probe the summed hull of the
subdifferential and the capped normal cone stays away from the origin, which
certifies dist(x, Solv) <= nu_K(x) / gamma on the whole plane.

    python3 demos/box_gamma_route.py
"""

import json
from pathlib import Path

import numpy as np

from svebound import RunConfig
from svebound.certify import CertificationFailed, certify_via_gamma, certify_via_sigma, validate_bound
from svebound.serialize import load_problem
from svebound.subdiff import gamma_at

p = load_problem(str(Path(__file__).parent / "problems" / "box.json"))
cfg = RunConfig()

for x in ([0.5, 0.5], [1.0, 0.2], [-1.0, 2.0], [2.0, 2.0]):
    r = gamma_at(p, np.array(x), cfg)
    print(f"gamma at {x}: {r.gamma_value:.4f}")

cert = certify_via_gamma(p, cfg)
print(f"\ncertificate: gamma_hat {cert.details['gamma_hat']:.4f}, constant {cert.constant:.4f} "
      f"({cert.bound_form})")
table = validate_bound(p, cert, cfg=cfg)
print(f"validation over the plane: {'pass' if table.passed else 'FAIL'} ({len(table.rows)} rows)")

try:
    certify_via_sigma(p, cfg)
except CertificationFailed as e:
    print(f"sigma route: {e.stage} ({e.message})")

print("\ncertificate JSON head:")
print(json.dumps({k: cert.to_dict()[k] for k in ("route", "constant", "bound_form")}))

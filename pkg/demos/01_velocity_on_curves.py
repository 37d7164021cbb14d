# Boundary velocity of a single patch: the circle, an ellipse, and how the
# two quadrature rules compare as N grows.
import numpy as np

from alphapatch import PatchConfig, sample_curve, self_velocity, normal_velocity
from alphapatch.curve import derivative
from alphapatch.tangential import lambda_qg, speed_report

circle = lambda N: sample_curve(lambda g: np.stack([np.cos(g), np.sin(g)], 1), N)
ellipse = lambda N: sample_curve(lambda g: np.stack([np.cos(g), 0.5 * np.sin(g)], 1), N)

# a circle only rotates: no normal flux, constant tangential speed
for alpha in (0.3, 0.7, 1.0):
    c = circle(128)
    v = self_velocity(c, PatchConfig(alpha))
    print(f"alpha {alpha}: max|u.n| = {np.abs(normal_velocity(c, PatchConfig(alpha))).max():.1e}, "
          f"|u| = {np.linalg.norm(v, axis=1).mean():.12f}")

# with unit prefactor at alpha = 1 the speed is exactly 4
v = self_velocity(circle(64), PatchConfig(1.0, prefactor=1.0))
print("unit-prefactor QG speed on the circle:", np.linalg.norm(v, axis=1)[:3])

# spectral product weights versus the plain trapezoid rule, on an ellipse
ref = self_velocity(ellipse(1024), PatchConfig(0.5))
for N in (32, 64, 128, 256):
    for rule in ("spectral", "trapezoid"):
        v = self_velocity(ellipse(N), PatchConfig(0.5), quadrature=rule)
        err = np.abs(v - ref[:: 1024 // N]).max()
        print(f"N {N:4d} {rule:9s} error {err:.2e}")

# the tangential correction turns a non-uniform speed into a uniform one
c = ellipse(128)
rep = speed_report(c)
field = lambda_qg(c, self_velocity(c, PatchConfig(1.0)))
print(f"ellipse uniformity defect {rep.uniformity_defect:.3f}, uniform form used: {field.uniform_form}, "
      f"max|lambda| = {np.abs(field.lambda_values).max():.3f}")

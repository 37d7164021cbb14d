# Evolve the three-fold perturbed circle under both schemes and watch the
# conserved quantities and the parametrisation invariants.
import numpy as np

from alphapatch import PatchConfig, SimState, StepControl, run, sample_curve
from alphapatch.curve import reparametrize_uniform

shape = lambda g: np.stack([(1 + 0.1 * np.cos(3 * g)) * np.cos(g), (1 + 0.1 * np.cos(3 * g)) * np.sin(g)], 1)
curve = reparametrize_uniform(sample_curve(shape, 128))

for scheme, alpha in (("alpha_lt1", 0.5), ("qg_with_lambda", 1.0)):
    state = SimState(0.0, [(curve, PatchConfig(alpha))], scheme=scheme)
    traj, verdict = run(state, StepControl(t_end=1.0, dt_init=2e-3, record_every=100))
    print(f"\n{scheme} (alpha {alpha}): {verdict.reason} at t = {verdict.t_final}")
    print("     t       area            L2              H3       udef      tdef")
    for r in traj.records:
        p = r.patches[0]
        print(f"{r.t:6.3f}  {p.area:.12f}  {p.l2:.12f}  {p.h3:8.4f}  {p.udef:.1e}  {p.tdef:.1e}")

# Two mirror-image ellipses with opposite jumps: the facing sides close the
# gap in finite time.  The gap history is resolution independent; the
# verdict time moves with N only through the mesh-based threshold.
import numpy as np
from pathlib import Path

from alphapatch.config import build_state, load_config
from alphapatch.integrator import StepControl, run
from dataclasses import replace

cfg = load_config(Path(__file__).with_name("collapse.yaml"))

for N in (64, 128):
    # threshold 0 lets the run continue until the curves actually touch
    ctrl = replace(cfg.ctrl, collapse_factor=0.0, record_every=5)
    traj, verdict = run(build_state(replace(cfg, N=N)), ctrl)
    t = np.array([r.t for r in traj.records])
    gap = np.array([r.min_dist for r in traj.records])
    print(f"\nN = {N}: {verdict.reason} at t = {verdict.t_final:.4f}")
    for tq in (0.0, 0.1, 0.2, 0.3, 0.4, 0.45, 0.5):
        if tq <= t[-1]:
            print(f"  t = {tq:4.2f}  gap = {np.interp(tq, t, gap):.5f}")

    traj, verdict = run(build_state(replace(cfg, N=N)), cfg.ctrl)
    print(f"  with collapse_factor {cfg.ctrl.collapse_factor}: {verdict.reason} at t = {verdict.t_final:.4f}")

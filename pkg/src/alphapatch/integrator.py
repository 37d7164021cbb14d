"""Explicit time marching of patch boundaries with certified stop conditions."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .curve import ClosedCurve, CurveError, FloatArray, arc_chord, pairwise_chords, reparametrize_uniform
from .diagnostics import DiagnosticsRecord, record
from .dynamics import SimState, mean_node_spacing, min_interpatch_distance, rhs
from .tangential import speed_report
from .velocity import NearSingularError, SingularKernelError, stiffness_rate

__all__ = [
    "SimState",
    "StepControl",
    "TerminationVerdict",
    "Trajectory",
    "StageFailure",
    "rhs",
    "step_rk4",
    "detect_stop",
    "run",
    "segments_intersect",
]

REASONS = (
    "reached_t_end",
    "arc_chord_blowup",
    "self_intersection",
    "patch_collapse",
    "dt_underflow",
    "nonfinite_state",
)

RhsFn = Callable[[SimState], list[FloatArray]]


class StageFailure(RuntimeError):
    """An RK stage produced an invalid curve; the caller should shrink dt."""


@dataclass(frozen=True)
class StepControl:
    """Time-step and stopping parameters.

    ``collapse_factor`` times the larger mean node spacing of two patches is
    the distance below which they are declared collapsed.
    ``reuniformize_threshold`` (qg_with_lambda only) resamples a patch at
    equal arclength whenever its uniformity defect exceeds it; None disables.
    ``snapshot_every`` = 0 keeps only the initial and final states.
    ``stiffness_safety`` scales the extra cap 2*sqrt(2) / (fastest linear
    mode frequency) that keeps RK4 inside its imaginary-axis stability
    interval; the velocity-based cap alone misses the log k (alpha = 1) and
    k^alpha growth of the mode frequencies.  None disables it.
    """

    t_end: float
    dt_init: float = 1e-3
    cfl: float = 0.5
    dt_min: float = 1e-10
    arc_chord_max: float = 1e4
    record_every: int = 1
    collapse_factor: float = 10.0
    reuniformize_threshold: float | None = 1e-3
    snapshot_every: int = 0
    stiffness_safety: float | None = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.dt_min <= self.dt_init:
            raise ValueError("need 0 < dt_min <= dt_init")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.stiffness_safety is not None and not 0.0 < self.stiffness_safety <= 1.0:
            raise ValueError("stiffness_safety must lie in (0, 1] or be None")


@dataclass(frozen=True)
class TerminationVerdict:
    reason: str
    t_final: float
    detail: str = ""

    def __post_init__(self) -> None:
        if self.reason not in REASONS:
            raise ValueError(f"unknown termination reason {self.reason!r}")

    @property
    def is_blowup(self) -> bool:
        return self.reason != "reached_t_end"

    def to_dict(self) -> dict:
        return {"reason": self.reason, "t_final": self.t_final, "detail": self.detail}


@dataclass
class Snapshot:
    step: int
    state: SimState


@dataclass
class Trajectory:
    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)

    @property
    def final_state(self) -> SimState:
        return self.snapshots[-1].state


def _advance(state: SimState, base: SimState, ks: list[FloatArray], a: float, t: float) -> SimState:
    try:
        curves = [ClosedCurve(c.nodes + a * k) for c, k in zip(base.curves, ks)]
    except CurveError as exc:
        raise StageFailure(str(exc)) from exc
    return state.with_curves(curves, t)


def _eval(rhs_fn: RhsFn, state: SimState) -> list[FloatArray]:
    try:
        ks = rhs_fn(state)
    except (SingularKernelError, NearSingularError) as exc:
        raise StageFailure(str(exc)) from exc
    if not all(np.isfinite(k).all() for k in ks):
        raise StageFailure("non-finite velocity")
    return ks


def step_rk4(state: SimState, dt: float, rhs_fn: RhsFn = rhs, k1: list[FloatArray] | None = None) -> SimState:
    """One classical fourth-order Runge-Kutta step of all node coordinates.

    Raises StageFailure if any stage leaves the admissible set.
    """
    if dt == 0.0:
        return state
    t = state.t
    k1 = _eval(rhs_fn, state) if k1 is None else k1
    s2 = _advance(state, state, k1, dt / 2, t + dt / 2)
    k2 = _eval(rhs_fn, s2)
    s3 = _advance(state, state, k2, dt / 2, t + dt / 2)
    k3 = _eval(rhs_fn, s3)
    s4 = _advance(state, state, k3, dt, t + dt)
    k4 = _eval(rhs_fn, s4)
    incr = [(a + 2 * b + 2 * c + d) / 6.0 for a, b, c, d in zip(k1, k2, k3, k4)]
    return _advance(state, state, incr, dt, t + dt)


def segments_intersect(curve: ClosedCurve, chord: FloatArray | None = None) -> tuple[int, int] | None:
    """First pair of non-adjacent polygon edges that properly cross, if any.

    Two crossing edges have start nodes within twice the longest edge of each
    other, so only those pairs are tested.
    """
    p = curve.nodes
    q = np.roll(p, -1, axis=0)
    N = curve.N
    r = pairwise_chords(curve) if chord is None else chord
    edge = float(np.max(np.linalg.norm(q - p, axis=1)))
    i, k = np.nonzero(np.triu(r <= 2.0 * edge))
    gap = np.abs(i - k)
    keep = np.minimum(gap, N - gap) > 1
    i, k = i[keep], k[keep]
    if i.size == 0:
        return None

    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    A, B, C, D = p[i], q[i], p[k], q[k]
    cross = (orient(A, B, C) * orient(A, B, D) < 0) & (orient(C, D, A) * orient(C, D, B) < 0)
    hits = np.flatnonzero(cross)
    if hits.size:
        return int(i[hits[0]]), int(k[hits[0]])
    return None


def detect_stop(state: SimState, ctrl: StepControl, dt: float | None = None) -> TerminationVerdict | None:
    """First triggered stop condition, checked in a fixed order."""
    t = state.t
    for i, c in enumerate(state.curves):
        if not np.isfinite(c.nodes).all():
            return TerminationVerdict("nonfinite_state", t, f"patch {i} has non-finite nodes")
    chords = [pairwise_chords(c) for c in state.curves]
    for i, c in enumerate(state.curves):
        rep = arc_chord(c, chords[i])
        if rep.self_intersecting:
            j, m = rep.argmax_pair
            return TerminationVerdict("self_intersection", t, f"patch {i}: nodes {j} and {m} coincide")
        if rep.sup_F > ctrl.arc_chord_max:
            return TerminationVerdict(
                "arc_chord_blowup", t, f"patch {i}: sup F = {rep.sup_F:.6g} > {ctrl.arc_chord_max:.6g}"
            )
    for i, c in enumerate(state.curves):
        pair = segments_intersect(c, chords[i])
        if pair is not None:
            return TerminationVerdict("self_intersection", t, f"patch {i}: edges {pair[0]} and {pair[1]} cross")
    curves = state.curves
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            d = curves[i].nodes[:, None, :] - curves[j].nodes[None, :, :]
            dist = float(np.min(np.hypot(d[..., 0], d[..., 1])))
            threshold = ctrl.collapse_factor * max(mean_node_spacing(curves[i]), mean_node_spacing(curves[j]))
            if dist < threshold:
                return TerminationVerdict(
                    "patch_collapse", t, f"patches {i},{j}: distance {dist:.6g} < {threshold:.6g}"
                )
    if dt is not None and dt < ctrl.dt_min:
        return TerminationVerdict("dt_underflow", t, f"dt = {dt:.3g} < dt_min = {ctrl.dt_min:.3g}")
    return None


def _reuniformize(state: SimState, threshold: float | None) -> SimState:
    if state.scheme != "qg_with_lambda" or threshold is None:
        return state
    curves = state.curves
    changed = False
    for i, c in enumerate(curves):
        if speed_report(c).uniformity_defect > threshold:
            curves[i] = reparametrize_uniform(c)
            changed = True
    return state.with_curves(curves) if changed else state


RK4_IMAGINARY_LIMIT = 2.0 * np.sqrt(2.0)


def stability_dt(state: SimState, safety: float) -> float:
    """Largest dt keeping every linearised self-term mode inside RK4's stability region."""
    rate = max(stiffness_rate(c, p) for c, p in state.patches)
    return np.inf if rate == 0.0 else safety * RK4_IMAGINARY_LIMIT / rate


def run(
    state: SimState,
    ctrl: StepControl,
    *,
    rhs_fn: RhsFn = rhs,
    on_record: Callable[[DiagnosticsRecord], None] | None = None,
    on_snapshot: Callable[[Snapshot], None] | None = None,
) -> tuple[Trajectory, TerminationVerdict]:
    """March until ``t_end`` or the first stop condition.

    dt = min(dt_current, cfl * (2 pi / N) / max|rhs|, stability cap),
    shortened to land on t_end; a failed step halves dt_current, a successful one lets it grow
    back towards dt_init.
    """
    traj = Trajectory()

    def keep_record(s: SimState, dt: float) -> None:
        rec = record(s, dt)
        traj.records.append(rec)
        if on_record is not None:
            on_record(rec)

    def keep_snapshot(step: int, s: SimState) -> None:
        snap = Snapshot(step, s)
        traj.snapshots.append(snap)
        if on_snapshot is not None:
            on_snapshot(snap)

    state = _reuniformize(state, ctrl.reuniformize_threshold)
    step = 0
    verdict = detect_stop(state, ctrl)
    keep_record(state, 0.0)
    keep_snapshot(step, state)
    h = min(2.0 * np.pi / c.N for c in state.curves)
    dt_current = ctrl.dt_init
    last_recorded = 0

    while verdict is None:
        if state.t >= ctrl.t_end:
            verdict = TerminationVerdict("reached_t_end", state.t)
            break
        try:
            k1 = _eval(rhs_fn, state)
        except StageFailure as exc:
            verdict = TerminationVerdict("nonfinite_state", state.t, str(exc))
            break
        vmax = max(float(np.max(np.linalg.norm(k, axis=1))) for k in k1)
        dt = dt_current
        if vmax > 0.0:
            dt = min(dt, ctrl.cfl * h / vmax)
        if ctrl.stiffness_safety is not None:
            dt = min(dt, stability_dt(state, ctrl.stiffness_safety))
        if dt < ctrl.dt_min:
            verdict = detect_stop(state, ctrl, dt)
            break
        remaining = ctrl.t_end - state.t
        final = dt >= remaining * (1.0 - 1e-9)
        if final:
            dt = remaining
        try:
            new = step_rk4(state, dt, rhs_fn, k1=k1)
        except StageFailure as exc:
            dt_current = dt / 2
            if dt_current < ctrl.dt_min:
                verdict = TerminationVerdict("dt_underflow", state.t, f"stage failure below dt_min: {exc}")
            continue
        if final:
            new = new.with_curves(new.curves, ctrl.t_end)
        state = _reuniformize(new, ctrl.reuniformize_threshold)
        step += 1
        dt_current = min(ctrl.dt_init, 2.0 * dt_current)
        verdict = detect_stop(state, ctrl, dt if not final else None)
        if verdict is None and state.t >= ctrl.t_end:
            verdict = TerminationVerdict("reached_t_end", state.t)
        if step % ctrl.record_every == 0 or verdict is not None:
            keep_record(state, dt)
            last_recorded = step
        if verdict is None and ctrl.snapshot_every and step % ctrl.snapshot_every == 0:
            keep_snapshot(step, state)

    if last_recorded != step:
        keep_record(state, 0.0)
    if traj.snapshots[-1].step != step:
        keep_snapshot(step, state)
    return traj, verdict

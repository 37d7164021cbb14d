"""Per-step observables and the a-priori growth bound.

The local existence theory controls q(t) = ||x||_{H^3} + ||F(x)||_inf by

    q(t) <= q(0) / (1 - t C q(0)^p)^(1/p),   p = 6 + alpha (alpha < 1), 9 (alpha = 1),

with an unspecified constant C.  Here C is only ever *fitted* to a run
(``calibrate_constant``); it is a shape to compare runs with, not a prediction.
"""
from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .curve import arc_chord, enclosed_area, norms
from .dynamics import SimState, min_interpatch_distance, rhs
from .tangential import speed_report
from .velocity import NearSingularError, SingularKernelError

SENTINEL_C = 1e-12

_PATCH_KEYS = ("area", "l2", "h3", "c2", "c2half", "supF", "A", "udef", "tdef")


def format_float(x: float | None) -> str:
    """17 significant digits; non-finite values and None become null."""
    if x is None or not math.isfinite(x):
        return "null"
    return format(float(x), ".16e")


def dumps17(obj) -> str:
    """Compact JSON with every float written at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps17(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps17(v) for v in obj) + "]"
    if isinstance(obj, (bool, str)) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return format_float(float(obj))


@dataclass(frozen=True)
class PatchDiagnostics:
    area: float
    l2: float
    h3: float
    c2: float
    c2half: float
    supF: float
    A: float
    udef: float
    tdef: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _PATCH_KEYS}


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    patches: tuple[PatchDiagnostics, ...]
    min_dist: float | None
    max_speed: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "dt": self.dt,
            "patch": [p.to_dict() for p in self.patches],
            "min_dist": self.min_dist,
            "max_speed": self.max_speed,
        }

    def to_json(self) -> str:
        return dumps17(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticsRecord:
        def num(v):
            return math.inf if v is None else float(v)

        patches = tuple(PatchDiagnostics(**{k: num(p[k]) for k in _PATCH_KEYS}) for p in d["patch"])
        min_dist = None if d.get("min_dist") is None else float(d["min_dist"])
        return cls(float(d["t"]), float(d["dt"]), patches, min_dist, float(d["max_speed"]))

    @property
    def growth_observable(self) -> float:
        """max over patches of ||x||_{H^3} + ||F(x)||_inf."""
        return max(p.h3 + p.supF for p in self.patches)


def record(state: SimState, dt_used: float) -> DiagnosticsRecord:
    """Evaluate every observable from scratch on ``state``."""
    patches = []
    for curve, _ in state.patches:
        nr = norms(curve, 3)
        sr = speed_report(curve)
        patches.append(
            PatchDiagnostics(
                area=enclosed_area(curve),
                l2=nr.l2,
                h3=nr.hk[3],
                c2=nr.c2,
                c2half=nr.c2half,
                supF=arc_chord(curve).sup_F,
                A=sr.A,
                udef=sr.uniformity_defect,
                tdef=sr.tangency_defect,
            )
        )
    try:
        speed = max(float(np.max(np.linalg.norm(v, axis=1))) for v in rhs(state))
    except (SingularKernelError, NearSingularError):
        speed = math.inf
    return DiagnosticsRecord(
        t=float(state.t),
        dt=float(dt_used),
        patches=tuple(patches),
        min_dist=min_interpatch_distance(state),
        max_speed=speed,
    )


def write_ndjson(records: Iterable[DiagnosticsRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_ndjson(path) -> list[DiagnosticsRecord]:
    with open(path, encoding="utf-8") as fh:
        return [DiagnosticsRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def bound_exponent(alpha: float) -> float:
    return 9.0 if alpha == 1.0 else 6.0 + alpha


@dataclass(frozen=True)
class BoundCurve:
    alpha: float
    initial_value: float
    constant_C: float = 1.0
    exponent: float | None = None

    def __post_init__(self) -> None:
        if self.initial_value <= 0 or self.constant_C <= 0:
            raise ValueError("initial_value and constant_C must be positive")
        if self.exponent is None:
            object.__setattr__(self, "exponent", bound_exponent(self.alpha))

    @property
    def expiry_time(self) -> float:
        return 1.0 / (self.constant_C * self.initial_value**self.exponent)

    def with_constant(self, C: float) -> BoundCurve:
        return BoundCurve(self.alpha, self.initial_value, C, self.exponent)


def bound_value(b: BoundCurve, t: float) -> float | None:
    """Majorant q(0) / (1 - t C q(0)^p)^(1/p); None once the window has closed."""
    if t < 0:
        raise ValueError("t must be non-negative")
    p = b.exponent
    # compare times directly: 1 - t C q^p can round to a tiny positive base at expiry
    if t >= b.expiry_time:
        return None
    base = 1.0 - t * b.constant_C * b.initial_value**p
    if base <= 0.0:
        return None
    return b.initial_value / base ** (1.0 / p)


def _as_series(records) -> tuple[np.ndarray, np.ndarray]:
    times, values = [], []
    for r in records:
        if isinstance(r, DiagnosticsRecord):
            times.append(r.t)
            values.append(r.growth_observable)
        else:
            t, v = r
            times.append(float(t))
            values.append(float(v))
    return np.asarray(times), np.asarray(values)


def calibrate_constant(
    records: Sequence, b: BoundCurve, *, rtol: float = 1e-9, sentinel: float = SENTINEL_C
) -> float:
    """Smallest C for which the majorant dominates the observed series.

    ``records`` are DiagnosticsRecords or (t, value) pairs.  Bisection in
    log C between ``sentinel`` and the largest C whose window still covers
    the last record time.  Returns ``sentinel`` if that already dominates.
    Raises ValueError when even that largest C fails: the majorant is flat
    until close to its expiry, so a series that grows steadily over the
    whole run can outpace every admissible member of the family.
    """
    t, q = _as_series(records)
    if t.size < 2:
        raise ValueError("need at least two records")

    def dominates(C: float) -> bool:
        bc = b.with_constant(C)
        for ti, qi in zip(t, q):
            val = bound_value(bc, ti)
            if val is None or val < qi:
                return False
        return True

    lo = sentinel
    if dominates(lo):
        return lo
    t_max = float(t.max())
    hi = 1.0 / (t_max * b.initial_value**b.exponent)
    hi *= 1.0 - 1e-15
    if not dominates(hi):
        raise ValueError(
            f"no constant keeps the exponent-{b.exponent:g} majorant above the series "
            f"while its window stays open until t = {t_max:.6g}"
        )
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if dominates(mid):
            hi = mid
        else:
            lo = mid
    return hi

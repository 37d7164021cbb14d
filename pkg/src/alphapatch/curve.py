"""Periodic planar curves sampled on a uniform parameter grid.

A curve x(gamma) is stored by its values at gamma_j = -pi + 2*pi*j/N and
treated as its trigonometric interpolant: derivatives, integrals and
off-grid evaluation all go through the FFT.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


class CurveError(ValueError):
    """Invalid curve data (shape, size, non-finite samples)."""


class ReparametrizationError(RuntimeError):
    """Arclength inversion did not converge."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ClosedCurve:
    """Uniformly sampled 2*pi-periodic planar curve.

    ``nodes`` has shape (N, 2); node ``j`` sits at ``gamma_j = -pi + 2*pi*j/N``.
    Counterclockwise orientation means positive enclosed area.
    """

    nodes: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.nodes, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise CurveError(f"nodes must have shape (N, 2), got {arr.shape}")
        n = arr.shape[0]
        if n < 8 or n % 2:
            raise CurveError(f"N must be even and >= 8, got {n}")
        bad = np.flatnonzero(~np.isfinite(arr).all(axis=1))
        if bad.size:
            raise CurveError(f"non-finite node at index {int(bad[0])}")
        arr.setflags(write=False)
        object.__setattr__(self, "nodes", arr)

    @property
    def N(self) -> int:
        return self.nodes.shape[0]

    @property
    def h(self) -> float:
        """Grid spacing in gamma."""
        return 2.0 * np.pi / self.N

    @property
    def gamma(self) -> FloatArray:
        return parameter_grid(self.N)

    def __repr__(self) -> str:
        return f"ClosedCurve(N={self.N})"


@dataclass(frozen=True)
class ArcChordReport:
    sup_F: float
    argmax_pair: tuple[int, int]
    self_intersecting: bool = False

    @property
    def min_chord_ratio(self) -> float:
        return 0.0 if self.self_intersecting else 1.0 / self.sup_F


@dataclass(frozen=True)
class NormReport:
    l2: float
    hk: dict[int, float]
    c2: float
    c2half: float


def parameter_grid(N: int) -> FloatArray:
    return -np.pi + 2.0 * np.pi * np.arange(N) / N


def sample_curve(parametric_map: Callable[[FloatArray], FloatArray], N: int) -> ClosedCurve:
    """Evaluate a vectorised map ``gamma -> (N, 2) points`` on the grid.

    The map may return either shape (N, 2) or (2, N).
    """
    if N < 8 or N % 2:
        raise CurveError(f"N must be even and >= 8, got {N}")
    pts = np.asarray(parametric_map(parameter_grid(N)), dtype=np.float64)
    if pts.shape == (2, N) and N != 2:
        pts = pts.T
    return ClosedCurve(pts)


def _wavenumbers(N: int) -> FloatArray:
    return np.arange(N // 2 + 1, dtype=np.float64)


def spectral_derivative(values: FloatArray, order: int = 1) -> FloatArray:
    """Fourier-collocation derivative along axis 0 of periodic nodal data."""
    values = np.asarray(values, dtype=np.float64)
    N = values.shape[0]
    k = _wavenumbers(N)
    mult = (1j * k) ** order
    if order % 2:
        # odd derivatives of the Nyquist cosine vanish on the grid
        mult[-1] = 0.0
    shape = (-1,) + (1,) * (values.ndim - 1)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * mult.reshape(shape), n=N, axis=0)


def periodic_antiderivative(values: FloatArray) -> FloatArray:
    """Antiderivative of the zero-mean part of periodic nodal data.

    The returned function is itself periodic with zero mean; the mean of
    ``values`` is discarded and must be integrated separately.
    """
    values = np.asarray(values, dtype=np.float64)
    N = values.shape[0]
    k = _wavenumbers(N)
    inv = np.zeros_like(k, dtype=np.complex128)
    inv[1:-1] = 1.0 / (1j * k[1:-1])
    shape = (-1,) + (1,) * (values.ndim - 1)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * inv.reshape(shape), n=N, axis=0)


def derivative(curve: ClosedCurve, order: int = 1) -> FloatArray:
    """Order-``order`` gamma-derivative of the curve at the nodes, shape (N, 2)."""
    if not 1 <= order <= 4:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    return spectral_derivative(curve.nodes, order)


def trig_interpolate(values: FloatArray, gamma: FloatArray) -> FloatArray:
    """Evaluate the trigonometric interpolant of nodal data at arbitrary gamma."""
    values = np.asarray(values, dtype=np.float64)
    N = values.shape[0]
    coef = np.fft.rfft(values, axis=0) / N
    coef[1:-1] *= 2.0
    theta = np.asarray(gamma, dtype=np.float64) + np.pi
    k = _wavenumbers(N)
    phase = np.exp(1j * np.multiply.outer(theta, k))
    # Nyquist term is real on the grid; keep only its cosine part off-grid
    phase[..., -1] = np.cos(theta * (N // 2))
    return np.real(np.tensordot(phase, coef, axes=(-1, 0)))


@lru_cache(maxsize=16)
def periodic_distance(N: int) -> FloatArray:
    """(N, N) matrix of shortest periodic parameter distances |eta| in [0, pi]."""
    j = np.arange(N)
    d = np.abs(j[:, None] - j[None, :])
    out = np.minimum(d, N - d) * (2.0 * np.pi / N)
    out.setflags(write=False)
    return out


def pairwise_chords(curve: ClosedCurve) -> FloatArray:
    """(N, N) matrix of |x_j - x_m|."""
    x = curve.nodes
    diff = x[:, None, :] - x[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def arc_chord(curve: ClosedCurve, chord: FloatArray | None = None) -> ArcChordReport:
    """Discrete sup of |eta| / |x(gamma) - x(gamma - eta)|.

    Off-diagonal node pairs use the periodic parameter distance; the diagonal
    contributes its limit 1/|x'(gamma)|.  ``chord`` may pass a precomputed
    ``pairwise_chords(curve)``.
    """
    N = curve.N
    r = pairwise_chords(curve) if chord is None else chord.copy()
    np.fill_diagonal(r, 1.0)
    if not r.all():
        j, m = np.argwhere(r == 0.0)[0]
        return ArcChordReport(np.inf, (int(j), int(m)), self_intersecting=True)
    ratio = periodic_distance(N) / r
    speed = np.linalg.norm(derivative(curve, 1), axis=1)
    with np.errstate(divide="ignore"):
        np.fill_diagonal(ratio, 1.0 / speed)
    flat = int(np.argmax(ratio))
    j, m = divmod(flat, N)
    return ArcChordReport(float(ratio[j, m]), (j, m))


def enclosed_area(curve: ClosedCurve) -> float:
    """Signed area, positive for counterclockwise curves."""
    x = curve.nodes
    dx = derivative(curve, 1)
    return 0.5 * curve.h * float(np.sum(x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]))


def l2_norm(values: FloatArray, h: float) -> float:
    return float(np.sqrt(h * np.sum(values**2)))


def norms(curve: ClosedCurve, kmax: int = 3) -> NormReport:
    """L2, H^k (k = 1..kmax), C^2 and C^{2,1/2} norms of the curve.

    ``||x||_{H^k}^2 = ||x||_{L2}^2 + ||d^k x||_{L2}^2``, integrals by the
    rectangle rule.  The Holder seminorm is the max over node pairs.
    """
    if not 1 <= kmax <= 4:
        raise ValueError(f"kmax must be in 1..4, got {kmax}")
    h = curve.h
    x = curve.nodes
    l2 = l2_norm(x, h)
    derivs = {k: derivative(curve, k) for k in range(1, max(kmax, 2) + 1)}
    hk = {k: float(np.sqrt(l2**2 + l2_norm(derivs[k], h) ** 2)) for k in range(1, kmax + 1)}

    sup = [np.max(np.linalg.norm(x, axis=1))]
    sup += [np.max(np.linalg.norm(derivs[k], axis=1)) for k in (1, 2)]
    c2 = float(max(sup))

    d2 = derivs[2]
    diff = d2[:, None, :] - d2[None, :, :]
    eta = periodic_distance(curve.N).copy()
    np.fill_diagonal(eta, 1.0)
    holder = np.hypot(diff[..., 0], diff[..., 1]) / np.sqrt(eta)
    return NormReport(l2=l2, hk=hk, c2=c2, c2half=c2 + float(holder.max()))


def curve_length(curve: ClosedCurve) -> float:
    return curve.h * float(np.sum(np.linalg.norm(derivative(curve, 1), axis=1)))


def reparametrize_uniform(
    curve: ClosedCurve, *, tol: float = 1e-14, max_iter: int = 200
) -> ClosedCurve:
    """Resample the same image at equal arclength, keeping node 0 fixed.

    The total length is preserved, so the new speed is L / (2*pi).
    Arclength is the integral of the interpolated speed; the inversion
    s(gamma*) = L*j/N is solved by Newton's method per node.
    """
    N = curve.N
    speed = np.linalg.norm(derivative(curve, 1), axis=1)
    if np.any(speed <= 0.0):
        raise ReparametrizationError("zero speed node; curve is degenerate", float("nan"))
    mean_speed = float(speed.mean())
    length = 2.0 * np.pi * mean_speed
    wobble = periodic_antiderivative(speed)

    def arclength(theta: FloatArray) -> FloatArray:
        # theta is measured from gamma = -pi
        return mean_speed * theta + trig_interpolate(wobble, theta - np.pi) - wobble[0]

    target = length * np.arange(N) / N
    # safeguarded Newton: s is increasing, so keep a bracket and bisect
    # whenever a Newton step leaves it
    lo = np.zeros(N)
    hi = np.full(N, 2.0 * np.pi)
    s_nodes = mean_speed * curve.h * np.arange(N) + wobble - wobble[0]
    theta = np.interp(target, np.append(s_nodes, length), np.append(curve.h * np.arange(N), 2 * np.pi))
    residual = np.inf
    prev = np.full(N, np.inf)
    for _ in range(max_iter):
        res = arclength(theta) - target
        residual = float(np.max(np.abs(res)))
        if residual <= tol * length:
            break
        lo = np.where(res < 0, theta, lo)
        hi = np.where(res > 0, theta, hi)
        slope = trig_interpolate(speed, theta - np.pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = theta - res / slope
        # bisect where Newton leaves the bracket or stalls
        ok = np.isfinite(step) & (step > lo) & (step < hi) & (np.abs(res) < 0.5 * prev)
        prev = np.abs(res)
        theta = np.where(ok, step, 0.5 * (lo + hi))
    else:
        raise ReparametrizationError("arclength inversion failed to converge", residual)
    return ClosedCurve(trig_interpolate(curve.nodes, theta - np.pi))


def write_curve_csv(curve: ClosedCurve, path) -> None:
    """Write ``gamma,x1,x2`` rows with 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gamma,x1,x2\n")
        for g, (a, b) in zip(curve.gamma, curve.nodes):
            fh.write(f"{g:.17g},{a:.17g},{b:.17g}\n")


def read_curve_csv(path) -> ClosedCurve:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "gamma,x1,x2":
            raise CurveError(f"{path}: expected header 'gamma,x1,x2', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return ClosedCurve(data[:, 1:3])

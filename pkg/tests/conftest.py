import numpy as np
import pytest

from alphapatch.curve import ClosedCurve, sample_curve


def circle(N, radius=1.0, center=(0.0, 0.0)):
    return sample_curve(
        lambda g: np.stack([center[0] + radius * np.cos(g), center[1] + radius * np.sin(g)], axis=1), N
    )


def ellipse(N, a, b):
    return sample_curve(lambda g: np.stack([a * np.cos(g), b * np.sin(g)], axis=1), N)


def perturbed_circle(N, amp=0.1, k=3):
    def f(g):
        r = 1.0 + amp * np.cos(k * g)
        return np.stack([r * np.cos(g), r * np.sin(g)], axis=1)

    return sample_curve(f, N)


def reverse(curve):
    """Same image, clockwise: x(-gamma)."""
    N = curve.N
    return ClosedCurve(curve.nodes[(-np.arange(N)) % N])


@pytest.fixture
def unit_circle_64():
    return circle(64)

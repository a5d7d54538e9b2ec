"""Small planar geometry helpers shared by the simulator, tracks and guidance."""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(angle, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Vectorised :func:`wrap_angle`."""
    wrapped = np.remainder(np.asarray(angles, dtype=float) + math.pi, TWO_PI) - math.pi
    wrapped[wrapped <= -math.pi] += TWO_PI
    return wrapped


def angle_diff(a: float, b: float) -> float:
    """Shortest signed difference ``a - b`` in (-pi, pi]."""
    return wrap_angle(a - b)


def to_body_frame(px, py, x: float, y: float, psi: float):
    """Express world point(s) ``(px, py)`` in the frame of a body at ``(x, y, psi)``."""
    dx = np.asarray(px, dtype=float) - x
    dy = np.asarray(py, dtype=float) - y
    c, s = math.cos(psi), math.sin(psi)
    return c * dx + s * dy, -s * dx + c * dy

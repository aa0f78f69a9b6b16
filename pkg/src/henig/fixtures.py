"""Built-in problems: the two-cone separation examples in the plane and the
sine-shaped set ``{(x, y) : |x| <= pi/2, y >= sin(-|x|)}`` with its grid
discretizations.
"""
from __future__ import annotations

import math

import numpy as np

HALF_PI = math.pi / 2


def curve_xs(h: float) -> np.ndarray:
    """Grid abscissae ``i*h`` in ``[-pi/2, pi/2]`` plus both endpoints."""
    if not h > 0:
        raise ValueError("h must be positive")
    k = math.floor(HALF_PI / h + 1e-12)
    xs = h * np.arange(-k, k + 1)
    ends = [-HALF_PI, HALF_PI]
    if abs(k * h - HALF_PI) > 1e-12:
        xs = np.concatenate([[ends[0]], xs, [ends[1]]])
    return xs


def curve_grid(h: float) -> np.ndarray:
    xs = curve_xs(h)
    return np.c_[xs, np.sin(-np.abs(xs))]


def region_grid(h: float, ymax: float) -> np.ndarray:
    """Grid points ``(x, -1 + j*h)`` lying strictly above the curve and at most ``ymax``."""
    xs = curve_xs(h)
    m = math.floor((ymax + 1) / h + 1e-9)
    ys = -1.0 + h * np.arange(m + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    keep = Y > np.sin(-np.abs(X)) + 1e-12
    return np.c_[X[keep], Y[keep]]


def sine_cloud(h: float = 0.01, ymax: float = 2.0, region: bool = True) -> np.ndarray:
    parts = [curve_grid(h)]
    if region:
        parts.append(region_grid(h, ymax))
    return np.vstack(parts)


def is_curve_point(P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    P = np.atleast_2d(P)
    return np.abs(P[:, 1] - np.sin(-np.abs(P[:, 0]))) <= tol


UPPER_QUARTER = [[1.0, 1.0], [-1.0, 1.0]]  # the cone {y >= |x|}


def _deg(t: float) -> list[float]:
    r = math.radians(t)
    return [math.cos(r), math.sin(r)]


def fixture(name: str, norm: str = "l2", h: float = 0.01) -> dict:
    """Problem document for a named fixture."""
    if name == "example-3-ssp":
        return {
            "command": "ssp",
            "space": {"dim": 2, "norm": norm},
            "cones": {
                "C": {"type": "polyhedral", "generators": [_deg(60), _deg(120)]},
                "K": {"type": "polyhedral", "generators": [_deg(45), _deg(135)]},
            },
        }
    if name == "example-3-bp":
        return {
            "command": "ssp",
            "space": {"dim": 2, "norm": norm},
            "cones": {
                "C": {"type": "bishop_phelps", "f": [0.0, 1.0], "alpha": 0.6},
                "K": {"type": "bishop_phelps", "f": [0.0, 1.0], "alpha": 0.3},
            },
        }
    if name in ("example-4-curve", "example-4-clipped", "example-4-density"):
        ymax = 2.0 if name == "example-4-curve" else 1.0
        params = {"eps": 0.05, "delta": math.sqrt(2) / 2, "x0": [0.0, 0.0]}
        if name != "example-4-curve":
            params["eps_list"] = [0.2, 0.1, 0.05]
        return {
            "command": "classify" if name == "example-4-curve" else "density",
            "space": {"dim": 2, "norm": norm},
            "cone": {"type": "polyhedral", "generators": UPPER_QUARTER},
            "set": {"generator": "sine", "h": h, "ymax": ymax},
            "parameters": params,
        }
    raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")


FIXTURE_NAMES = ("example-3-ssp", "example-3-bp", "example-4-curve", "example-4-clipped", "example-4-density")

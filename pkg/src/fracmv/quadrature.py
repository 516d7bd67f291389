"""Quadrature rules, including rules exact for the even weight |y|^a.

All rules are deterministic: the same arguments always produce bit-identical
nodes and weights.  Evaluation over node sets is pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import EvaluationError

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "gauss_even_weight",
    "integrate_ball_weighted",
    "adaptive_simpson",
]


@dataclass(frozen=True)
class QuadratureRule:
    """A fixed quadrature rule on an interval.

    ``weight_kind`` is ``"plain"`` (weight 1) or ``"even_power"`` (weight
    |y|^exponent, symmetric interval).  Weights are positive and sum to the
    integral of the weight function over the interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]
    weight_kind: str = "plain"
    exponent: float = 0.0

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f) -> float:
        values = np.asarray(f(self.nodes), dtype=float)
        if not np.all(np.isfinite(values)):
            bad = self.nodes[~np.isfinite(values)][0]
            raise EvaluationError(bad)
        return float(self.weights @ values)


@lru_cache(maxsize=256)
def _leggauss(count: int):
    return np.polynomial.legendre.leggauss(count)


@lru_cache(maxsize=256)
def _jacgauss(count: int, a: float):
    # weight (1+t)^a on [-1, 1]
    return roots_jacobi(count, 0.0, a)


def gauss_legendre(count: int, interval: tuple[float, float]) -> QuadratureRule:
    """Gauss-Legendre rule on ``interval``, exact for degree <= 2*count - 1."""
    lo, hi = float(interval[0]), float(interval[1])
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not hi > lo:
        raise ValueError(f"interval must satisfy lo < hi, got ({lo}, {hi})")
    t, w = _leggauss(count)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadratureRule(nodes=mid + half * t, weights=half * w, interval=(lo, hi))


def gauss_even_weight(count: int, a: float, Y: float) -> QuadratureRule:
    """Rule for integrals against |y|^a on [-Y, Y].

    Built from a Gauss-Jacobi rule on [0, Y] with weight y^a and symmetrized,
    so that polynomials of degree <= 2*count - 1 are integrated exactly.
    The weight is absorbed into the quadrature weights.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not -1.0 < a < 1.0:
        raise ValueError(f"a must lie in (-1, 1), got {a}")
    if not Y > 0:
        raise ValueError(f"Y must be positive, got {Y}")
    t, w = _jacgauss(count, a)
    y = Y * (1.0 + t) / 2.0
    wy = (Y / 2.0) ** (1.0 + a) * w
    nodes = np.concatenate([-y[::-1], y])
    weights = np.concatenate([wy[::-1], wy])
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        interval=(-Y, Y),
        weight_kind="even_power",
        exponent=a,
    )


def _ball_y_rule(a: float, radius: float, resolution: int):
    """Symmetric y-rule for ball slices: weight |y|^a with an edge-aware tail.

    Jacobi nodes handle the y^a weight on [0, R/2]; on [R/2, R] the slice
    width behaves like sqrt(R^2 - y^2), so the substitution y = R sin(phi)
    removes the square-root edge there.
    """
    half = max(2, resolution // 2)
    t, w = _jacgauss(half, a)
    y_in = 0.5 * radius * (1.0 + t) / 2.0
    w_in = (radius / 4.0) ** (1.0 + a) * w
    phi = gauss_legendre(half, (np.arcsin(0.5), 0.5 * np.pi))
    y_out = radius * np.sin(phi.nodes)
    w_out = phi.weights * radius * np.cos(phi.nodes) * y_out ** a
    y = np.concatenate([y_in, y_out])
    wy = np.concatenate([w_in, w_out])
    return np.concatenate([-y[::-1], y]), np.concatenate([wy[::-1], wy])


def integrate_ball_weighted(g, center, radius: float, a: float, resolution: int) -> float:
    """Integrate ``g`` against |y|^a over a ball in R^{n+1}.

    ``g`` is evaluated in batches: it receives an array of shape (m, n+1)
    and must return an array of shape (m,).  The last coordinate is y; the
    center must lie on the hyperplane y = 0 so the Jacobi rule in y applies.
    The ball indicator is absorbed by restricting the x-range to the slice
    width at each y node.
    """
    center = np.asarray(center, dtype=float)
    n = center.size - 1
    if n not in (1, 2):
        raise ValueError(f"supported spatial dimensions are 1 and 2, got n={n}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if center[-1] != 0.0:
        raise ValueError("ball center must lie on the hyperplane y=0")
    ynodes, yweights = _ball_y_rule(a, radius, resolution)

    total = 0.0
    for y, wy in zip(ynodes, yweights):
        s = radius * radius - y * y
        if s <= 0.0:
            continue
        s = np.sqrt(s)
        x1 = gauss_legendre(resolution, (center[0] - s, center[0] + s))
        if n == 1:
            pts = np.column_stack([x1.nodes, np.full(x1.nodes.size, y)])
            vals = np.asarray(g(pts), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise EvaluationError(pts[~np.isfinite(vals)][0])
            total += wy * float(x1.weights @ vals)
        else:
            slice_val = 0.0
            for u, wu in zip(x1.nodes, x1.weights):
                s2 = s * s - (u - center[0]) ** 2
                if s2 <= 0.0:
                    continue
                s2 = np.sqrt(s2)
                x2 = gauss_legendre(resolution, (center[1] - s2, center[1] + s2))
                pts = np.column_stack([
                    np.full(x2.nodes.size, u),
                    x2.nodes,
                    np.full(x2.nodes.size, y),
                ])
                vals = np.asarray(g(pts), dtype=float)
                if not np.all(np.isfinite(vals)):
                    raise EvaluationError(pts[~np.isfinite(vals)][0])
                slice_val += wu * float(x2.weights @ vals)
            total += wy * slice_val
    return total


def adaptive_simpson(f, lo: float, hi: float, tol: float = 1e-13, max_depth: int = 50) -> float:
    """Adaptive Simpson integration to absolute tolerance ``tol``.

    The designated independent oracle for derived quadrature values; it never
    shares node layouts with the Gauss rules above.
    """
    def simpson(a, b, fa, fm, fb):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, eps, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(a, m, fa, flm, fm)
        right = simpson(m, b, fm, frm, fb)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, m, fa, flm, fm, left, eps / 2.0, depth + 1)
                + recurse(m, b, fm, frm, fb, right, eps / 2.0, depth + 1))

    lo, hi = float(lo), float(hi)
    fa, fb = f(lo), f(hi)
    fm = f(0.5 * (lo + hi))
    whole = simpson(lo, hi, fa, fm, fb)
    return recurse(lo, hi, fa, fm, fb, whole, tol, 0)

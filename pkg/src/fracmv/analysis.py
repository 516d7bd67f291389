"""Maximal operators, gradient representation, and smoothness-norm ratios.

The two headline checks live here: the pointwise bound of the gradient by
the fractional sharp maximal function, and the weighted-gradient-norm
versus Besov-seminorm ratio over a family of sample fields.  Suprema over
all balls are approximated by a finite, enrichable family; the Besov
seminorm uses the difference-quotient realization with dyadic refinement
in the increment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fraclap import ScalarField
from .kernel import (RadialKernelTable, _angular_grid, _conv_breaks,
                     _kink_crossings, _rule_on_breaks, _surface, _unit_gauss)

__all__ = [
    "Domain",
    "RegularityParams",
    "BallFamily",
    "ReportRow",
    "rows_to_csv",
    "sharp_maximal",
    "hl_maximal",
    "gradient_of_solution",
    "gradient_sharp_ratio",
    "BesovResult",
    "besov_seminorm",
    "weighted_gradient_besov_ratio",
]

CSV_HEADER = "field_id,x,r,lambda,p,value,kind"


@dataclass(frozen=True)
class Domain:
    """Bounded domain with a closed-form boundary distance.

    ``geometry`` holds kind-specific parameters as nested tuples:
    interval (lo, hi); ball (center..., radius); box (lo tuple, hi tuple);
    polygon (vertex tuples, counterclockwise).
    """

    kind: str
    n: int
    geometry: tuple

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        if not hi > lo:
            raise ValueError("interval needs hi > lo")
        return cls("interval", 1, (float(lo), float(hi)))

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        center = tuple(float(c) for c in np.atleast_1d(center))
        if not radius > 0:
            raise ValueError("radius must be positive")
        return cls("ball", len(center), (center, float(radius)))

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo = tuple(float(c) for c in np.atleast_1d(lo))
        hi = tuple(float(c) for c in np.atleast_1d(hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box needs componentwise lo < hi")
        return cls("box", len(lo), (lo, hi))

    @classmethod
    def polygon(cls, vertices) -> "Domain":
        verts = tuple(tuple(float(c) for c in v) for v in vertices)
        if len(verts) < 3 or any(len(v) != 2 for v in verts):
            raise ValueError("polygon needs at least 3 planar vertices")
        return cls("polygon", 2, verts)

    def distance_to_boundary(self, x) -> float:
        """delta(x): distance to the boundary for interior x, 0 outside."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "interval":
            lo, hi = self.geometry
            return max(0.0, min(x[0] - lo, hi - x[0]))
        if self.kind == "ball":
            center, radius = self.geometry
            return max(0.0, radius - float(np.linalg.norm(x - center)))
        if self.kind == "box":
            lo, hi = self.geometry
            d = min(min(x - lo), min(np.asarray(hi) - x))
            return max(0.0, float(d))
        return self._polygon_distance(x)

    def _polygon_distance(self, x) -> float:
        verts = np.asarray(self.geometry)
        m = len(verts)
        # ray casting for interiority
        inside = False
        for i in range(m):
            p, q = verts[i], verts[(i + 1) % m]
            if (p[1] > x[1]) != (q[1] > x[1]):
                xc = p[0] + (x[1] - p[1]) * (q[0] - p[0]) / (q[1] - p[1])
                if x[0] < xc:
                    inside = not inside
        if not inside:
            return 0.0
        dmin = math.inf
        for i in range(m):
            p, q = verts[i], verts[(i + 1) % m]
            e = q - p
            t = float(np.clip(np.dot(x - p, e) / np.dot(e, e), 0.0, 1.0))
            dmin = min(dmin, float(np.linalg.norm(x - (p + t * e))))
        return dmin

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            lo, hi = self.geometry
            return hi - lo
        if self.kind == "ball":
            return 2.0 * self.geometry[1]
        if self.kind == "box":
            lo, hi = self.geometry
            return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
        verts = np.asarray(self.geometry)
        diff = verts[:, None, :] - verts[None, :, :]
        return float(np.sqrt((diff ** 2).sum(axis=-1)).max())

    @property
    def extension_height(self) -> float:
        """Half-height of the extension cylinder; equals the diameter."""
        return self.diameter


@dataclass(frozen=True)
class RegularityParams:
    """Smoothness/integrability parameters with the derived scale tau."""

    lam: float
    p: float
    alpha: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")

    @property
    def tau(self) -> float:
        return 1.0 / (1.0 / self.p + self.alpha / self.n)


@dataclass(frozen=True)
class BallFamily:
    """Finite family of balls used to approximate suprema.

    Radii are geometric in [r_min, r_max] with the given ratio; for each
    radius the centers sit at the probe point shifted by the offset
    fractions of the radius along each signed axis direction.  Enriching
    the family (more radii, offsets, or resolution) never decreases a
    supremum taken over it.
    """

    r_min: float = 1e-3
    r_max: float = 8.0
    ratio: float = math.sqrt(2.0)
    offsets: tuple = (0.0, 0.5, 0.9)
    resolution: int = 64

    def radii(self) -> np.ndarray:
        # geometric with both endpoints included; the ratio is a target,
        # rounded so the sequence lands exactly on r_max
        count = max(1, round(math.log(self.r_max / self.r_min)
                             / math.log(self.ratio)))
        return np.geomspace(self.r_min, self.r_max, count + 1)

    def centers(self, x, radius: float) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = x.size
        out = [x]
        for frac in self.offsets:
            if frac == 0.0:
                continue
            for j in range(n):
                for sign in (-1.0, 1.0):
                    c = x.copy()
                    c[j] += sign * frac * radius
                    out.append(c)
        return np.asarray(out)


def _ball_points(center, radius: float, resolution: int) -> np.ndarray:
    """Midpoint sample points of the ball, shape (m, n)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.size
    if n == 1:
        t = center[0] - radius + (np.arange(resolution) + 0.5) \
            * (2.0 * radius / resolution)
        return t[:, None]
    m = max(4, int(round(math.sqrt(resolution) * 2)))
    u = -radius + (np.arange(m) + 0.5) * (2.0 * radius / m)
    gx, gy = np.meshgrid(u, u)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts[(pts ** 2).sum(axis=1) <= radius * radius]
    return pts + center


def _ball_measure(n: int, radius: float) -> float:
    return 2.0 * radius if n == 1 else math.pi * radius * radius


def sharp_maximal(f: ScalarField, x, lam: float, family: BallFamily) -> float:
    """Fractional sharp maximal function at x over the finite ball family.

    Each ball contributes |B|^(-lambda/n) times the average of |f - f(x)|
    over its midpoint sample; the result is the maximum contribution.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    fx = float(f(x[None, :])[0])
    best = 0.0
    for radius in family.radii():
        for c in family.centers(x, radius):
            pts = _ball_points(c, radius, family.resolution)
            avg = float(np.mean(np.abs(f(pts) - fx)))
            best = max(best, _ball_measure(n, radius) ** (-lam / n) * avg)
    return best


def hl_maximal(f: ScalarField, x, family: BallFamily) -> float:
    """Hardy-Littlewood maximal function of |f| over the finite family."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    best = 0.0
    for radius in family.radii():
        for c in family.centers(x, radius):
            pts = _ball_points(c, radius, family.resolution)
            best = max(best, float(np.mean(np.abs(f(pts)))))
    return best


def gradient_of_solution(table: RadialKernelTable, f: ScalarField, x,
                         r: float, tol: float = 1e-5,
                         angular: int = 64) -> np.ndarray:
    """Gradient of an s-harmonic f from the kernel-derivative representation.

    Components are (1/r) * integral of (f(z) - f(x)) Psi^i_r(x - z) dz,
    written in the scaled variable w = (x - z)/r.  The mean-zero form keeps
    the integrand small away from x, and the tail beyond the table range is
    continued with the gradient decay exponent n + 2 - a.
    """
    n, a = table.params.n, table.params.a
    x = np.asarray(x, dtype=float).reshape(-1)
    fx = float(f(x[None, :])[0])
    surf = _surface(n)
    rmax = table.rmax
    tail_exp = n + 2.0 - a
    coef = abs(table.psi_radial_of(rmax)) * rmax ** tail_exp

    p1 = n - tail_exp  # = a - 2 < 0 for every admissible a
    deg = f.degree if f.growth == "polynomial" else 0
    W = 4.0 * rmax
    while True:
        bound = surf * coef * (f.envelope(float(np.linalg.norm(x)))
                               + abs(fx)) * W ** p1 / -p1
        if deg > 0:
            bound += surf * coef * f.scale * r ** deg \
                * W ** (p1 + deg) / -(p1 + deg)
        if bound <= tol / 2.0 or W > 1e16:
            break
        W *= 4.0

    breaks = _conv_breaks(r, W)
    dirs, ang_w = _angular_grid(n, angular)
    grad = np.zeros(n)
    for d, wa in zip(dirs, ang_w):
        nodes, weights = _rule_on_breaks(
            breaks, _kink_crossings(x, r, d, f.kink_radii))
        kern = table.psi_radial_of(nodes) * nodes ** (n - 1) * weights
        pts = x[None, :] - r * nodes[:, None] * d[None, :]
        vals = f(pts) - fx
        grad += wa * float(kern @ vals) * d
    return grad / r


@dataclass(frozen=True)
class ReportRow:
    field_id: str
    x: tuple
    r: float
    lam: float
    p: float
    value: float
    kind: str

    def csv(self) -> str:
        xs = ";".join(f"{c:.6g}" for c in self.x)
        return (f"{self.field_id},{xs},{self.r:.6g},{self.lam:.6g},"
                f"{self.p:.6g},{self.value:.10g},{self.kind}")


def rows_to_csv(rows) -> str:
    return "\n".join([CSV_HEADER] + [row.csv() for row in rows]) + "\n"


def gradient_sharp_ratio(table: RadialKernelTable, f: ScalarField,
                         domain: Domain, lam: float, grid, radius_factors,
                         field_id: str = "field",
                         family: BallFamily | None = None) -> list[ReportRow]:
    """Ratios |grad f(x)| / (r^(lambda-1) sharp_maximal) on an interior grid.

    One row per (x, factor) pair with kind "gradient_sharp_ratio", plus a
    max and a median summary row per factor (x recorded as the empty tuple).
    The bound being probed is uniform in r, so the rows at small factors
    should not exceed a fixed multiple of those at large factors.
    """
    family = family or BallFamily(resolution=48)
    rows = []
    per_factor: dict[float, list[float]] = {fac: [] for fac in radius_factors}
    for x in grid:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        delta = domain.distance_to_boundary(x)
        if delta <= 0.0:
            raise ValueError(f"grid point {x} is not interior")
        sharp = sharp_maximal(f, x, lam, family)
        for fac in radius_factors:
            r = fac * delta
            gnorm = float(np.linalg.norm(
                gradient_of_solution(table, f, x, r)))
            if sharp == 0.0:
                if gnorm > 1e-10:
                    raise ArithmeticError(
                        "vanishing sharp maximal with nonzero gradient")
                ratio = 0.0
            else:
                ratio = gnorm / (r ** (lam - 1.0) * sharp)
            per_factor[fac].append(ratio)
            rows.append(ReportRow(field_id, tuple(x), r, lam, math.nan,
                                  ratio, "gradient_sharp_ratio"))
    for fac, vals in per_factor.items():
        rows.append(ReportRow(field_id, (), fac, lam, math.nan,
                              max(vals), "ratio_max_over_grid"))
        rows.append(ReportRow(field_id, (), fac, lam, math.nan,
                              float(np.median(vals)), "ratio_median_over_grid"))
    return rows


@dataclass(frozen=True)
class BesovResult:
    value: float
    shell_sums: tuple
    divergent: bool


def besov_seminorm(f: ScalarField, lam: float, p: float, window: float,
                   half_width: float = 2.0, grid: int = 64,
                   shells: int = 12) -> BesovResult:
    """Difference-quotient smoothness seminorm, truncated in x and h.

    Integrates |f(x+h)-f(x)|^p / |h|^(n+lambda p) for |h| <= window and
    x in [-half_width, half_width]^n, with dyadic shells in |h| refined
    toward 0.  If the last three shell sums fail to decay (ratio >= 0.99)
    the inner integral is flagged as divergent; the truncated value is
    still reported.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    n = f.n
    tg, wg = _unit_gauss(6)
    dirs, ang_w = _angular_grid(n, 16)

    # midpoint grid in x
    u = -half_width + (np.arange(grid) + 0.5) * (2.0 * half_width / grid)
    cell = (2.0 * half_width / grid) ** n
    if n == 1:
        xs = u[:, None]
    else:
        gx, gy = np.meshgrid(u, u)
        xs = np.column_stack([gx.ravel(), gy.ravel()])
    fvals = f(xs)

    shell_sums = []
    hi = window
    for _ in range(shells):
        lo = hi / 2.0
        hr = lo + (hi - lo) * tg
        hw = (hi - lo) * wg
        total = 0.0
        for d, wa in zip(dirs, ang_w):
            for radius, wr in zip(hr, hw):
                diff = f(xs + radius * d[None, :]) - fvals
                inner = float(np.sum(np.abs(diff) ** p)) * cell
                total += wa * wr * radius ** (n - 1) \
                    * radius ** (-(n + lam * p)) * inner
        shell_sums.append(total)
        hi = lo

    ratios = [shell_sums[i + 1] / shell_sums[i]
              for i in range(len(shell_sums) - 3, len(shell_sums) - 1)
              if shell_sums[i] > 0.0]
    divergent = len(ratios) == 2 and all(q >= 0.99 for q in ratios)
    return BesovResult(float(sum(shell_sums)) ** (1.0 / p),
                       tuple(shell_sums), divergent)


def _lp_norm(f: ScalarField, p: float, half_width: float, grid: int) -> float:
    u = -half_width + (np.arange(grid) + 0.5) * (2.0 * half_width / grid)
    cell = (2.0 * half_width / grid) ** f.n
    if f.n == 1:
        xs = u[:, None]
    else:
        gx, gy = np.meshgrid(u, u)
        xs = np.column_stack([gx.ravel(), gy.ravel()])
    return (float(np.sum(np.abs(f(xs)) ** p)) * cell) ** (1.0 / p)


def weighted_gradient_besov_ratio(table: RadialKernelTable, f: ScalarField,
                                  domain: Domain, lam: float, p: float,
                                  grid_count: int = 9, window: float = 1.0,
                                  field_id: str = "field") -> ReportRow:
    """Ratio of the boundary-weighted gradient norm to the smoothness norm.

    Numerator: (sum over an interior midpoint grid of
    |delta(x)^(1-lambda) grad f(x)|^p times the cell measure)^(1/p), with
    the gradient taken from the kernel representation at r = delta(x)/2.
    Denominator: the difference seminorm plus the local p-norm.  A zero
    field reports ratio 0.
    """
    if domain.kind == "interval":
        lo, hi = domain.geometry
        u = lo + (np.arange(grid_count) + 0.5) * ((hi - lo) / grid_count)
        pts = u[:, None]
        cell = (hi - lo) / grid_count
    elif domain.kind == "ball":
        center, radius = domain.geometry
        m = grid_count
        u = -radius + (np.arange(m) + 0.5) * (2.0 * radius / m)
        gx, gy = np.meshgrid(u, u)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        pts = pts[(pts ** 2).sum(axis=1) < radius * radius] + np.asarray(center)
        cell = (2.0 * radius / m) ** 2
    else:
        raise ValueError(f"unsupported domain kind {domain.kind!r}")

    acc = 0.0
    for x in pts:
        delta = domain.distance_to_boundary(x)
        if delta <= 0.0:
            continue
        g = gradient_of_solution(table, f, x, 0.5 * delta)
        acc += (delta ** (1.0 - lam) * float(np.linalg.norm(g))) ** p * cell
    numerator = acc ** (1.0 / p)

    besov = besov_seminorm(f, lam, p, window, half_width=domain.diameter,
                           grid=48, shells=10)
    denom = besov.value + _lp_norm(f, p, domain.diameter, 48)
    ratio = 0.0 if denom == 0.0 else numerator / denom
    return ReportRow(field_id, (), math.nan, lam, p, ratio,
                     "weighted_gradient_besov_ratio")

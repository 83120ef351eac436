"""The model manifold CP^1 with -K = O(2).

Two charts cover the sphere: North with coordinate ``w`` (w = 0 is x3 = 1) and
South with ``w' = 1/w``.  Every quantity is evaluated in the chart where the
node satisfies ``|w| <= 1``.  Pinned conventions::

    omega_phi = (i/2pi) dd^c phi           integral = 2
    phi_FS    = 2 log(1 + |w|^2)           in either chart
    Delta f   = f_{w wbar} / phi_{w wbar}
    |df|^2    = |f_w|^2 / phi_{w wbar}

Node weights are masses of the round probability measure mu_FS, so every
density returned here is relative to mu_FS.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMetricError
from .polynomial import Polynomial
from .series import Series

DEGENERACY_THRESHOLD = 1e-12
DEFAULT_GRID = (64, 128)


@dataclass(frozen=True)
class ChartPoint:
    chart: str  # "N" or "S"
    w: complex

    def __post_init__(self):
        if self.chart not in ("N", "S"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if abs(self.w) > 1 + 1e-9:
            raise ValueError(f"|w| = {abs(self.w)} outside the closed unit disk")

    @classmethod
    def from_ambient(cls, xyz):
        x1, x2, x3 = (float(t) for t in xyz)
        if x3 >= 0:
            return cls("N", complex(x1, x2) / (1 + x3))
        return cls("S", complex(x1, -x2) / (1 - x3))

    def ambient(self):
        w = self.w
        d = 1 + abs(w) ** 2
        sgn = 1.0 if self.chart == "N" else -1.0
        return np.array([2 * w.real / d, sgn * 2 * w.imag / d, sgn * (1 - abs(w) ** 2) / d])


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Points of the sphere, each carrying a chart and a local coordinate."""

    w: np.ndarray
    north: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_points(cls, points):
        w = np.array([p.w for p in points], dtype=complex)
        north = np.array([p.chart == "N" for p in points])
        return cls(w=w, north=north)

    @property
    def size(self):
        return self.w.shape[0]

    @property
    def sign(self):
        return np.where(self.north, 1.0, -1.0)

    @property
    def conformal(self):
        """(1 + |w|^2)^2, the ratio MA(phi_FS)-density / (2 * mu_FS density) in-chart."""
        return (1.0 + np.abs(self.w) ** 2) ** 2

    @property
    def ambient(self):
        w = self.w
        d = 1.0 + np.abs(w) ** 2
        s = self.sign
        return np.stack([2 * w.real / d, s * 2 * w.imag / d, s * (1 - np.abs(w) ** 2) / d], axis=-1)

    def point(self, i):
        return ChartPoint("N" if self.north[i] else "S", complex(self.w[i]))

    def _series(self, key, order, build):
        cached = self._cache.get(key)
        if cached is None or cached[0] < order:
            cached = (order, build(order))
            self._cache[key] = cached
        if cached[0] == order:
            return cached[1]
        trunc = cached[1]
        if isinstance(trunc, tuple):
            return tuple(s.truncate(order) for s in trunc)
        return trunc.truncate(order)

    def coordinate_series(self, order):
        """Series of (x1, x2, x3) under the chart substitution."""

        def build(m):
            W = Series.variable(self.w, m)
            Wb = Series.variable(self.w, m, conjugate=True)
            inv = (W * Wb + 1.0).reciprocal()
            s = self.sign
            x1 = (W + Wb) * inv
            x2 = (W - Wb) * inv * (-1j * s)
            x3 = (inv * 2.0 - 1.0) * s
            return (x1, x2, x3)

        return self._series("coords", order, build)

    def fs_series(self, order):
        """Series of the local round potential 2 log(1 + w wbar)."""

        def build(m):
            W = Series.variable(self.w, m)
            Wb = Series.variable(self.w, m, conjugate=True)
            return (W * Wb + 1.0).log() * 2.0

        return self._series("fs", order, build)


@dataclass(frozen=True, eq=False)
class QuadratureGrid(NodeSet):
    """Gauss-Legendre nodes in x3 times uniform nodes in the azimuth."""

    n_x: int = 0
    n_theta: int = 0
    x: np.ndarray = None
    theta: np.ndarray = None
    weights: np.ndarray = None

    def integrate(self, values):
        """Integral against mu_FS (pairwise summation, deterministic)."""
        return np.sum(self.weights * values, axis=-1)

    def swap_charts(self, mask, limit=1 + 1e-9):
        """Same nodes with the chart switched where ``mask`` holds.

        ``limit`` bounds the resulting ``|w|``; raise it to exercise overlap
        points away from the equator.
        """
        mask = np.asarray(mask, dtype=bool)
        if np.any(self.w[mask] == 0):
            raise ValueError("cannot move a pole to the opposite chart")
        w = self.w.copy()
        w[mask] = 1.0 / w[mask]
        if np.any(np.abs(w) > limit):
            raise ValueError("swapped coordinate exceeds limit")
        north = self.north.copy()
        north[mask] = ~north[mask]
        return QuadratureGrid(w=w, north=north, n_x=self.n_x, n_theta=self.n_theta,
                              x=self.x, theta=self.theta, weights=self.weights)


def make_grid(n_x=DEFAULT_GRID[0], n_theta=DEFAULT_GRID[1]):
    """Product grid exact for polynomials of degree <= min(2 n_x - 1, n_theta - 1)."""
    if n_x < 2 or n_theta < 4:
        raise ValueError("need n_x >= 2 and n_theta >= 4")
    xg, wg = np.polynomial.legendre.leggauss(n_x)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    X, T = np.meshgrid(xg, theta, indexing="ij")
    W = np.repeat(wg / 2.0 / n_theta, n_theta)
    X, T = X.ravel(), T.ravel()
    r = np.sqrt(np.clip(1 - X * X, 0.0, None))
    x1, x2 = r * np.cos(T), r * np.sin(T)
    north = X >= 0
    w = np.where(north, (x1 + 1j * x2) / (1 + X), (x1 - 1j * x2) / (1 - X))
    return QuadratureGrid(w=w, north=north, n_x=n_x, n_theta=n_theta, x=X, theta=T, weights=W)


class Potential:
    """A fiber metric on -K_X given by local potentials in both charts."""

    def local_series(self, nodes, order=1):
        per_nodes = self._series_cache().setdefault(nodes, {})
        for m, s in per_nodes.items():
            if m >= order:
                return s.truncate(order)
        s = self._compute_series(nodes, order)
        per_nodes[order] = s
        return s

    def _series_cache(self):
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = weakref.WeakKeyDictionary()
            object.__setattr__(self, "_cache", cache)
        return cache

    def _compute_series(self, nodes, order):
        raise NotImplementedError

    def relative_values(self, nodes):
        """Global function phi - phi_FS at the nodes."""
        return (self.local_series(nodes, 0).value - nodes.fs_series(0).value).real


class MetricPotential(Potential):
    """phi = phi_FS + u with u a polynomial."""

    def __init__(self, u=None):
        self.u = u if u is not None else Polynomial()

    def __repr__(self):
        return f"MetricPotential({self.u!r})"

    def _compute_series(self, nodes, order):
        return nodes.fs_series(order) + self.u.series(nodes, order)

    def relative_values(self, nodes):
        return self.u.series(nodes, 0).value.real

    def shifted(self, f, t):
        """The potential phi + t f."""
        return MetricPotential(self.u + f * t)


ROUND = MetricPotential()


def jet(f, p):
    """(1,1)-jet of ``f`` at a single chart point: (v, d_w, d_wbar, d_wwbar)."""
    s = f.series(NodeSet.from_points([p]), 1)
    return Jet11(*(complex(a[0]) for a in (s.value, s.d_w, s.d_wbar, s.d_wwbar)))


@dataclass(frozen=True)
class Jet11:
    v: complex
    d_w: complex
    d_wbar: complex
    d_wwbar: complex


def curvature_density(phi, nodes):
    """phi_{w wbar} at every node, after the degeneracy check."""
    d = phi.local_series(nodes, 1).d_wwbar.real
    if np.any(d <= DEGENERACY_THRESHOLD):
        i = int(np.argmin(d))
        raise DegenerateMetricError(f"phi_wwbar = {d[i]:.3e} at node {i}")
    return d


def ma_measure(phi, grid):
    """Density of MA(phi) w.r.t. mu_FS; integrates to 2."""
    return curvature_density(phi, grid) * grid.conformal


def canonical_measure(phi, grid):
    """(int_X e^{-phi}, density of mu_phi w.r.t. mu_FS)."""
    loc = phi.local_series(grid, 0).value.real
    c = np.exp(-loc) * grid.conformal
    total = grid.integrate(c)
    return 2 * math.pi * total, c / total


def laplacian(f, phi, grid):
    return f.series(grid, 1).d_wwbar.real / curvature_density(phi, grid)


def grad_pair(f, g, phi, grid):
    """(df, dg)_phi = f_w conj(g_w) / phi_{w wbar}."""
    fs = f.series(grid, 1)
    gs = fs if g is f else g.series(grid, 1)
    return fs.d_w * np.conj(gs.d_w) / curvature_density(phi, grid)


def ricci_potential(phi, grid):
    _, mu = canonical_measure(phi, grid)
    return np.log(mu / ma_measure(phi, grid))


def scalar_curvature(phi, grid):
    """S = Ric(omega)/omega with Ric = -(i/2pi) dd^c log phi_{w wbar}."""
    curvature_density(phi, grid)
    g = phi.local_series(grid, 2).ddbar()
    return -g.log().d_wwbar.real / g.value.real


def integrate_measure(grid, density, values=1.0):
    return grid.integrate(density * values)


class RicciField:
    """The Ricci potential h_phi as a function with jets.

    In a chart, mu_phi / MA(phi) = (2 pi / mass) e^{-phi_loc} / phi_{w wbar}, so
    h = log(2 pi / mass) - phi_loc - log phi_{w wbar}.
    """

    def __init__(self, phi, grid):
        self.phi = phi
        mass, _ = canonical_measure(phi, grid)
        self.shift = math.log(2 * math.pi / mass)

    def series(self, nodes, order=1):
        s = self.phi.local_series(nodes, order + 1)
        return -s.truncate(order) - s.ddbar().log() + self.shift

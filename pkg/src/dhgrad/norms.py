"""Decreasing rearrangements and the norms built on them.

Fields are treated as step functions: each sample is constant on a cell of
known measure (``h**3`` on a grid, a spherical shell for radial samples).
The rearrangement of a step function is again a step function, so every
norm below is evaluated step by step in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal

from ._quadrature import gauss_legendre

__all__ = [
    "DivergentNormWarning",
    "NormSpec",
    "RearrangedProfile",
    "rearrange",
    "radial_samples",
    "lp_norm",
    "lorentz_norm",
    "weak_norm",
    "truncate",
    "unreachable_sums",
    "SumNormResult",
    "sum_space_norm",
    "OneilReport",
    "oneil_check",
    "random_oneil_instance",
    "sobolev_experiment",
]


class DivergentNormWarning(RuntimeWarning):
    """Raised (as a warning) when a norm integral diverges and ``inf`` is returned."""


@dataclass(frozen=True)
class NormSpec:
    """Exponents, truncation level and target space of a norm evaluation."""

    space: str = "lebesgue"
    p: float = 2.0
    q: float = 2.0
    k: float = 0.0

    def __post_init__(self):
        if self.space not in ("lebesgue", "lorentz", "weak", "sum"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.p < 1 or self.q < 1:
            raise ValueError("exponents must be >= 1")
        if self.space == "lorentz" and not (1 < self.p < np.inf or self.q == np.inf):
            raise ValueError("Lorentz norms need 1 < p < inf, or q = inf")
        if self.k < 0:
            raise ValueError("truncation level must be nonnegative")


@dataclass(frozen=True, eq=False)
class RearrangedProfile:
    """Step function ``v*``: value ``values[i]`` on ``(edges[i], edges[i+1])``.

    ``values`` is non-increasing and nonnegative; ``edges[0] = 0``.
    ``integral[i]`` is ``int_0^{edges[i]} v*``.
    """

    values: np.ndarray
    edges: np.ndarray
    integral: np.ndarray

    @classmethod
    def from_samples(cls, samples, measures) -> "RearrangedProfile":
        v = np.abs(np.asarray(samples, dtype=float)).ravel()
        m = np.broadcast_to(np.asarray(measures, dtype=float), np.shape(samples)).ravel()
        order = np.argsort(-v, kind="stable")
        v, m = v[order], m[order]
        edges = np.concatenate([[0.0], np.cumsum(m)])
        integral = np.concatenate([[0.0], np.cumsum(v * m)])
        return cls(values=v, edges=edges, integral=integral)

    @property
    def measures(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def total_measure(self) -> float:
        return float(self.edges[-1])

    @property
    def mass(self) -> float:
        return float(self.integral[-1])

    def _step(self, tau):
        return np.clip(np.searchsorted(self.edges, tau, side="right") - 1, 0, self.values.size)

    def vstar(self, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        i = self._step(tau)
        padded = np.append(self.values, 0.0)
        return padded[i]

    def vstarstar(self, tau) -> np.ndarray:
        """Running average ``(1/tau) int_0^tau v*``."""
        tau = np.asarray(tau, dtype=float)
        i = self._step(tau)
        padded = np.append(self.values, 0.0)
        acc = self.integral[i] + padded[i] * (tau - self.edges[i])
        return acc / tau

    def distribution(self, level) -> np.ndarray:
        """``|{|v| > level}|``."""
        level = np.asarray(level, dtype=float)
        # values are sorted descending; count those strictly above level
        n = np.searchsorted(-self.values, -level, side="left")
        return self.edges[n]

    def coefficients(self, i):
        """``v** = A + B/tau`` on step ``i``; ``i = n`` is the unbounded last step."""
        i = np.asarray(i)
        padded = np.append(self.values, 0.0)
        A = padded[i]
        B = self.integral[i] - A * self.edges[i]
        return A, np.maximum(B, 0.0)


def rearrange(field, cell_volume: Optional[float] = None) -> RearrangedProfile:
    """Decreasing rearrangement of a grid field (``ScalarField`` or array)."""
    if hasattr(field, "values") and hasattr(field, "grid"):
        return RearrangedProfile.from_samples(field.values, field.grid.cell_volume)
    if cell_volume is None:
        raise ValueError("cell_volume is required for plain arrays")
    return RearrangedProfile.from_samples(field, cell_volume)


def radial_samples(func, edges, d: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Values at volume midpoints and measures of the shells between ``edges``."""
    edges = np.asarray(edges, dtype=float)
    vol = edges**d
    mid = (0.5 * (vol[:-1] + vol[1:])) ** (1.0 / d)
    unit_ball = np.pi ** (d / 2) / math.gamma(d / 2 + 1)
    return func(mid), unit_ball * np.diff(vol)


# ---------------------------------------------------------------- norms


def lp_norm(profile: RearrangedProfile, p: float) -> float:
    if p == np.inf:
        return float(profile.values[0]) if profile.values.size else 0.0
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(profile.values**p * profile.measures) ** (1.0 / p))


def _power_integral(a, b, e):
    # int_a^b tau^(e-1) dtau for arrays a < b, a > 0
    if e == 0:
        return np.log(b / a)
    return a**e * np.expm1(e * np.log(b / a)) / e


def lorentz_norm(profile: RearrangedProfile, p: float, q: float, kind: str = "double") -> float:
    """``(int_0^inf (tau^(1/p) v**(tau))^q dtau/tau)^(1/q)``.

    ``kind="single"`` uses ``v*`` in place of ``v**``.  Returns ``inf``
    with a :class:`DivergentNormWarning` when the integral diverges.
    """
    if q == np.inf:
        return weak_norm(profile, p, kind=kind)
    if p < 1 or q < 1:
        raise ValueError("exponents must be >= 1")
    v, y = profile.values, profile.edges
    if profile.mass == 0:
        return 0.0
    if kind == "single":
        total = np.sum(v**q * (y[1:] ** (q / p) - y[:-1] ** (q / p))) * (p / q)
        return float(total ** (1.0 / q))
    if kind != "double":
        raise ValueError("kind must be 'double' or 'single'")
    if p == 1:
        warnings.warn("L^{1,q} norm with q < inf diverges for nonzero v", DivergentNormWarning)
        return np.inf
    r = q / p
    A, B = profile.coefficients(np.arange(v.size))
    a, b = y[:-1], y[1:]
    total = A[0] ** q * b[0] ** r / r  # first step starts at 0 with B = 0
    a, b, A, B = a[1:], b[1:], A[1:], B[1:]
    keep = b > a
    a, b, A, B = a[keep], b[keep], A[keep], B[keep]
    if float(q).is_integer():
        qi = int(q)
        for j in range(qi + 1):
            coef = math.comb(qi, j)
            with np.errstate(divide="ignore", invalid="ignore"):
                term = coef * A ** (qi - j) * B**j * _power_integral(a, b, r - j)
            total += float(np.sum(np.where((B == 0) & (j > 0), 0.0, term)))
    else:
        x, w = gauss_legendre(16)
        la, lb = np.log(a)[:, None], np.log(b)[:, None]
        t = np.exp(la + (lb - la) * x[None, :])
        vals = t**r * (A[:, None] + B[:, None] / t) ** q
        total += float(np.sum(((lb - la)[:, 0]) * (vals @ w)))
    S, Y = profile.mass, profile.total_measure
    total += S**q * Y ** (r - q) / (q - r)
    return float(total ** (1.0 / q))


def weak_norm(profile: RearrangedProfile, p: float, kind: str = "double") -> float:
    """``sup_tau tau^(1/p) v**(tau)`` (or with ``v*`` for ``kind="single"``).

    On each step ``tau^(1/p) v**`` has no interior maximum, so the supremum
    is attained at a step endpoint.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    v, y = profile.values, profile.edges[1:]
    if v.size == 0:
        return 0.0
    if kind == "single":
        return float(np.max(v * y ** (1.0 / p)))
    return float(np.max(profile.integral[1:] * y ** (1.0 / p - 1.0)))


# ---------------------------------------------------------------- truncation


def _truncate_array(u: np.ndarray, k: float) -> tuple[np.ndarray, np.ndarray]:
    T = np.clip(u, -k, k)
    G = u - T
    bad = (G + T) != u
    if np.any(bad):
        # look a few ulps either side for a G that makes the sum exact
        g0, t0, u0 = G[bad], T[bad], u[bad]
        best = g0.copy()
        found = np.zeros(g0.shape, dtype=bool)
        up, down = g0.copy(), g0.copy()
        for _ in range(3):
            up = np.nextafter(up, np.inf)
            down = np.nextafter(down, -np.inf)
            for cand in (up, down):
                hit = ~found & ((cand + t0) == u0)
                best[hit] = cand[hit]
                found |= hit
        G[bad] = best
    return G, T


def unreachable_sums(G: np.ndarray, T: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Mask of points where no float ``G'`` satisfies ``fl(G' + T) == u``.

    ``fl(x + T)`` is monotone in ``x``, so if the neighbours of ``G``
    already straddle ``u`` no other float can hit it.
    """
    miss = (G + T) != u
    lo = np.nextafter(G, -np.inf) + T
    hi = np.nextafter(G, np.inf) + T
    return miss & (lo < u) & (hi > u)


def truncate(u, k: float):
    """``(G_k u, T_k u)`` with ``T_k = max(-k, min(u, k))`` and ``G_k = u - T_k``.

    ``G`` is chosen so that ``G + T == u`` in floating point wherever such a
    float exists.  When ``k`` carries bits below the spacing of ``u`` the
    sum can fall on a rounding tie and skip ``u``; those points are off by
    one ulp and are reported by :func:`unreachable_sums`.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if hasattr(u, "values") and hasattr(u, "grid"):
        G, T = _truncate_array(u.values, k)
        return type(u)(u.grid, G), type(u)(u.grid, T)
    return _truncate_array(np.asarray(u, dtype=float), k)


@dataclass
class SumNormResult:
    """Truncation-restricted upper bound for the ``L^m + L^q`` norm."""

    value: float
    k: float
    norm_G: float
    norm_T: float
    probes_k: np.ndarray
    probes_value: np.ndarray
    endpoints: dict = field(default_factory=dict)


def _split_norms(profile: RearrangedProfile, k: float, m: float, q: float) -> tuple[float, float]:
    v, mu = profile.values, profile.measures
    g = np.maximum(v - k, 0.0)
    t = np.minimum(v, k)
    return (float(np.sum(g**m * mu) ** (1 / m)), float(np.sum(t**q * mu) ** (1 / q)))


def sum_space_norm(u, m: float, q: float, n_grid: int = 61, rtol: float = 1e-3,
                   cell_volume: Optional[float] = None) -> SumNormResult:
    """Minimise ``||G_k u||_m + ||T_k u||_q`` over truncation levels ``k``.

    ``u`` may be a grid field, an array with ``cell_volume``, or a
    :class:`RearrangedProfile`.  A log grid of ``k`` from the smallest
    positive value of ``|u|`` (but at least ``1e-15 max|u|``) to
    ``max|u|``, with ``n_grid`` points or eight per decade if that is
    more, plus ``k = 0`` is searched first; the best bracket is then
    refined by golden section.
    """
    if m < 1 or q < 1:
        raise ValueError("m and q must be >= 1")
    prof = u if isinstance(u, RearrangedProfile) else rearrange(u, cell_volume)
    top = float(prof.values[0]) if prof.values.size else 0.0
    if top == 0:
        return SumNormResult(0.0, 0.0, 0.0, 0.0, np.zeros(1), np.zeros(1))
    pos = prof.values[prof.values > 0]
    bottom = max(float(pos[-1]), 1e-15 * top)
    if bottom >= top:
        bottom = 1e-6 * top
    n = max(n_grid, int(np.ceil(8 * np.log10(top / bottom))) + 1)
    ks = np.concatenate([[0.0], np.geomspace(bottom, top, n)])
    vals = np.array([sum(_split_norms(prof, k, m, q)) for k in ks])
    probes_k, probes_v = list(ks), list(vals)
    i = int(np.argmin(vals))
    if 0 < i < len(ks) - 1 and ks[i - 1] > 0:
        lo, hi = np.log(ks[i - 1]), np.log(ks[i + 1])
        phi = (np.sqrt(5.0) - 1) / 2
        c, d = hi - phi * (hi - lo), lo + phi * (hi - lo)
        fc = sum(_split_norms(prof, np.exp(c), m, q))
        fd = sum(_split_norms(prof, np.exp(d), m, q))
        probes_k += [np.exp(c), np.exp(d)]
        probes_v += [fc, fd]
        for _ in range(60):
            if abs(fc - fd) <= 0.01 * rtol * min(fc, fd) and hi - lo < 1e-3:
                break
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - phi * (hi - lo)
                fc = sum(_split_norms(prof, np.exp(c), m, q))
                probes_k.append(np.exp(c))
                probes_v.append(fc)
            else:
                lo, c, fc = c, d, fd
                d = lo + phi * (hi - lo)
                fd = sum(_split_norms(prof, np.exp(d), m, q))
                probes_k.append(np.exp(d))
                probes_v.append(fd)
    probes_k, probes_v = np.array(probes_k), np.array(probes_v)
    j = int(np.argmin(probes_v))
    kbest = float(probes_k[j])
    nG, nT = _split_norms(prof, kbest, m, q)
    return SumNormResult(
        value=float(probes_v[j]), k=kbest, norm_G=nG, norm_T=nT,
        probes_k=probes_k, probes_value=probes_v,
        endpoints=dict(k0=float(vals[0]), kmax=float(vals[-1])),
    )


# ---------------------------------------------------------------- O'Neil


@dataclass
class OneilReport:
    tau: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: float
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def max_ratio(self) -> float:
        ok = self.rhs > 0
        return float(np.max(self.lhs[ok] / self.rhs[ok])) if np.any(ok) else 0.0


def _oneil_rhs(pv: RearrangedProfile, pf: RearrangedProfile, tau: np.ndarray) -> np.ndarray:
    """``int_tau^inf v**(y) F**(y) dy`` in closed form on the merged steps."""
    z = np.union1d(pv.edges, pf.edges)
    a, b = z[:-1], z[1:]
    mid = 0.5 * (a + b)
    A1, B1 = pv.coefficients(pv._step(mid))
    A2, B2 = pf.coefficients(pf._step(mid))

    def piece(lo, hi, A1, B1, A2, B2):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = A1 * A2 * (hi - lo)
            lin = A1 * B2 + A2 * B1
            out = out + np.where(lin > 0, lin * np.log(hi / lo), 0.0)
            quad = B1 * B2
            out = out + np.where(quad > 0, quad * (1.0 / lo - 1.0 / hi), 0.0)
        return out

    seg = piece(a, b, A1, B1, A2, B2)
    far = pv.mass * pf.mass / z[-1]
    suffix = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]]) + far
    out = np.empty_like(tau)
    for n, t in enumerate(tau):
        if t >= z[-1]:
            out[n] = pv.mass * pf.mass / t
            continue
        j = int(np.searchsorted(z, t, side="right") - 1)
        out[n] = suffix[j + 1] + piece(t, b[j], A1[j], B1[j], A2[j], B2[j])
    return out


def oneil_check(v, F, cell_volume: float = 1.0, n_probes: int = 50,
                slack: float = 1e-8) -> OneilReport:
    """Check ``h**(tau) <= int_tau^inf v**(y) F**(y) dy`` for ``h = v * F``.

    ``v`` and ``F`` are small 3-D arrays on grids with the same spacing;
    the convolution is evaluated by direct summation over the full
    linear support.
    """
    v = np.asarray(v, dtype=float)
    F = np.asarray(F, dtype=float)
    if max(v.shape + F.shape) > 32:
        raise ValueError("direct summation is limited to grids with N <= 32")
    h = signal.convolve(v, F, mode="full", method="direct") * cell_volume
    ph = rearrange(h, cell_volume)
    pv = rearrange(v, cell_volume)
    pf = rearrange(F, cell_volume)
    support = max(ph.distribution(0.0), cell_volume)
    tau = np.geomspace(0.5 * cell_volume, 4.0 * support, n_probes)
    lhs = ph.vstarstar(tau)
    rhs = _oneil_rhs(pv, pf, tau)
    bad = lhs > rhs + slack * np.maximum(rhs, np.finfo(float).tiny)
    violations = [(float(t), float(l), float(r)) for t, l, r in zip(tau[bad], lhs[bad], rhs[bad])]
    return OneilReport(tau=tau, lhs=lhs, rhs=rhs, slack=slack, violations=violations)


def random_oneil_instance(rng: np.random.Generator, n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Two nonnegative fields on an ``n^3`` grid: a sparse random ``v`` and a decaying random ``F``."""
    v = rng.random((n, n, n)) * (rng.random((n, n, n)) < rng.uniform(0.05, 0.6))
    c = rng.uniform(0.3 * n, 0.7 * n, size=3)
    X, Y, Z = np.meshgrid(*(np.arange(n),) * 3, indexing="ij")
    r = np.sqrt((X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2)
    F = rng.random((n, n, n)) * np.exp(-r / rng.uniform(1.0, 4.0))
    return v, F


def sobolev_experiment(config):
    """Run the Sobolev-quotient suite described by ``config``; see :mod:`dhgrad.experiments`."""
    from .experiments import run_sobolev

    return run_sobolev(config)

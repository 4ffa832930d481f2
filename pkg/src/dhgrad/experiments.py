"""Sobolev-inequality quotients for radial test functions.

Everything here works in the radial variable: the test function, its
rearrangement (a radial decreasing function is its own rearrangement up to
the change of variable ``tau = |B_rho|``), and the nonlocal gradient
``G u = f(rho) x/|x|`` obtained from :func:`field_ops.radial_nonlocal_gradient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ._quadrature import gauss_legendre
from .field_ops import radial_nonlocal_gradient
from .kernels import KernelSpec, RadialProfile, bump_profile, make_kernel
from .norms import RearrangedProfile, lorentz_norm, lp_norm, radial_samples, sum_space_norm
from .radial_fourier import RadialSpectrum, radial_ft, radial_ft_values

__all__ = [
    "RadialTest",
    "gaussian_test",
    "bump_test",
    "make_family",
    "GradientNorms",
    "gradient_norms",
    "SobolevConfig",
    "THEOREMS",
    "CSV_COLUMNS",
    "run_sobolev",
    "kernel_label",
    "quotient_spread",
    "lorentz_split",
]

CSV_COLUMNS = ("theorem", "kernel", "family", "param", "s", "t", "p", "lhs", "rhs", "quotient", "k_used")

# theorem id -> kernel families it covers
THEOREMS = {
    "1.2": ("riesz",),
    "1.4": ("local", "intermediate"),
    "1.5": ("two_scale", "riesz"),
    "1.6": ("local", "intermediate"),
    "1.7": ("two_scale", "riesz"),
}


@lru_cache(maxsize=None)
def _unit_bump():
    return bump_profile(1.0)


@dataclass(frozen=True)
class RadialTest:
    """A radial test function ``u(rho)`` with its transform.

    ``scale`` is the width of a Gaussian or the radius of a bump;
    ``support`` is where ``u`` becomes negligible and ``xi_max`` where
    ``u^`` does.
    """

    kind: str
    scale: float

    def u(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (rho / self.scale) ** 2)
        return _unit_bump().g(rho / self.scale)

    def u_hat(self, xi):
        xi = np.asarray(xi, dtype=float)
        c = self.scale
        if self.kind == "gaussian":
            return (2.0 * np.pi * c * c) ** 1.5 * np.exp(-2.0 * np.pi**2 * (c * xi) ** 2)
        return c**3 * radial_ft_values(_unit_bump(), c * xi)[0]

    @property
    def support(self) -> float:
        return 12.0 * self.scale if self.kind == "gaussian" else self.scale

    @property
    def xi_max(self) -> float:
        return (2.0 if self.kind == "gaussian" else 80.0) / self.scale

    def profile(self, n: int = 4000) -> RearrangedProfile:
        """Shell samples of ``u``, rearranged."""
        c = self.scale
        edges = np.concatenate([[0.0], np.geomspace(1e-4 * c, c, n // 4),
                                np.linspace(c, self.support, n - n // 4 + 1)[1:]])
        vals, meas = radial_samples(self.u, edges)
        return RearrangedProfile.from_samples(vals, meas)


def gaussian_test(width: float) -> RadialTest:
    return RadialTest("gaussian", float(width))


def bump_test(radius: float) -> RadialTest:
    return RadialTest("bump", float(radius))


def make_family(name: str, params: Optional[Sequence[float]] = None) -> list[RadialTest]:
    """``gaussians`` (widths), ``bumps`` (radii) or ``dilations`` (of the unit bump)."""
    if name == "gaussians":
        return [gaussian_test(w) for w in (params or (0.5, 0.75, 1.0, 1.5, 2.0))]
    if name == "bumps":
        return [bump_test(r) for r in (params or (0.5, 1.0, 2.0))]
    if name == "dilations":
        return [bump_test(lam) for lam in (params or [2.0**j for j in range(-3, 4)])]
    raise ValueError(f"unknown test family {name!r}")


@dataclass
class GradientNorms:
    """Quadrature nodes and values of the radial component of ``G u``."""

    rho: np.ndarray
    weights: np.ndarray
    f: np.ndarray
    core_slope: float
    rho_lo: float
    rho_far: float
    tail_coef: float
    tail_exponent: Optional[float]

    def lp(self, p: float) -> float:
        """``||G u||_p`` including the inner ball and the power-law tail."""
        area = 4.0 * np.pi
        body = area * np.sum(self.weights * np.abs(self.f) ** p * self.rho**2)
        core = area * abs(self.core_slope) ** p * self.rho_lo ** (p + 3) / (p + 3)
        tail = 0.0
        if self.tail_exponent is not None:
            e = p * self.tail_exponent + 3
            if e >= 0:
                return np.inf
            tail = area * abs(self.tail_coef) ** p * self.rho_far**e / (-e)
        return float((body + core + tail) ** (1.0 / p))


def gradient_norms(test: RadialTest, spectrum: RadialSpectrum, profile: RadialProfile,
                   per_decade: int = 12, order: int = 10) -> GradientNorms:
    """Sample ``G u`` on log-graded Gauss-Legendre nodes up to a far radius."""
    c = test.scale
    rho_lo = 1e-3 * c
    rho_far = max(40.0 * c, test.support + profile.r_hi)
    breaks = {rho_lo, rho_far, test.support, c}
    for b in (profile.r_lo, profile.r_hi):
        if rho_lo < b < rho_far:
            breaks.add(b)
    breaks = np.array(sorted(breaks))
    edges = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(np.ceil(per_decade * np.log10(b / a))))
        edges.extend(np.geomspace(a, b, m + 1)[1:])
    edges = np.array(edges)
    x, w = gauss_legendre(order)
    h = np.diff(edges)
    rho = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    pts = np.concatenate([rho, [rho_lo, rho_far]])
    f = radial_nonlocal_gradient(test.u_hat, spectrum, pts, xi_max=test.xi_max)
    f_body, f_lo, f_far = f[:-2], f[-2], f[-1]
    tail_e = None
    tail_c = 0.0
    if profile.tail is not None:
        tail_e = profile.tail.exponent - 1.0
        tail_c = f_far / rho_far**tail_e
    return GradientNorms(rho=rho, weights=wts, f=f_body, core_slope=f_lo / rho_lo,
                         rho_lo=rho_lo, rho_far=rho_far, tail_coef=tail_c, tail_exponent=tail_e)


def kernel_label(spec: KernelSpec) -> str:
    parts = [f"s={spec.s:g}"]
    if spec.tail is not None:
        parts.append(f"tail={spec.tail:g}")
    if spec.family != "riesz":
        parts.append(f"r={spec.r:g},R={spec.R:g}")
    return f"{spec.family}({','.join(parts)})"


def _t_value(spec: KernelSpec) -> float:
    if spec.family == "riesz":
        return spec.s
    if spec.family == "two_scale":
        return spec.tail
    return 1.0  # local and intermediate behave like t = 1 at infinity


@dataclass
class SobolevConfig:
    """One theorem, a list of kernels, one test family and an exponent."""

    theorem: str
    kernels: Sequence[KernelSpec]
    family: str = "dilations"
    params: Optional[Sequence[float]] = None
    p: float = 2.0
    best_k: bool = True
    spectrum_n: int = 2048

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem {self.theorem!r}; expected one of {sorted(THEOREMS)}")


def _exponents(theorem: str, spec: KernelSpec, p: float, d: int = 3):
    """Target exponents ``(m, q)`` or a reason the row is skipped."""
    s, t = spec.s, _t_value(spec)
    if spec.family not in THEOREMS[theorem]:
        return None, f"theorem {theorem} does not cover family {spec.family}"
    if theorem == "1.2":
        return (d / (d - s), None), None
    if theorem in ("1.6", "1.7") and p <= 1:
        return None, "Lorentz refinement needs p > 1"
    if p < 1 or p >= d / s or p >= d / t:
        return None, f"p={p:g} outside [1, min(d/s, d/t))"
    return (p * d / (d - s * p), p * d / (d - t * p)), None


def _split_profile(prof: RearrangedProfile, k: float) -> tuple[RearrangedProfile, RearrangedProfile]:
    meas = prof.measures
    G = RearrangedProfile.from_samples(np.maximum(prof.values - k, 0.0), meas)
    T = RearrangedProfile.from_samples(np.minimum(prof.values, k), meas)
    return G, T


def lorentz_split(prof: RearrangedProfile, k: float, m: float, q: float, p: float) -> float:
    """``||G_k u||_{L^{m,p}} + ||T_k u||_{L^{q,p}}``."""
    G, T = _split_profile(prof, k)
    return lorentz_norm(G, m, p) + lorentz_norm(T, q, p)


def _best_lorentz_k(prof, m, q, p):
    top = float(prof.values[0])
    ks = top * np.geomspace(1e-4, 1.0, 41)
    vals = [lorentz_split(prof, k, m, q, p) for k in ks]
    i = int(np.argmin(vals))
    return float(ks[i]), float(vals[i])


def run_sobolev(config: SobolevConfig) -> dict:
    """Evaluate quotients ``lhs / rhs`` for every (kernel, test function) pair.

    Returns ``{"rows": [...], "skipped": [...]}``; each row is a dict keyed by
    :data:`CSV_COLUMNS`.  For the Lorentz theorems the truncation level is
    ``k = ||G u||_p``; with ``best_k`` an extra row tagged ``<id>-bestk``
    reports the empirically best level on a log grid.
    """
    rows, skipped = [], []
    tests = make_family(config.family, config.params)
    p = 1.0 if config.theorem == "1.2" else config.p
    for spec in config.kernels:
        exps, reason = _exponents(config.theorem, spec, p)
        if exps is None:
            skipped.append(dict(kernel=kernel_label(spec), reason=reason))
            continue
        kprof = make_kernel(spec)
        spectrum = radial_ft(kprof, xi_min=1e-6, xi_max=1e4, n=config.spectrum_n)
        t_col = spec.tail if spec.tail is not None else float("nan")
        for test in tests:
            gn = gradient_norms(test, spectrum, kprof)
            grad_p = gn.lp(p)
            uprof = test.profile()
            base = dict(theorem=config.theorem, kernel=kernel_label(spec), family=test.kind,
                        param=test.scale, s=spec.s, t=t_col, p=p)
            m, q = exps
            if config.theorem == "1.2":
                lhs = lp_norm(uprof, m)
                rhs = (1.0 - spec.s) * grad_p / (spec.a * (spec.d - 1 + spec.s))
                rows.append(dict(base, lhs=lhs, rhs=rhs, quotient=lhs / rhs, k_used=float("nan")))
            elif config.theorem in ("1.4", "1.5"):
                res = sum_space_norm(uprof, m, q)
                rows.append(dict(base, lhs=res.value, rhs=grad_p, quotient=res.value / grad_p,
                                 k_used=res.k))
            else:
                k = grad_p
                lhs = lorentz_split(uprof, k, m, q, p)
                rows.append(dict(base, lhs=lhs, rhs=grad_p, quotient=lhs / grad_p, k_used=k))
                if config.best_k:
                    kb, lb = _best_lorentz_k(uprof, m, q, p)
                    rows.append(dict(base, theorem=f"{config.theorem}-bestk", lhs=lb, rhs=grad_p,
                                     quotient=lb / grad_p, k_used=kb))
    rows.sort(key=lambda r: (r["theorem"], r["kernel"], r["family"], r["param"], r["s"]))
    return dict(rows=rows, skipped=skipped)


def quotient_spread(rows, theorem: str, kernel: Optional[str] = None) -> float:
    """``max/min`` of finite quotients for one theorem (and kernel)."""
    q = [r["quotient"] for r in rows if r["theorem"] == theorem and (kernel is None or r["kernel"] == kernel)]
    q = np.array(q, dtype=float)
    if q.size == 0 or not np.all(np.isfinite(q)) or np.any(q <= 0):
        return np.inf
    return float(q.max() / q.min())

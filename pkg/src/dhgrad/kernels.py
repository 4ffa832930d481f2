"""Radial kernels g for the nonlocal gradient and checks of their standing assumptions.

A kernel is described through its radial profile ``p(rho) = rho**(d-1) g(rho)``.
Near the origin ``p = a rho**(-s)``; far out ``p`` is either ``b rho**(-tau)``
or identically zero.  On the transition interval ``[r, R]`` the curvature
``p''`` is prescribed as a nonnegative combination of the two end curvatures
(faded out by C-infinity steps) and two C-infinity bumps whose weights are
fixed by matching ``p`` and ``p'`` at ``R``.  Convexity and monotonicity then
hold by construction, and ``p`` coincides with the end formulas exactly
outside ``[r, R]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as C

from ._quadrature import gauss_legendre

__all__ = [
    "FAMILIES",
    "KernelSpec",
    "PowerPiece",
    "RadialProfile",
    "KernelRejected",
    "make_kernel",
    "blended_profile",
    "ball_indicator",
    "gaussian_profile",
    "bump_profile",
    "truncated_power",
    "check_gradient_condition",
    "check_monotone_convex",
    "check_integrability",
]

FAMILIES = ("riesz", "local", "intermediate", "two_scale")


class KernelRejected(ValueError):
    """Raised when no convex, non-increasing transition exists for the requested ends."""


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a kernel family.

    ``tail`` is ``t`` for ``two_scale`` and the decay exponent of ``g`` for
    ``intermediate``; it is ignored otherwise.  ``blend_sharpness`` sets the
    width ``(R - r) / blend_sharpness`` of the fade and bump regions.
    """

    family: str
    d: int = 3
    s: float = 0.5
    tail: Optional[float] = None
    a: float = 1.0
    b: float = 1.0
    r: float = 1.0
    R: float = 2.0
    blend_sharpness: float = 10.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s!r}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a!r}")
        if self.family == "riesz":
            return
        if self.r <= 0 or self.R <= self.r:
            raise ValueError(f"need 0 < r < R, got r={self.r!r}, R={self.R!r}")
        if self.blend_sharpness < 2:
            raise ValueError("blend_sharpness must be at least 2 so the two ends do not overlap")
        if self.family == "local":
            if self.b != 0:
                raise ValueError("family 'local' requires b = 0")
        elif self.b <= 0:
            raise ValueError(f"b must be positive for family {self.family!r}")
        if self.family == "two_scale":
            if self.tail is None or not 0.0 < self.tail < 1.0:
                raise ValueError(f"two_scale needs tail t in (0, 1), got {self.tail!r}")
        if self.family == "intermediate":
            if self.tail is None or self.tail <= self.d:
                raise ValueError(f"intermediate needs tail exponent > d={self.d}, got {self.tail!r}")

    @classmethod
    def default(cls, family: str, **overrides) -> "KernelSpec":
        """Default parameters per family, with keyword overrides."""
        base = {
            "riesz": dict(s=0.5),
            "local": dict(s=0.5, b=0.0, r=1.0, R=4.0),
            "intermediate": dict(s=0.6, tail=4.0, a=1.0, b=1.0, r=1.0, R=3.0),
            "two_scale": dict(s=0.6, tail=0.3, a=1.0, b=1.0, r=1.0, R=2.0),
        }[family]
        base.update(overrides)
        return cls(family=family, **base)

    @property
    def tail_p_exponent(self) -> Optional[float]:
        """Exponent ``tau`` with ``p ~ b rho**(-tau)`` at infinity (None if compact)."""
        if self.family == "riesz":
            return self.s
        if self.family == "two_scale":
            return self.tail
        if self.family == "intermediate":
            return self.tail - (self.d - 1)
        return None

    @property
    def alpha(self) -> float:
        """Exponent of the high-frequency power ``a c_alpha / xi**alpha``."""
        return 1.0 - self.s

    @property
    def beta(self) -> Optional[float]:
        """Exponent of the low-frequency power ``b c_beta / xi**beta`` (None if compact)."""
        tau = self.tail_p_exponent
        return None if tau is None else 1.0 - tau

    def scaled(self, c: float) -> "KernelSpec":
        return replace(self, a=self.a * c, b=self.b * c)


@dataclass(frozen=True)
class PowerPiece:
    """``g(rho) = coef * rho**exponent`` on a half line."""

    coef: float
    exponent: float

    def g(self, rho):
        return self.coef * rho**self.exponent

    def dg(self, rho):
        return self.coef * self.exponent * rho ** (self.exponent - 1.0)


@dataclass(frozen=True)
class _ChebPieces:
    # piecewise Chebyshev series for p, p', p'' on [lo, hi]
    edges: np.ndarray
    p: tuple
    dp: tuple
    d2p: tuple

    def _eval(self, series, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(series) - 1)
        for i, ser in enumerate(series):
            m = idx == i
            if np.any(m):
                out[m] = ser(x[m])
        return out

    def __call__(self, x, nu: int = 0):
        return self._eval((self.p, self.dp, self.d2p)[nu], x)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial kernel ``g`` assembled from a head power, a middle segment, and a tail.

    Parameters
    ----------
    d : int
        Ambient dimension.
    r_lo, r_hi : float
        Middle segment ``[r_lo, r_hi]``.  The head piece (if any) covers
        ``(0, r_lo]``; the tail covers ``[r_hi, inf)`` and is either a power
        or zero (compact support).
    head, tail : PowerPiece or None
    middle_g, middle_dg : callable
        Vectorised ``g`` and ``g'`` on the middle segment.
    meta : dict
        Construction details (family, defects, bump weights, ...).
    """

    d: int
    r_lo: float
    r_hi: float
    head: Optional[PowerPiece]
    tail: Optional[PowerPiece]
    middle_g: Callable
    middle_dg: Callable
    meta: dict = field(default_factory=dict)
    rho_min: float = 1e-4
    rho_max: float = 1e4
    n_table: int = 4096

    @property
    def compact_support(self) -> bool:
        return self.tail is None

    @property
    def head_exponent(self) -> Optional[float]:
        """Exponent of ``g`` near the origin (None when g is bounded there)."""
        return None if self.head is None else self.head.exponent

    @property
    def tail_exponent(self) -> Optional[float]:
        return None if self.tail is None else self.tail.exponent

    def _piecewise(self, rho, which: str):
        rho = np.asarray(rho, dtype=float)
        scalar = rho.ndim == 0
        rho = np.atleast_1d(rho)
        out = np.zeros_like(rho)
        lo = rho < self.r_lo
        hi = rho > self.r_hi
        mid = ~(lo | hi)
        if np.any(lo):
            if self.head is None:
                raise ValueError("profile has no head piece below r_lo")
            out[lo] = getattr(self.head, which)(rho[lo])
        if np.any(mid):
            f = self.middle_g if which == "g" else self.middle_dg
            out[mid] = f(rho[mid])
        if np.any(hi) and self.tail is not None:
            out[hi] = getattr(self.tail, which)(rho[hi])
        return out[0] if scalar else out

    def g(self, rho):
        return self._piecewise(rho, "g")

    def dg(self, rho):
        return self._piecewise(rho, "dg")

    def p(self, rho):
        rho = np.asarray(rho, dtype=float)
        return rho ** (self.d - 1) * self.g(rho)

    def dp(self, rho):
        rho = np.asarray(rho, dtype=float)
        return (self.d - 1) * rho ** (self.d - 2) * self.g(rho) + rho ** (self.d - 1) * self.dg(rho)

    @property
    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rho, g, g')`` on ``n_table`` log-spaced nodes."""
        cached = self.meta.get("_table")
        if cached is None:
            rho = np.geomspace(self.rho_min, self.rho_max, self.n_table)
            cached = (rho, self.g(rho), self.dg(rho))
            self.meta["_table"] = cached
        return cached

    def with_table(self, rho_min: float, rho_max: float, n: int) -> "RadialProfile":
        meta = {k: v for k, v in self.meta.items() if k != "_table"}
        return replace(self, rho_min=rho_min, rho_max=rho_max, n_table=n, meta=meta)

    def export(self, path) -> None:
        """Write the table as two columns ``rho g(rho)``."""
        rho, g, _ = self.table
        np.savetxt(path, np.column_stack([rho, g]), header="rho g")


# ---------------------------------------------------------------- smooth pieces


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, flat to all orders at both ends."""
    x = np.asarray(x, dtype=float)
    a = _psi(x)
    b = _psi(1.0 - x)
    return a / (a + b)


def bump(x):
    """C-infinity bump supported on [0, 1], normalised to unit integral."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0) & (x < 1)
    xm = x[m]
    out[m] = np.exp(-1.0 / (xm * (1.0 - xm)))
    return out / _BUMP_MASS


def _bump_mass() -> float:
    x, w = gauss_legendre(64)
    edges = np.linspace(0, 1, 33)
    tot = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = lo + (hi - lo) * x
        tot += (hi - lo) * np.sum(w * np.exp(-1.0 / (t * (1.0 - t))))
    return tot


_BUMP_MASS = _bump_mass()


def _cheb_fit(f, edges, deg):
    return tuple(
        C.Chebyshev.interpolate(f, deg, domain=[lo, hi]) for lo, hi in zip(edges[:-1], edges[1:])
    )


def _integrate_pieces(series, edges, start_value):
    out = []
    val = start_value
    for ser, lo in zip(series, edges[:-1]):
        anti = ser.integ(lbnd=lo, k=val)
        out.append(anti)
        val = anti(edges[edges.tolist().index(lo) + 1])
    return tuple(out), val


def blended_profile(
    d: int,
    a: float,
    s: float,
    b: float,
    tau: Optional[float],
    r: float,
    R: float,
    blend_sharpness: float = 10.0,
    n_pieces: int = 32,
    degree: int = 40,
    meta: Optional[dict] = None,
) -> RadialProfile:
    """Build ``p`` with ``p = a rho^-s`` on (0, r] and ``p = b rho^-tau`` (or 0) on [R, inf).

    ``tau=None`` (or ``b=0``) gives a compactly supported kernel.

    Raises
    ------
    KernelRejected
        If the matching conditions need a negative bump weight, i.e. no
        convex non-increasing transition of this shape exists.
    """
    compact = tau is None or b == 0
    L = R - r
    ell = L / blend_sharpness

    def ph(x, nu=0):
        c = [1.0, -s, s * (s + 1.0)][nu]
        return a * c * x ** (-s - nu)

    def pt(x, nu=0):
        if compact:
            return np.zeros_like(np.asarray(x, dtype=float))
        c = [1.0, -tau, tau * (tau + 1.0)][nu]
        return b * c * x ** (-tau - nu)

    def fade(x):
        # known part of p'': head curvature fading out, tail curvature fading in
        w = smooth_step((x - r) / ell)
        v = smooth_step((x - (R - ell)) / ell)
        return (1.0 - w) * ph(x, 2) + v * pt(x, 2)

    def b1(x):
        return bump((x - r) / ell) / ell

    def b2(x):
        return bump((x - (R - ell)) / ell) / ell

    edges = np.linspace(r, R, n_pieces + 1)
    f_ser = _cheb_fit(fade, edges, degree)
    b1_ser = _cheb_fit(b1, edges, degree)
    b2_ser = _cheb_fit(b2, edges, degree)

    def moments(series):
        m0 = sum(ser.integ(lbnd=lo)(hi) for ser, lo, hi in zip(series, edges[:-1], edges[1:]))
        wts = tuple((C.Chebyshev([R], domain=ser.domain) - C.Chebyshev.identity(domain=ser.domain)) * ser
                    for ser in series)
        m1 = sum(ser.integ(lbnd=lo)(hi) for ser, lo, hi in zip(wts, edges[:-1], edges[1:]))
        return m0, m1

    f0, f1 = moments(f_ser)
    b10, b11 = moments(b1_ser)
    b20, b21 = moments(b2_ser)
    rhs = np.array([
        float(pt(R, 1)) - ph(r, 1) - f0,
        float(pt(R)) - ph(r) - ph(r, 1) * L - f1,
    ])
    mat = np.array([[b10, b20], [b11, b21]])
    c1, c2 = np.linalg.solve(mat, rhs)

    chord = (float(pt(R)) - ph(r)) / L
    if c1 < 0 or c2 < 0:
        necessary = ph(r, 1) <= chord <= float(pt(R, 1))
        msg = (
            f"no convex non-increasing transition on [r, R] = [{r:g}, {R:g}]: "
            f"bump weights ({c1:.4g}, {c2:.4g}) must be nonnegative. "
            f"Chord slope (p(R) - p(r))/(R - r) = {chord:.4g} must lie between "
            f"p'(r) = {ph(r, 1):.4g} and p'(R) = {float(pt(R, 1)):.4g}"
        )
        if not necessary:
            if compact:
                msg += f"; for a compact tail this needs s/r >= 1/(R - r), i.e. R >= {r + r / s:g}"
            msg += " (violated)."
        else:
            msg += (
                " (satisfied, but the fade-out curvature leaves too little room; "
                "widen [r, R] or raise blend_sharpness)."
            )
        raise KernelRejected(msg)

    d2_ser = tuple(fs + c1 * s1 + c2 * s2 for fs, s1, s2 in zip(f_ser, b1_ser, b2_ser))
    d1_ser, dp_end = _integrate_pieces(d2_ser, edges, ph(r, 1))
    p_ser, p_end = _integrate_pieces(d1_ser, edges, ph(r))
    pieces = _ChebPieces(edges=edges, p=p_ser, dp=d1_ser, d2p=d2_ser)

    defect_p = abs(p_end - float(pt(R))) / max(abs(ph(r)), 1e-300)
    defect_dp = abs(dp_end - float(pt(R, 1))) / max(abs(ph(r, 1)), 1e-300)

    def mid_g(x):
        return pieces(x) * x ** (1.0 - d)

    def mid_dg(x):
        return pieces(x, 1) * x ** (1.0 - d) - (d - 1) * pieces(x) * x ** (-d)

    info = dict(meta or {})
    info.update(
        bump_weights=(float(c1), float(c2)),
        chord_slope=chord,
        defect=max(defect_p, defect_dp),
        blend_width=ell,
        p_middle=pieces,
    )
    head = PowerPiece(a, -(d - 1) - s)
    tail = None if compact else PowerPiece(b, -(d - 1) - tau)
    return RadialProfile(d=d, r_lo=r, r_hi=R, head=head, tail=tail,
                         middle_g=mid_g, middle_dg=mid_dg, meta=info)


def make_kernel(spec: KernelSpec) -> RadialProfile:
    """Construct the radial profile of ``spec``.

    The result matches the family's power laws exactly for ``rho <= r`` and
    ``rho >= R`` and is certified convex and non-increasing in ``p``.
    """
    d = spec.d
    meta = dict(family=spec.family, spec=spec)
    if spec.family == "riesz":
        piece = PowerPiece(spec.a, -(d - 1) - spec.s)
        meta["defect"] = 0.0
        return RadialProfile(d=d, r_lo=1.0, r_hi=1.0, head=piece, tail=piece,
                             middle_g=piece.g, middle_dg=piece.dg, meta=meta)
    b = 0.0 if spec.family == "local" else spec.b
    return blended_profile(d, spec.a, spec.s, b, spec.tail_p_exponent, spec.r, spec.R,
                           spec.blend_sharpness, meta=meta)


# ---------------------------------------------------------------- test profiles


def ball_indicator(radius: float = 1.0, d: int = 3) -> RadialProfile:
    """``g = 1`` on the ball of the given radius; a profile that violates convexity."""
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return RadialProfile(d=d, r_lo=0.0, r_hi=radius, head=None, tail=None,
                         middle_g=one, middle_dg=zero, meta=dict(family="ball"))


def gaussian_profile(d: int = 3, cut: float = 10.0) -> RadialProfile:
    """``g = exp(-pi rho^2)``, its own Fourier transform; negligible beyond ``cut``."""
    g = lambda x: np.exp(-np.pi * np.asarray(x, dtype=float) ** 2)
    dg = lambda x: -2.0 * np.pi * np.asarray(x, dtype=float) * g(x)
    return RadialProfile(d=d, r_lo=0.0, r_hi=cut, head=None, tail=None,
                         middle_g=g, middle_dg=dg, meta=dict(family="gaussian"))


def bump_profile(radius: float = 1.0, d: int = 3) -> RadialProfile:
    """Smooth compactly supported ``exp(1 - 1/(1 - (rho/radius)^2))``, equal to 1 at the origin."""

    def g(x):
        t = np.asarray(x, dtype=float) / radius
        inside = np.abs(t) < 1
        q = np.where(inside, 1.0 - t * t, 1.0)
        return np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)

    def dg(x):
        t = np.asarray(x, dtype=float) / radius
        inside = np.abs(t) < 1
        q = np.where(inside, 1.0 - t * t, 1.0)
        return np.where(inside, -2.0 * t / q**2 * np.exp(1.0 - 1.0 / q) / radius, 0.0)

    return RadialProfile(d=d, r_lo=0.0, r_hi=radius, head=None, tail=None,
                         middle_g=g, middle_dg=dg, meta=dict(family="bump", radius=radius))


def truncated_power(exponent: float, cutoff: float, d: int = 3) -> RadialProfile:
    """``g = rho**exponent`` for ``rho <= cutoff`` and zero beyond."""
    piece = PowerPiece(1.0, exponent)
    return RadialProfile(d=d, r_lo=cutoff, r_hi=cutoff, head=piece, tail=None,
                         middle_g=piece.g, middle_dg=piece.dg,
                         meta=dict(family="truncated_power"))


# ---------------------------------------------------------------- checks


def _shell_integrals(f, edges, order=24):
    # integral of f over each [edges[i], edges[i+1]] in the log variable
    x, w = gauss_legendre(order)
    lo = np.log(edges[:-1])[:, None]
    hi = np.log(edges[1:])[:, None]
    t = lo + (hi - lo) * x[None, :]
    rho = np.exp(t)
    return ((hi - lo) * f(rho) * rho) @ w


def _dyadic_sum(shells: np.ndarray, ratio_limit: float = 0.95):
    """Sum shell contributions ordered toward the singular end, with a geometric remainder."""
    shells = np.abs(shells)
    total = float(np.sum(shells))
    last = shells[-6:]
    nz = last[:-1] > 0
    if not np.any(nz) or last[-1] == 0:
        return total, True, 0.0
    ratios = last[1:][nz] / last[:-1][nz]
    q = float(np.max(ratios))
    if q >= ratio_limit:
        return np.inf, False, q
    return total + shells[-1] * q / (1.0 - q), True, q


def check_gradient_condition(profile: RadialProfile, n_shells: int = 60) -> dict:
    """Evaluate the two integrals of the integrability condition on ``|grad g|``.

    ``inner = int_{B_1} |x| |grad g|`` and ``outer = int_{B_1^c} |grad g|``,
    each summed over dyadic shells.  A sum counts as convergent when the last
    shell contributions shrink geometrically; the geometric remainder is
    added.  Pure power ends are integrated in closed form.
    """
    d = profile.d
    area = 2.0 * np.pi ** (d / 2.0) / _gamma_half(d)
    diag: dict = {}

    def inner_f(rho):
        return area * rho**d * np.abs(profile.dg(rho))

    def outer_f(rho):
        return area * rho ** (d - 1) * np.abs(profile.dg(rho))

    inner_edges = 2.0 ** -np.arange(0, n_shells + 1, dtype=float)[::-1]
    inner_shells = _shell_integrals(inner_f, inner_edges)[::-1]
    inner, ok_in, q_in = _dyadic_sum(inner_shells)
    if profile.head is not None and ok_in:
        # analytic value for the part of the head inside the unit ball
        e = profile.head.exponent
        c = abs(profile.head.coef * e)
        top = min(1.0, profile.r_lo)
        k = d + e  # exponent of rho^d |g'| is d + e - 1
        if k > 0:
            shells_above = _shell_integrals(inner_f, np.array([top, 1.0])) if top < 1.0 else [0.0]
            inner = area * c * top**k / k + float(np.sum(shells_above))
        else:
            inner, ok_in = np.inf, False
    diag["inner_ratio"] = q_in

    outer_edges = 2.0 ** np.arange(0, n_shells + 1, dtype=float)
    outer_shells = _shell_integrals(outer_f, outer_edges)
    outer, ok_out, q_out = _dyadic_sum(outer_shells)
    if profile.tail is not None and ok_out:
        e = profile.tail.exponent
        c = abs(profile.tail.coef * e)
        start = max(1.0, profile.r_hi)
        k = d + e - 1  # rho^(d-1)|g'| ~ rho^(k-1)
        if k < 0:
            below = _shell_integrals(outer_f, np.array([1.0, start])) if start > 1.0 else [0.0]
            outer = float(np.sum(below)) + area * c * start**k / (-k)
        else:
            outer, ok_out = np.inf, False
    diag["outer_ratio"] = q_out
    passed = bool(ok_in and ok_out and np.isfinite(inner) and np.isfinite(outer))
    if not ok_out:
        diag["reason"] = f"outer shells do not shrink (ratio {q_out:.3f}): tail integral diverges"
    if not ok_in:
        diag["reason"] = f"inner shells do not shrink (ratio {q_in:.3f}): core integral diverges"
    return dict(inner_integral=inner, outer_integral=outer, passed=passed, diagnostics=diag)


def _gamma_half(d):
    from .constants import gamma

    return gamma(d / 2.0)


def check_monotone_convex(profile: RadialProfile, tol: float = 1e-9) -> bool:
    """True iff ``p`` is non-increasing and convex on the profile table.

    Differences are divided by the true (nonuniform) spacing and scaled by
    the local magnitude of ``p`` so that the tolerance is relative.
    """
    rho, g, _ = profile.table
    p = rho ** (profile.d - 1) * g
    # round-off floor: a compact tail may land a few ulps below zero, and
    # divided differences amplify that by 1/h and 1/h^2
    floor = max(64.0 * np.finfo(float).eps * float(np.max(np.abs(p))), 1e-300)
    h = np.diff(rho)
    d1 = np.diff(p) / h
    scale1 = np.maximum(np.abs(p[:-1]), np.abs(p[1:])) / rho[1:]
    if np.any(d1 > tol * scale1 + 2.0 * floor / h):
        return False
    hm = 0.5 * (h[1:] + h[:-1])
    d2 = np.diff(d1) / hm
    scale2 = np.abs(p[1:-1]) / rho[1:-1] ** 2
    return bool(np.all(d2 >= -tol * scale2 - 4.0 * floor / (h[1:] * h[:-1])))


def check_integrability(profile: RadialProfile) -> dict:
    """Report the split ``g = g 1_{B_1} + g 1_{B_1^c}`` into ``L^1`` and ``L^{d/(d-1)}`` parts."""
    d = profile.d
    q = d / (d - 1.0)
    area = 2.0 * np.pi ** (d / 2.0) / _gamma_half(d)
    inner_edges = 2.0 ** -np.arange(0, 61, dtype=float)[::-1]
    inner = _dyadic_sum(_shell_integrals(lambda x: area * x ** (d - 1) * np.abs(profile.g(x)),
                                         inner_edges)[::-1])
    outer_edges = 2.0 ** np.arange(0, 61, dtype=float)
    outer = _dyadic_sum(_shell_integrals(
        lambda x: area * x ** (d - 1) * np.abs(profile.g(x)) ** q, outer_edges))
    return dict(
        l1_near=inner[0],
        lq_far=outer[0] ** (1.0 / q) if np.isfinite(outer[0]) else np.inf,
        q=q,
        passed=bool(inner[1] and outer[1]),
    )

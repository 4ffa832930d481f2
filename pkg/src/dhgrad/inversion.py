"""Inversion kernel ``omega`` with ``omega * g = |x|**(gamma - d)`` and the field ``V``.

The symbol ``H = c_gamma / (xi**gamma g^)`` behaves like ``C_L xi**(alpha - gamma)``
at high frequency.  That power is inverted in closed form; the remainder
``D = H - C_L xi**(alpha - gamma)`` is integrable and is inverted by a
sine transform on Gauss-Legendre panels that resolve each oscillation.
Below the sampled band the spectrum is continued by its small-frequency
expansion ``B xi**-beta + e0 + e2 xi**2 + e4 xi**4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ._quadrature import gauss_legendre, graded_edges, panel_nodes
from .constants import c_alpha, sphere_area
from .kernels import KernelSpec, RadialProfile, make_kernel
from .radial_fourier import RadialSpectrum, check_positivity, radial_ft

__all__ = [
    "InversionRefused",
    "SpectralSymbol",
    "InversionKernel",
    "smooth_cutoff",
    "build_symbol",
    "invert_symbol",
    "inversion_spectrum",
    "construct_inversion",
    "verify_convolution_identity",
    "decay_regression",
]


class InversionRefused(ValueError):
    """The symbol cannot be formed or inverted (e.g. the transform is not positive)."""


def smooth_cutoff(xi, x0: float) -> np.ndarray:
    """C-infinity cutoff equal to 1 on ``xi <= x0`` and 0 on ``xi >= 2 x0``."""
    t = np.log2(np.asarray(xi, dtype=float) / x0)
    a = np.where(t < 1, np.exp(-1.0 / np.clip(1.0 - t, 1e-300, None)), 0.0)
    b = np.where(t > 0, np.exp(-1.0 / np.clip(t, 1e-300, None)), 0.0)
    a = np.where(t <= 0, 1.0, a)
    b = np.where(t >= 1, 1.0, b)
    return a / (a + b)


@dataclass(eq=False)
class SpectralSymbol:
    """Sampled ``H`` with its three-part split and the high-frequency leading term.

    ``H1 = H phi1``, ``H2 = H (1 - phi2)``, ``H3 = H (phi2 - phi1)`` where
    ``phi1`` drops from 1 to 0 on ``[xi1, 2 xi1]`` and ``phi2`` on
    ``[2 xi1, 4 xi1]``.
    """

    xi: np.ndarray
    H: np.ndarray
    gamma: float
    xi1: float
    alpha: float
    lead_coef: float
    spectrum: RadialSpectrum
    d: int = 3

    @property
    def phi1(self) -> np.ndarray:
        return smooth_cutoff(self.xi, self.xi1)

    @property
    def phi2(self) -> np.ndarray:
        return smooth_cutoff(self.xi, 2.0 * self.xi1)

    @property
    def H1(self) -> np.ndarray:
        return self.H * self.phi1

    @property
    def H2(self) -> np.ndarray:
        return self.H * (1.0 - self.phi2)

    @property
    def H3(self) -> np.ndarray:
        return self.H * (self.phi2 - self.phi1)

    @property
    def delta(self) -> float:
        """Decay exponent of the leading term, ``H ~ lead_coef * xi**-delta``."""
        return self.gamma - self.alpha

    def leading(self, xi) -> np.ndarray:
        return self.lead_coef * np.asarray(xi, dtype=float) ** (-self.delta)


def build_symbol(spectrum: RadialSpectrum, gamma: float = 2.0, xi1: Optional[float] = None,
                 d: int = 3) -> SpectralSymbol:
    """Form ``H = c_gamma / (xi**gamma g^)`` on the spectrum grid.

    Raises
    ------
    InversionRefused
        If the sampled transform is not positive or the exponents are out of range.
    """
    pos = check_positivity(spectrum, refine=False)
    if not pos["positive"]:
        raise InversionRefused(
            f"transform is not positive (min {pos['min_value']:.4g} at xi={pos['argmin']:.4g}); "
            "the symbol H is undefined"
        )
    if spectrum.tail is None:
        raise InversionRefused("spectrum has no high-frequency power tag")
    alpha = -spectrum.tail.power
    if not 0.0 < alpha < gamma < d:
        raise InversionRefused(f"need 0 < alpha < gamma < d, got alpha={alpha:g}, gamma={gamma:g}")
    if gamma == 2.0 and d < 3:
        raise InversionRefused("gamma = 2 requires d >= 3")
    if xi1 is None:
        prof = spectrum.profile
        xi1 = 1.0 / prof.r_hi if prof is not None and prof.r_hi > 0 else 1.0
    cg = c_alpha(d, gamma)
    H = cg / (spectrum.xi**gamma * spectrum.values)
    return SpectralSymbol(xi=spectrum.xi, H=H, gamma=gamma, xi1=xi1, alpha=alpha,
                          lead_coef=cg / spectrum.tail.coef, spectrum=spectrum, d=d)


@dataclass(eq=False)
class InversionKernel:
    """``omega``, ``omega'`` and ``|V| = -omega' / (sigma_d (d - 2))`` on a log grid in ``rho``.

    ``omega = omega_L + omega_D`` where ``omega_L`` is the closed-form
    inverse of the leading power.  Values off the grid are produced by
    :meth:`omega_at` and :meth:`V_at`.
    """

    rho: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    d: int
    lead: tuple  # (coefficient, exponent) of omega_L = coef * rho**(-exponent)
    omega_D: np.ndarray
    domega_D: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def V(self) -> np.ndarray:
        return -self.domega / (sphere_area(self.d) * (self.d - 2))

    def _lead(self, rho, nu=0):
        c, e = self.lead
        if nu == 0:
            return c * rho ** (-e)
        return -e * c * rho ** (-e - 1.0)

    def _outer_power(self, values):
        # power law through the last two decades' end points
        x = np.log(self.rho[-8:])
        y = np.log(np.abs(values[-8:]))
        slope, icpt = np.polyfit(x, y, 1)
        return slope, icpt, np.sign(values[-1])

    def omega_at(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.empty_like(rho)
        lo = rho < self.rho[0]
        hi = rho > self.rho[-1]
        mid = ~(lo | hi)
        spl = self.meta.get("_spl_omega_D")
        if spl is None:
            spl = CubicSpline(np.log(self.rho), self.omega_D)
            self.meta["_spl_omega_D"] = spl
        out[mid] = self._lead(rho[mid]) + spl(np.log(rho[mid]))
        # omega_D is bounded near 0: freeze it below the grid
        out[lo] = self._lead(rho[lo]) + self.omega_D[0]
        if np.any(hi):
            slope, icpt, sgn = self._outer_power(self.omega)
            out[hi] = sgn * np.exp(icpt) * rho[hi] ** slope
        return out

    def V_at(self, rho) -> np.ndarray:
        """``|V|`` at arbitrary radii: analytic lead plus splined remainder, power laws outside."""
        rho = np.asarray(rho, dtype=float)
        scale = -1.0 / (sphere_area(self.d) * (self.d - 2))
        out = np.empty_like(rho)
        lo = rho < self.rho[0]
        hi = rho > self.rho[-1]
        mid = ~(lo | hi)
        spl = self.meta.get("_spl_domega_D")
        if spl is None:
            spl = CubicSpline(np.log(self.rho), self.domega_D)
            self.meta["_spl_domega_D"] = spl
        out[mid] = scale * (self._lead(rho[mid], 1) + spl(np.log(rho[mid])))
        # omega_D' ~ O(rho) near the origin
        out[lo] = scale * (self._lead(rho[lo], 1) + self.domega_D[0] * rho[lo] / self.rho[0])
        if np.any(hi):
            slope, icpt, sgn = self._outer_power(self.V)
            out[hi] = sgn * np.exp(icpt) * rho[hi] ** slope
        return out

    def export(self, path) -> None:
        """Three columns: ``rho omega |V|``."""
        np.savetxt(path, np.column_stack([self.rho, self.omega, self.V]), header="rho omega V")


# ---------------------------------------------------------------- low-frequency model


def _low_model(spectrum: RadialSpectrum):
    """Coefficients of ``g^ ~ B xi^-beta + e0 + e2 xi^2 + e4 xi^4`` near the origin."""
    xi, v = spectrum.xi, spectrum.values
    sel = xi <= xi[0] * 10.0
    x = xi[sel]
    head = spectrum.head
    B, beta = 0.0, 0.0
    if head is not None and spectrum.head_kind in ("power", "finite"):
        B, beta = head.coef, -head.power
    resid = v[sel] - B * x ** (-beta)
    if spectrum.head_kind == "finite":
        e0 = head.offset
        A = np.column_stack([x**2, x**4])
        (e2, e4), *_ = np.linalg.lstsq(A, resid - e0, rcond=None)
    elif spectrum.head_kind == "power":
        A = np.column_stack([np.ones_like(x), x**2, x**4])
        (e0, e2, e4), *_ = np.linalg.lstsq(A, resid, rcond=None)
    else:
        raise InversionRefused(f"no low-frequency model for head kind {spectrum.head_kind!r}")
    return B, beta, e0, e2, e4


# ---------------------------------------------------------------- inversion


def _xi_edges(xi_lo: float, xi_hi: float, width: float, ratio: float = 1.15) -> np.ndarray:
    """Panel edges growing geometrically from ``xi_lo`` until their width hits ``width``."""
    edges = [xi_lo]
    x = xi_lo
    while x < xi_hi:
        step = min(x * (ratio - 1.0), width)
        x = min(x + step, xi_hi)
        edges.append(x)
    return np.array(edges)


def invert_symbol(symbol: SpectralSymbol, d: int = 3, rho: Optional[np.ndarray] = None,
                  order: int = 16, cut_tol: float = 1e-13, method: str = "subtract",
                  eps_list: tuple = (4e-4, 2e-4, 1e-4)) -> InversionKernel:
    """Inverse transform of ``H`` as described in the module docstring.

    Parameters
    ----------
    symbol : SpectralSymbol
    d : int
        Must be 3.
    rho : ndarray, optional
        Output radii; default 161 log-spaced points on ``[1e-2, 1e2]``.
    order : int
        Gauss-Legendre order per panel.
    cut_tol : float
        Frequencies beyond the first point where ``|log(g^ / lead)|`` stays
        below this value are dropped from the remainder integral.
    method : {"subtract", "mollified"}
        ``"mollified"`` inverts ``H exp(-eps xi^2)`` for each ``eps`` in
        ``eps_list`` and Richardson-extrapolates to ``eps = 0``; it serves as
        an independent cross-check.
    """
    if d != 3 or symbol.d != 3:
        raise NotImplementedError("inversion is implemented for d = 3")
    if rho is None:
        rho = np.geomspace(1e-2, 1e2, 161)
    rho = np.asarray(rho, dtype=float)
    spec = symbol.spectrum
    xi = symbol.xi
    delta = symbol.delta
    CL = symbol.lead_coef
    a_c = spec.tail.coef
    alpha = symbol.alpha
    cg = c_alpha(d, symbol.gamma)

    ell = np.log(spec.values * xi**alpha / a_c)
    ell_spline = CubicSpline(np.log(xi), ell)
    small = np.abs(ell) < cut_tol
    # first index after which ell stays small
    bad = np.nonzero(~small)[0]
    if bad.size == 0:
        xi_cut = xi[0]
    elif bad[-1] + 1 < xi.size:
        xi_cut = xi[bad[-1] + 1]
    else:
        xi_cut = xi[-1]
    truncation = float(abs(ell[-1])) if xi_cut == xi[-1] else 0.0

    B, beta, e0, e2, e4 = _low_model(spec)

    def ghat_low(x):
        return B * x ** (-beta) + e0 + e2 * x**2 + e4 * x**4

    def H_full(x):
        out = np.empty_like(x)
        lo = x < xi[0]
        mid = (~lo) & (x <= xi[-1])
        hi = x > xi[-1]
        out[lo] = cg / (x[lo] ** symbol.gamma * ghat_low(x[lo]))
        out[mid] = CL * x[mid] ** (-delta) * np.exp(-ell_spline(np.log(x[mid])))
        out[hi] = CL * x[hi] ** (-delta)
        return out

    def D_of(x):
        out = np.empty_like(x)
        lo = x < xi[0]
        mid = ~lo
        out[lo] = H_full(x[lo]) - CL * x[lo] ** (-delta)
        out[mid] = CL * x[mid] ** (-delta) * np.expm1(-ell_spline(np.log(x[mid])))
        return out

    two_pi = 2.0 * np.pi
    if method == "subtract":
        weight = D_of
        upper = xi_cut
    elif method == "mollified":
        weight = H_full
        upper = None
    else:
        raise ValueError("method must be 'subtract' or 'mollified'")

    def transform(weight_fn, upper_lim, rho_block, damp=None):
        rmax = float(np.max(rho_block))
        width = 1.0 / rmax
        low_edges = graded_edges(0.0, xi[0], ratio=0.5, floor=1e-16)
        edges = np.concatenate([low_edges[:-1], _xi_edges(xi[0], upper_lim, width)])
        x, w = panel_nodes(edges, order)
        f = weight_fn(x)
        if damp is not None:
            f = f * np.exp(-damp * x**2)
        S = np.empty(rho_block.size)
        dS = np.empty(rho_block.size)
        fx = w * f * x
        fxx = fx * x
        for i, r in enumerate(rho_block):
            arg = two_pi * r * x
            S[i] = np.sin(arg) @ fx
            dS[i] = np.cos(arg) @ fxx
        om = 2.0 * S / rho_block
        dom = -2.0 * S / rho_block**2 + (2.0 / rho_block) * two_pi * dS
        return om, dom

    omega_D = np.empty_like(rho)
    domega_D = np.empty_like(rho)
    # blocks of half a decade keep the panel width matched to the radius
    bounds = np.floor(2.0 * np.log10(rho)).astype(int)
    lead_exp = d - delta
    lead_c = CL / c_alpha(d, delta)
    for b in np.unique(bounds):
        sel = bounds == b
        if method == "subtract":
            omega_D[sel], domega_D[sel] = transform(weight, upper, rho[sel])
        else:
            vals = []
            for eps in eps_list:
                top = math.sqrt(40.0 / eps)
                om, dom = transform(weight, top, rho[sel], damp=eps)
                vals.append((om, dom))
            # linear Richardson on a geometric eps sequence with ratio 2
            (o1, d1), (o2, d2), (o3, d3) = vals[-3:]
            r1o, r1d = 2 * o2 - o1, 2 * d2 - d1
            r2o, r2d = 2 * o3 - o2, 2 * d3 - d2
            om = (4 * r2o - r1o) / 3.0
            dom = (4 * r2d - r1d) / 3.0
            omega_D[sel] = om - lead_c * rho[sel] ** (-lead_exp)
            domega_D[sel] = dom + lead_exp * lead_c * rho[sel] ** (-lead_exp - 1.0)

    omega = lead_c * rho ** (-lead_exp) + omega_D
    domega = -lead_exp * lead_c * rho ** (-lead_exp - 1.0) + domega_D
    meta = dict(xi_cut=float(xi_cut), truncation=truncation, low_model=(B, beta, e0, e2, e4),
                method=method, gamma=symbol.gamma, lead_coef=CL, delta=delta)
    return InversionKernel(rho=rho, omega=omega, domega=domega, d=d,
                           lead=(lead_c, lead_exp), omega_D=omega_D, domega_D=domega_D, meta=meta)


def inversion_spectrum(profile: RadialProfile, xi_min: float = 1e-6, xi_max: float = 1e3,
                       n: int = 3072) -> RadialSpectrum:
    """Transform on a band wide enough for ``rho`` up to ``1e2`` at 1e-4 accuracy."""
    return radial_ft(profile, xi_min=xi_min, xi_max=xi_max, n=n)


def construct_inversion(spec_or_profile, rho: Optional[np.ndarray] = None, gamma: float = 2.0,
                        method: str = "subtract") -> tuple[InversionKernel, SpectralSymbol]:
    """Kernel -> spectrum -> symbol -> inversion kernel in one call."""
    if isinstance(spec_or_profile, KernelSpec):
        profile = make_kernel(spec_or_profile)
    else:
        profile = spec_or_profile
    spectrum = inversion_spectrum(profile)
    symbol = build_symbol(spectrum, gamma=gamma)
    kernel = invert_symbol(symbol, rho=rho, method=method)
    kernel.meta["profile"] = profile
    kernel.meta["symbol"] = symbol
    return kernel, symbol


# ---------------------------------------------------------------- checks


def _radial_antiderivative(kernel: InversionKernel):
    """``F(t) = int_0^t tau omega(tau) dtau`` as a callable, exact head and power tail."""
    c, e = kernel.lead
    r0 = kernel.rho[0]
    nodes = np.geomspace(r0, kernel.rho[-1] * 1e3, 6000)
    x, w = panel_nodes(nodes, 8)
    vals = (w * x * kernel.omega_at(x)).reshape(-1, 8).sum(axis=1)
    # omega ~ c rho^-e + omega_D(r0) on (0, r0]
    F0 = c * r0 ** (2.0 - e) / (2.0 - e) + kernel.omega_D[0] * r0**2 / 2.0
    cum = np.concatenate([[F0], F0 + np.cumsum(vals)])
    logn = np.log(nodes)
    spl = CubicSpline(logn, cum)
    slope, icpt, sgn = kernel._outer_power(kernel.omega)

    def F(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t <= r0
        hi = t > nodes[-1]
        mid = ~(lo | hi)
        tl = t[lo]
        out[lo] = c * tl ** (2.0 - e) / (2.0 - e) + kernel.omega_D[0] * tl**2 / 2.0
        out[mid] = spl(np.log(t[mid]))
        if np.any(hi):
            k = slope + 2.0
            coef = sgn * np.exp(icpt)
            out[hi] = cum[-1] + coef * (t[hi] ** k - nodes[-1] ** k) / k
        return out

    return F


def verify_convolution_identity(kernel: InversionKernel, profile: RadialProfile,
                                probes=(0.5, 1.0, 2.0, 5.0), gamma: float = 2.0) -> dict:
    """Real-space check of ``omega * g = rho**(gamma - d)`` at a few radii.

    Uses the radial reduction
    ``(f*h)(rho) = (2 pi / rho) int sigma f(sigma) [F_h(rho+sigma) - F_h(|rho-sigma|)] dsigma``
    with ``f = g`` and ``h = omega``.
    """
    d = kernel.d
    F = _radial_antiderivative(kernel)
    rows = []
    for r in probes:
        # graded panels toward 0 and toward sigma = r
        breaks = [0.0, r, profile.r_lo, profile.r_hi, 2 * r, 10 * r]
        breaks = sorted({b for b in breaks if b >= 0})
        edges = [np.array([0.0])]
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi <= lo:
                continue
            sing_lo = lo == 0.0 or abs(lo - r) < 1e-12
            sing_hi = abs(hi - r) < 1e-12
            mid = 0.5 * (lo + hi)
            left = graded_edges(lo, mid, ratio=0.5, floor=1e-13) if sing_lo else np.linspace(lo, mid, 9)
            right = (hi - graded_edges(0.0, hi - mid, ratio=0.5, floor=1e-13)[::-1]
                     if sing_hi else np.linspace(mid, hi, 9))
            edges.append(left[1:])
            edges.append(right[1:])
        top = breaks[-1]
        sigma_max = max(top, 1e3 * r)
        edges.append(np.geomspace(top, sigma_max, 400)[1:])
        e = np.concatenate(edges)
        x, w = panel_nodes(e, 16)
        f = x * profile.g(x) * (F(r + x) - F(np.abs(r - x)))
        val = np.sum(w * f)
        tail = 0.0
        if profile.tail is not None:
            # sigma >> rho: F(r+s) - F(s-r) ~ 2 r s omega(s), omega ~ power
            slope, icpt, sgn = kernel._outer_power(kernel.omega)
            ce, ee = profile.tail.coef, profile.tail.exponent
            k = 2.0 + ee + slope
            tail = 2.0 * r * ce * sgn * np.exp(icpt) * sigma_max ** (k + 1.0) / (-(k + 1.0))
        conv = 2.0 * np.pi / r * (val + tail)
        target = r ** (gamma - d)
        rows.append(dict(rho=r, value=float(conv), target=target,
                         deviation=float(abs(conv / target - 1.0))))
    spec_ident = None
    sym = kernel.meta.get("symbol")
    if sym is not None:
        spec_ident = float(np.max(np.abs(sym.H * sym.xi**2 * sym.spectrum.values / c_alpha(d, gamma) - 1)))
    return dict(probes=rows, max_deviation=max(r["deviation"] for r in rows),
                spectral_identity=spec_ident)


def decay_regression(kernel: InversionKernel, inner=(1e-2, 3e-1), outer=(3.0, 1e2),
                     r2_min: float = 0.99) -> dict:
    """Least-squares slopes of ``log |V|`` against ``log rho`` on two windows."""
    out = {}
    V = np.abs(kernel.V)
    for name, (lo, hi) in (("inner", inner), ("outer", outer)):
        sel = (kernel.rho >= lo * (1 - 1e-12)) & (kernel.rho <= hi * (1 + 1e-12))
        x = np.log(kernel.rho[sel])
        y = np.log(V[sel])
        slope, icpt = np.polyfit(x, y, 1)
        pred = slope * x + icpt
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        out[f"{name}_slope"] = float(slope)
        out[f"{name}_r2"] = r2
    out["r2"] = min(out["inner_r2"], out["outer_r2"])
    out["reliable"] = out["r2"] >= r2_min
    return out

"""Periodic-grid fields in three dimensions and the nonlocal gradient acting on them.

The box ``[-L/2, L/2)^3`` with ``N`` points per axis stands in for R^3; test
functions are expected to decay to round-off before the boundary.  Two
independent routes evaluate the gradient: a Fourier multiplier built
from the sampled transform of ``g``, and a singular quadrature of the
defining integral using an analytic ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._quadrature import gauss_legendre, graded_edges, panel_nodes
from .constants import sphere_area
from .kernels import KernelSpec, RadialProfile, make_kernel
from .radial_fourier import RadialSpectrum, radial_ft

__all__ = [
    "Grid3",
    "ScalarField",
    "VectorField",
    "gaussian_field",
    "nonlocal_gradient_spectral",
    "nonlocal_gradient_direct",
    "curl_residual",
    "divergence",
    "reconstruct",
    "reconstruct_realspace",
    "limit_s_to_1",
    "radial_nonlocal_gradient",
    "write_snapshot",
    "read_snapshot",
    "write_axis_probes",
]


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid with ``N`` points per axis on a box of edge ``L``."""

    N: int = 64
    L: float = 16.0

    def __post_init__(self):
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def axis(self) -> np.ndarray:
        return -0.5 * self.L + self.h * np.arange(self.N)

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = self.axis
        return np.meshgrid(a, a, a, indexing="ij")

    @property
    def freq(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=self.h)

    def wavevectors(self, zero_nyquist: bool = True) -> tuple[np.ndarray, ...]:
        """Frequency components (cycles per unit length) broadcast to the grid.

        With ``zero_nyquist`` the unpaired Nyquist entry is set to zero so
        that derivative symbols map real fields to real fields.
        """
        f = self.freq.copy()
        if zero_nyquist:
            f[self.N // 2] = 0.0
        return (f[:, None, None], f[None, :, None], f[None, None, :])

    def xi_norm(self) -> np.ndarray:
        f = self.freq
        return np.sqrt(f[:, None, None] ** 2 + f[None, :, None] ** 2 + f[None, None, :] ** 2)

    @property
    def cell_volume(self) -> float:
        return self.h**3


@dataclass(eq=False)
class ScalarField:
    """Samples of a real function on a grid, optionally with its analytic formula.

    ``func(x, y, z)`` and ``grad(x, y, z)`` (returning a 3-tuple) enable the
    direct quadrature route; ``support`` is a radius beyond which the
    function is negligible.
    """

    grid: Grid3
    values: np.ndarray
    func: Optional[Callable] = None
    grad: Optional[Callable] = None
    support: Optional[float] = None
    center: tuple = (0.0, 0.0, 0.0)

    def fft(self) -> np.ndarray:
        return np.fft.fftn(self.values)

    @classmethod
    def from_function(cls, grid: Grid3, func, **kw) -> "ScalarField":
        X, Y, Z = grid.coords()
        return cls(grid=grid, values=func(X, Y, Z), func=func, **kw)

    def boundary_ratio(self) -> float:
        v = np.abs(self.values)
        edge = max(v[0].max(), v[:, 0].max(), v[:, :, 0].max())
        return float(edge / v.max()) if v.max() > 0 else 0.0

    def gradient(self) -> "VectorField":
        """Spectral gradient."""
        uh = self.fft()
        out = [np.fft.ifftn(2j * np.pi * k * uh).real for k in self.grid.wavevectors()]
        return VectorField(self.grid, np.stack(out))


@dataclass(eq=False)
class VectorField:
    """Three-component field on a grid; ``values`` has shape ``(3, N, N, N)``."""

    grid: Grid3
    values: np.ndarray

    def fft(self) -> np.ndarray:
        return np.fft.fftn(self.values, axes=(1, 2, 3))

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(self.grid, self.values * c)

    __rmul__ = __mul__


def gaussian_field(grid: Grid3, width: float = 1.0, center=(0.0, 0.0, 0.0),
                   amplitude: float = 1.0) -> ScalarField:
    """``amplitude * exp(-|x - c|^2 / (2 width^2))`` with analytic value and gradient."""
    cx, cy, cz = center

    def f(x, y, z):
        return amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2) / (2 * width**2))

    def df(x, y, z):
        v = f(x, y, z) / width**2
        return (-(x - cx) * v, -(y - cy) * v, -(z - cz) * v)

    return ScalarField.from_function(grid, f, grad=df, support=width * 9.0, center=tuple(center))


def _ghat_on_grid(grid: Grid3, spectrum: RadialSpectrum) -> np.ndarray:
    k = grid.xi_norm()
    kmin = 1.0 / grid.L
    kmax = np.sqrt(3.0) * grid.N / (2.0 * grid.L)
    if spectrum.xi[0] > kmin * (1 + 1e-12) or spectrum.xi[-1] < kmax * (1 - 1e-12):
        raise ValueError(
            f"spectrum covers [{spectrum.xi[0]:g}, {spectrum.xi[-1]:g}] but the grid needs "
            f"[{kmin:g}, {kmax:g}]"
        )
    out = np.zeros_like(k)
    nz = k > 0
    out[nz] = spectrum(k[nz])
    return out


def nonlocal_gradient_spectral(u: ScalarField, spectrum: RadialSpectrum,
                               check_decay: bool = True) -> VectorField:
    """``G u`` via the multiplier ``g^(|xi|) 2 pi i xi``; the zero mode is dropped.

    Raises
    ------
    ValueError
        If the spectrum does not cover the grid frequencies, or (with
        ``check_decay``) ``u`` is not negligible on the box boundary.
    """
    if check_decay and u.boundary_ratio() > 1e-10:
        raise ValueError(
            f"u is not negligible at the box boundary (ratio {u.boundary_ratio():.2e} > 1e-10); "
            "enlarge L"
        )
    grid = u.grid
    gh = _ghat_on_grid(grid, spectrum)
    uh = u.fft() * gh
    comps = [np.fft.ifftn(2j * np.pi * k * uh).real for k in grid.wavevectors()]
    return VectorField(grid, np.stack(comps))


def divergence(F: VectorField) -> np.ndarray:
    Fh = F.fft()
    ks = F.grid.wavevectors()
    return np.fft.ifftn(sum(2j * np.pi * k * Fh[i] for i, k in enumerate(ks))).real


def curl_residual(F: VectorField) -> float:
    """``max_{l<j} ||d_l F_j - d_j F_l||_2 / ||F||_2`` by spectral differentiation."""
    Fh = F.fft()
    ks = F.grid.wavevectors()
    nF = np.sqrt(np.sum(F.values**2))
    worst = 0.0
    for l in range(3):
        for j in range(l + 1, 3):
            diff = np.fft.ifftn(2j * np.pi * (ks[l] * Fh[j] - ks[j] * Fh[l])).real
            worst = max(worst, float(np.sqrt(np.sum(diff**2)) / nF))
    return worst


def reconstruct(Gu: VectorField, spectrum: RadialSpectrum, mean_u: float) -> ScalarField:
    """Recover ``u`` from ``G u``: ``u^ = sum_j (G u)^_j (-i xi_j) / (2 pi |xi|^2 g^)``.

    The zero mode carries no information on the torus and is set from ``mean_u``.
    """
    grid = Gu.grid
    gh = _ghat_on_grid(grid, spectrum)
    ks = grid.wavevectors()
    k2 = sum(k**2 for k in ks) * np.ones_like(gh)
    if np.any(gh[k2 > 0] <= 0):
        raise ValueError("transform is not positive at a needed frequency")
    Fh = Gu.fft()
    num = sum(Fh[i] * (-1j) * k for i, k in enumerate(ks))
    uh = np.zeros_like(num)
    ok = k2 > 0
    uh[ok] = num[ok] / (2.0 * np.pi * k2[ok] * gh[ok])
    uh[0, 0, 0] = mean_u * grid.N**3
    return ScalarField(grid, np.fft.ifftn(uh).real)


# ---------------------------------------------------------------- real-space route


def _cell_average_V(Vfun, centers, h, order=6):
    """Average of the radial field ``V(|y|) y/|y|`` over cubes of side ``h``."""
    x, w = gauss_legendre(order)
    t = (x - 0.5) * h
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    out = np.zeros((len(centers), 3))
    for n, c in enumerate(centers):
        X = c[0] + t[:, None, None]
        Y = c[1] + t[None, :, None]
        Z = c[2] + t[None, None, :]
        R = np.sqrt(X**2 + Y**2 + Z**2)
        mag = Vfun(R.ravel()).reshape(R.shape) / R
        out[n] = [np.sum(W * mag * X), np.sum(W * mag * Y), np.sum(W * mag * Z)]
    return out


def _origin_moment(Vfun, h, n_ang=24, n_rad=24):
    """``(1/3) int_{cell} |V|(rho) rho dy`` over the cube centred at the origin."""
    ct, wt = gauss_legendre(n_ang)
    ct = 2 * ct - 1
    wt = 2 * wt
    ph = (np.arange(2 * n_ang) + 0.5) * np.pi / n_ang
    wp = np.pi / n_ang
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)), np.outer(ct, np.ones_like(ph))])
    # distance to the cube face along each direction
    rmax = (h / 2) / np.max(np.abs(dirs), axis=0)
    edges = graded_edges(0.0, 1.0, ratio=0.5, floor=1e-12)
    x, w = panel_nodes(edges, n_rad)
    total = 0.0
    for i in range(n_ang):
        for j in range(2 * n_ang):
            r = rmax[i, j] * x
            total += wt[i] * wp * rmax[i, j] * np.sum(w * Vfun(r) * r**3)
    return total / 3.0


def reconstruct_realspace(Gu: VectorField, Vfun: Callable, near: int = 2) -> ScalarField:
    """``u = V * G u`` by linear convolution on a zero-padded grid.

    ``Vfun(rho)`` returns the magnitude of ``V``.  Cells within ``near``
    grid steps of the origin use cell averages of ``V``; the origin cell
    contributes through its first moment against ``div G u``.
    """
    grid = Gu.grid
    N, h = grid.N, grid.h
    M = 2 * N
    idx = np.fft.fftfreq(M, d=1.0 / M)  # minimum image offsets in cells
    off = idx * h
    X, Y, Z = np.meshgrid(off, off, off, indexing="ij")
    R = np.sqrt(X**2 + Y**2 + Z**2)
    R0 = np.where(R > 0, R, 1.0)
    mag = np.where(R > 0, Vfun(R0.ravel()).reshape(R.shape) / R0, 0.0)
    comps = [mag * X, mag * Y, mag * Z]
    near_idx = [(i, j, k) for i in range(-near, near + 1) for j in range(-near, near + 1)
                for k in range(-near, near + 1) if (i, j, k) != (0, 0, 0)]
    avg = _cell_average_V(Vfun, [np.array(t) * h for t in near_idx], h)
    for (i, j, k), v in zip(near_idx, avg):
        for c in range(3):
            comps[c][i % M, j % M, k % M] = v[c]
    acc = np.zeros((M, M, M), dtype=complex)
    for c in range(3):
        pad = np.zeros((M, M, M))
        pad[:N, :N, :N] = Gu.values[c]
        acc += np.fft.fftn(comps[c]) * np.fft.fftn(pad)
    u = np.fft.ifftn(acc).real[:N, :N, :N] * h**3
    moment = _origin_moment(Vfun, h)
    u -= moment * divergence(Gu)
    return ScalarField(grid, u)


# ---------------------------------------------------------------- direct quadrature


def _sphere_rule(n):
    ct, wt = gauss_legendre(n)
    ct = 2 * ct - 1
    wt = 2 * wt
    nphi = 2 * n
    ph = (np.arange(nphi) + 0.5) * 2 * np.pi / nphi
    st = np.sqrt(1 - ct**2)
    dirs = np.stack([np.outer(st, np.cos(ph)).ravel(), np.outer(st, np.sin(ph)).ravel(),
                     np.outer(ct, np.ones(nphi)).ravel()])
    w = np.outer(wt, np.full(nphi, 2 * np.pi / nphi)).ravel()
    return dirs, w


def _core_bound(profile: RadialProfile, h: float, grad_max: float) -> float:
    # grad_max * int_{|z|<h} |z| |grad g|
    d = profile.d
    area = sphere_area(d)
    if profile.head is not None and h <= profile.r_lo:
        e = profile.head.exponent
        c = abs(profile.head.coef * e)
        k = d + e
        return grad_max * area * c * h**k / k
    x, w = panel_nodes(graded_edges(0.0, h, 0.5, 1e-14), 16)
    return grad_max * area * float(np.sum(w * x**d * np.abs(profile.dg(x))))


def nonlocal_gradient_direct(u: ScalarField, profile: RadialProfile, points: Sequence,
                             rel_core: float = 1e-6, ang_base: int = 10,
                             ang_per_unit: float = 6.0, ang_tol: float = 1e-6,
                             max_doublings: int = 4) -> np.ndarray:
    """Singular quadrature of ``G u(x) = -int (u(x) - u(y)) grad g(x - y) dy``.

    The integral is symmetrised to
    ``(1/2) int (u(x+z) - u(x-z)) |g'(|z|)| z/|z| dz`` and evaluated in
    spherical coordinates: Gauss-Legendre in ``log |z|`` near the origin and
    in ``|z|`` further out, with an angular product rule whose order grows
    with the radius.  The ball ``|z| < h_cut`` is omitted, with ``h_cut``
    chosen so that the omitted-core bound stays below ``rel_core`` times
    the result.  The angular order is doubled until successive results
    agree to ``ang_tol`` (relative).

    Raises
    ------
    ValueError
        If ``u`` has no analytic formula, or the core bound cannot be met.
    """
    if u.func is None:
        raise ValueError("direct quadrature needs the analytic formula of u")
    grad_max = float(np.max(u.gradient().norm()))
    support = u.support if u.support is not None else 0.5 * u.grid.L
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros_like(pts)
    for n, x0 in enumerate(pts):
        rmax = np.linalg.norm(x0 - np.asarray(u.center)) + support
        h_cut = 1e-3
        result = None
        for _ in range(12):
            val = _direct_adaptive(u.func, profile, x0, h_cut, rmax, ang_base, ang_per_unit,
                                   ang_tol, max_doublings)
            bound = _core_bound(profile, h_cut, grad_max)
            mag = np.linalg.norm(val)
            if bound <= rel_core * mag:
                result = val
                break
            h_cut *= 1e-2
        if result is None:
            raise ValueError(
                f"omitted-core bound {bound:.3e} exceeds {rel_core:g} x |result| at x={x0}; "
                "the kernel is too singular for this tolerance"
            )
        out[n] = result
    return out


def _direct_adaptive(func, profile, x0, h_cut, rmax, base, per_unit, tol, max_doublings):
    val = _direct_one(func, profile, x0, h_cut, rmax, base, per_unit)
    for _ in range(max_doublings):
        base, per_unit = 2 * base, 2 * per_unit
        new = _direct_one(func, profile, x0, h_cut, rmax, base, per_unit)
        change = np.linalg.norm(new - val)
        val = new
        if change <= tol * np.linalg.norm(val):
            break
    return val


def _direct_one(func, profile, x0, h_cut, rmax, ang_base, ang_per_unit):
    breaks = [profile.r_lo, profile.r_hi]
    pieces = profile.meta.get("p_middle")
    if pieces is not None:
        breaks += list(pieces.edges)
    breaks = sorted({b for b in breaks if h_cut < b < rmax})
    # log-graded panels up to min(1, first break), then panels of width <= 0.25
    top_log = min(1.0, breaks[0]) if breaks else min(1.0, rmax)
    log_edges = np.geomspace(h_cut, top_log, max(2, int(np.ceil(np.log10(top_log / h_cut) * 2)) + 1))
    lin_breaks = sorted({top_log, rmax, *[b for b in breaks if b > top_log]})
    lin_edges = [np.array([top_log])]
    for a, b in zip(lin_breaks[:-1], lin_breaks[1:]):
        m = max(1, int(np.ceil((b - a) / 0.25)))
        lin_edges.append(np.linspace(a, b, m + 1)[1:])
    edges = np.concatenate([log_edges[:-1], np.concatenate(lin_edges)])
    rho, w = panel_nodes(edges, 12)
    weight = w * rho**2 * np.abs(profile.dg(rho))
    total = np.zeros(3)
    # group radii by angular order
    orders = (ang_base + np.ceil(ang_per_unit * rho)).astype(int)
    orders = 2 * ((orders + 1) // 2)
    for n in np.unique(orders):
        sel = orders == n
        dirs, aw = _sphere_rule(int(n))
        r = rho[sel]
        px = x0[:, None, None] + r[None, :, None] * dirs[:, None, :]
        mx = x0[:, None, None] - r[None, :, None] * dirs[:, None, :]
        diff = 0.5 * (func(*px) - func(*mx))  # (n_r, n_dir)
        ang = np.einsum("rd,d,cd->rc", diff, aw, dirs)
        total += weight[sel] @ ang
    return total


# ---------------------------------------------------------------- limit s -> 1


def limit_s_to_1(u: ScalarField, s_list=(0.9, 0.95, 0.99), xi_range=(1e-3, 1e3)) -> list[dict]:
    """Distance between ``(1-s) grad^s u`` and ``(sigma_d/d) grad u`` for Riesz kernels.

    ``grad^s u = G u / (d - 1 + s)`` for ``g = |x|^-(d-1+s)``.
    """
    d = 3
    grad = u.gradient()
    gmax = float(np.max(grad.norm()))
    target = grad * (sphere_area(d) / d)
    rows = []
    for s in s_list:
        prof = make_kernel(KernelSpec(family="riesz", s=s))
        spec = radial_ft(prof, xi_min=xi_range[0], xi_max=xi_range[1], n=512)
        Gu = nonlocal_gradient_spectral(u, spec)
        frac = Gu * ((1.0 - s) / (d - 1 + s))
        dist = float(np.max((frac - target).norm()) / gmax)
        rows.append(dict(s=s, distance=dist))
    return rows


# ---------------------------------------------------------------- radial route


def radial_nonlocal_gradient(u_hat: Callable, g_hat: Callable, rho: np.ndarray,
                             xi_max: float, order: int = 16, chunk: int = 64) -> np.ndarray:
    """Radial component ``f`` of ``G u = f(rho) x/|x|`` for a radial ``u`` in R^3.

    ``G u = grad (g * u)`` and ``g * u`` is the inverse radial transform of
    ``g^ u^``; the derivative is taken under the integral.  ``u_hat`` and
    ``g_hat`` are callables of ``xi``; ``g^ u^`` must be negligible
    beyond ``xi_max``.  One Gauss-Legendre node set, with panels no wider
    than ``1/max(rho)`` and graded toward ``xi = 0``, serves every radius.
    """
    rho = np.asarray(rho, dtype=float)
    width = min(0.5, 1.0 / float(np.max(rho)), xi_max)
    lo = graded_edges(0.0, width, ratio=0.5, floor=1e-14)
    m = max(1, int(np.ceil((xi_max - width) / width)))
    edges = np.concatenate([lo, np.linspace(width, xi_max, m + 1)[1:]])
    x, w = panel_nodes(edges, order)
    f = w * g_hat(x) * u_hat(x) * x
    fx = f * x
    two_pi = 2.0 * np.pi
    out = np.empty_like(rho)
    for start in range(0, rho.size, chunk):
        r = rho[start:start + chunk]
        arg = two_pi * np.outer(r, x)
        S = np.sin(arg) @ f
        C = np.cos(arg) @ fx
        out[start:start + chunk] = -2.0 * S / r**2 + (2.0 / r) * two_pi * C
    return out


# ---------------------------------------------------------------- snapshots


def write_snapshot(path, field_values: np.ndarray, grid: Grid3) -> None:
    """Flat binary snapshot: int64 N, float64 L, int64 ncomp, then float64 values (C order)."""
    vals = np.asarray(field_values, dtype=np.float64)
    ncomp = 1 if vals.ndim == 3 else vals.shape[0]
    with open(path, "wb") as fh:
        np.array([grid.N], dtype=np.int64).tofile(fh)
        np.array([grid.L], dtype=np.float64).tofile(fh)
        np.array([ncomp], dtype=np.int64).tofile(fh)
        np.ascontiguousarray(vals).tofile(fh)


def read_snapshot(path) -> tuple[Grid3, np.ndarray]:
    with open(path, "rb") as fh:
        N = int(np.fromfile(fh, dtype=np.int64, count=1)[0])
        L = float(np.fromfile(fh, dtype=np.float64, count=1)[0])
        ncomp = int(np.fromfile(fh, dtype=np.int64, count=1)[0])
        vals = np.fromfile(fh, dtype=np.float64)
    shape = (N, N, N) if ncomp == 1 else (ncomp, N, N, N)
    return Grid3(N, L), vals.reshape(shape)


def write_axis_probes(path, grid: Grid3, field_values: np.ndarray) -> None:
    """CSV of the field along the three coordinate axes through the box centre."""
    vals = np.asarray(field_values)
    if vals.ndim == 3:
        vals = vals[None]
    c = grid.N // 2
    a = grid.axis
    cols = ["axis", "coord"] + [f"c{i}" for i in range(vals.shape[0])]
    lines = [",".join(cols)]
    for ax in range(3):
        for i in range(grid.N):
            idx = [c, c, c]
            idx[ax] = i
            comps = ",".join(f"{vals[k][tuple(idx)]:.17g}" for k in range(vals.shape[0]))
            lines.append(f"{'xyz'[ax]},{a[i]:.17g},{comps}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

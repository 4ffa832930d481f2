"""Quadrature building blocks shared by the transform and inversion code.

The workhorse is :func:`power_sine`, which integrates ``rho**mu sin(k rho)``
over ``(0, r]`` or ``[r, inf)`` to near machine precision for a whole array
of wavenumbers at once.  Small ``k r`` uses the Taylor series; large ``k r``
rotates the tail integral onto the imaginary axis, where it becomes a
non-oscillatory Laplace integral handled by Gauss-Laguerre.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .constants import gamma

SERIES_SWITCH = 4.0
_LAGUERRE_NODES = 60
_SERIES_TERMS = 40


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_laguerre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.laguerre.laggauss(n)


def panel_nodes(edges: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    h = np.diff(edges)
    nodes = edges[:-1, None] + h[:, None] * x[None, :]
    weights = h[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_edges(a: float, b: float, ratio: float = 0.5, floor: float = 1e-14) -> np.ndarray:
    """Panel edges on ``[a, b]`` refined geometrically toward ``a``.

    Useful for integrands with an algebraic endpoint singularity at ``a``.
    """
    width = b - a
    edges = [b]
    h = width
    while h > floor * max(width, 1.0):
        h *= ratio
        edges.append(a + h)
    edges.append(a)
    return np.array(edges[::-1])


def gamma_sin(z: float) -> float:
    """``Gamma(z) sin(pi z / 2)``, continued through the removable poles at ``z = -2m``."""
    if z > 0:
        return gamma(z) * np.sin(0.5 * np.pi * z)
    c = np.cos(0.5 * np.pi * z)
    if abs(c) < 1e-15:
        raise ValueError(f"Gamma(z) sin(pi z/2) is singular at z={z:g}")
    return np.pi / (2.0 * gamma(1.0 - z) * c)


def sine_moment_infinite(mu: float, k: np.ndarray) -> np.ndarray:
    """Continued value of ``int_0^inf rho^mu sin(k rho) drho``.

    Classical for ``-2 < mu < 0``; elsewhere this is the analytic
    continuation in ``mu``, which is what the finite-part splittings need.
    """
    return gamma_sin(mu + 1.0) * np.asarray(k, dtype=float) ** (-mu - 1.0)


def _series_head(mu: float, k: np.ndarray, r: float) -> np.ndarray:
    # sum_n (-1)^n k^(2n+1) r^(mu+2n+2) / ((2n+1)! (mu+2n+2))
    x = k * r
    term = x.copy()  # x^(2n+1)/(2n+1)!
    total = np.zeros_like(x)
    for n in range(_SERIES_TERMS):
        denom = mu + 2 * n + 2
        if denom == 0:
            raise ValueError(f"exponent mu={mu:g} hits the logarithmic case")
        total += term / denom
        term = -term * x * x / ((2 * n + 2) * (2 * n + 3))
    return total * r ** (mu + 1.0)


def _contour_tail(mu: float, k: np.ndarray, r: float) -> np.ndarray:
    # int_r^inf rho^mu e^{i k rho}; rotated to rho = r + i y / k
    y, w = gauss_laguerre(_LAGUERRE_NODES)
    z = (r + 1j * y[None, :] / k[:, None]) ** mu
    return np.exp(1j * k * r) * (1j / k) * (z @ w)


def power_sine(mu: float, k, r: float, part: str = "head") -> np.ndarray:
    """Integral of ``rho**mu * sin(k rho)`` over ``(0, r]`` or ``[r, inf)``.

    Parameters
    ----------
    mu : float
        Power.  The head needs ``mu > -2``; the tail needs ``mu < 0``.
        Outside those ranges the finite-part continuation is returned.
    k : array_like
        Positive wavenumbers.
    r : float
        Split point.
    part : {"head", "tail"}

    Returns
    -------
    ndarray
        One value per wavenumber, accurate to roughly 1e-13 relative.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty_like(k)
    small = k * r <= SERIES_SWITCH
    big = ~small
    if part == "head":
        if np.any(small):
            out[small] = _series_head(mu, k[small], r)
        if np.any(big):
            kb = k[big]
            out[big] = sine_moment_infinite(mu, kb) - _contour_tail(mu, kb, r).imag
    elif part == "tail":
        if np.any(small):
            ks = k[small]
            out[small] = sine_moment_infinite(mu, ks) - _series_head(mu, ks, r)
        if np.any(big):
            out[big] = _contour_tail(mu, k[big], r).imag
    else:
        raise ValueError("part must be 'head' or 'tail'")
    return out


def power_cosine(mu: float, k, r: float, part: str = "head") -> np.ndarray:
    """Cosine analogue of :func:`power_sine`; the head needs ``mu > -1``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty_like(k)
    small = k * r <= SERIES_SWITCH
    big = ~small

    def head_series(kk):
        x = kk * r
        term = np.ones_like(x)
        total = np.zeros_like(x)
        for n in range(_SERIES_TERMS):
            denom = mu + 2 * n + 1
            if denom == 0:
                raise ValueError(f"exponent mu={mu:g} hits the logarithmic case")
            total += term / denom
            term = -term * x * x / ((2 * n + 1) * (2 * n + 2))
        return total * r ** (mu + 1.0)

    def infinite(kk):
        # int_0^inf rho^mu cos(k rho) = Gamma(mu+1) cos(pi(mu+1)/2) k^(-mu-1)
        z = mu + 1.0
        if z > 0:
            val = gamma(z) * np.cos(0.5 * np.pi * z)
        else:
            val = np.pi / (2.0 * gamma(1.0 - z) * np.sin(0.5 * np.pi * z))
        return val * kk ** (-z)

    if part == "head":
        if np.any(small):
            out[small] = head_series(k[small])
        if np.any(big):
            kb = k[big]
            out[big] = infinite(kb) - _contour_tail(mu, kb, r).real
    elif part == "tail":
        if np.any(small):
            ks = k[small]
            out[small] = infinite(ks) - head_series(ks)
        if np.any(big):
            out[big] = _contour_tail(mu, k[big], r).real
    else:
        raise ValueError("part must be 'head' or 'tail'")
    return out


def euler_sum(terms: np.ndarray) -> float:
    """Sum an alternating series by Euler / van Wijngaarden repeated averaging.

    ``terms`` are the successive signed contributions.  The partial sums are
    averaged pairwise until one value is left.
    """
    partial = np.cumsum(np.asarray(terms, dtype=float))
    while partial.size > 1:
        partial = 0.5 * (partial[1:] + partial[:-1])
    return float(partial[0])


def oscillatory_tail(f, a: float, k: float, n_half: int = 40, order: int = 16,
                     tol: float = 1e-10) -> tuple[float, float]:
    """``int_a^inf f(rho) sin(k rho) drho`` by integrating between zeros of the sine.

    Each half period contributes one term of an alternating series, which is
    then summed with :func:`euler_sum`.  Returns ``(value, error_estimate)``;
    the estimate compares the accelerated sums with ``n_half`` and
    ``n_half - 4`` terms.
    """
    x, w = gauss_legendre(order)
    first = np.ceil(a * k / np.pi) * np.pi / k
    if first <= a:
        first += np.pi / k
    head = 0.0
    if first > a:
        t = a + (first - a) * x
        head = (first - a) * np.sum(w * f(t) * np.sin(k * t))
    starts = first + np.arange(n_half) * np.pi / k
    t = starts[:, None] + (np.pi / k) * x[None, :]
    terms = (np.pi / k) * (f(t) * np.sin(k * t)) @ w
    full = euler_sum(terms)
    short = euler_sum(terms[:-4])
    err = abs(full - short)
    return head + full, err

"""Closed-form special-function constants.

Everything here is a pure function of real scalars: the gamma function,
sphere areas, the Fourier coefficient of a homogeneous radial power, the
coefficients of the logarithmic case, and the Riesz representation constant.
"""

from __future__ import annotations

import math

__all__ = [
    "gamma",
    "sphere_area",
    "c_alpha",
    "log_coeffs",
    "K_sd",
    "riesz_A",
]

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _sinpi(x: float) -> float:
    # sin(pi x) with exact reduction, accurate next to the integers
    n = round(x)
    r = x - n
    val = math.sin(math.pi * r)
    return -val if n % 2 else val


def _gamma_lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def gamma(x: float) -> float:
    """Gamma function for real arguments.

    Uses the Lanczos approximation on ``x >= 1/2`` and the reflection
    formula below that.  Large positive arguments are shifted down with the
    recurrence so that the power ``t**(x+1/2)`` does not lose accuracy.

    Raises
    ------
    ValueError
        If ``x`` is zero or a negative integer.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("gamma of NaN")
    if _is_nonpositive_integer(x):
        raise ValueError(f"gamma has a pole at x={x:g}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (_sinpi(x) * gamma(1.0 - x))
    if float(x).is_integer() and x <= 171:
        return float(math.factorial(int(x) - 1))
    if x > 20.0:
        # exp(lgamma) carries ~1e-15 relative error out here
        return math.exp(math.lgamma(x))
    # shift into [0.5, 1.5) so Lanczos runs where it is sharpest
    prod = 1.0
    while x >= 1.5:
        x -= 1.0
        prod *= x
    return prod * _gamma_lanczos(x)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d, ``2 pi^(d/2) / Gamma(d/2)``."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def c_alpha(d: int, alpha: float) -> float:
    """Fourier coefficient of the homogeneous pair ``|x|^(alpha-d) <-> c |xi|^-alpha``.

    The transform convention is ``f^(xi) = int exp(-2 pi i x.xi) f(x) dx``.
    Negative ``alpha`` that are not even integers use the same closed form
    through the reflection-extended gamma function.

    Raises
    ------
    ValueError
        If ``alpha >= d`` or ``alpha`` is zero or a negative even integer;
        the latter is the logarithmic case handled by :func:`log_coeffs`.
    """
    alpha = float(alpha)
    if alpha >= d:
        raise ValueError(f"c_alpha needs alpha < d, got alpha={alpha:g}, d={d}")
    if alpha <= 0 and (alpha / 2.0).is_integer():
        raise ValueError(
            f"alpha={alpha:g} is an even nonpositive integer; the transform is "
            "logarithmic there, use log_coeffs(d, ell) instead"
        )
    return math.pi ** (d / 2.0 - alpha) * gamma(alpha / 2.0) / gamma((d - alpha) / 2.0)


def _residue_product(d: int, alpha: float, k: int) -> float:
    # (alpha + k) c_alpha, finite near alpha = -k
    return (alpha + k) * c_alpha(d, alpha)


def _richardson_derivative(f, x0: float, h: float, levels: int = 6) -> float:
    """Central difference at ``x0`` refined by Richardson extrapolation."""
    table = []
    for i in range(levels):
        hi = h / 2**i
        row = [(f(x0 + hi) - f(x0 - hi)) / (2.0 * hi)]
        for j in range(1, i + 1):
            fac = 4.0**j
            row.append((fac * row[j - 1] - table[i - 1][j - 1]) / (fac - 1.0))
        table.append(row)
    return table[-1][-1]


def log_coeffs(d: int, ell: int, step: float = 0.05) -> tuple[float, float]:
    """Coefficients ``(A_k, lambda_k)`` of ``(-A_k log|xi| + lambda_k)|xi|^k``, k = 2 ell.

    ``A_k`` is evaluated in closed form.  ``lambda_k`` is the derivative of
    ``(alpha + k) c_alpha`` at ``alpha = -k``, obtained from central
    differences with Richardson extrapolation starting from ``step``.
    """
    if int(ell) != ell or ell < 1:
        raise ValueError(f"ell must be a positive integer (k = 2 ell even), got {ell!r}")
    k = 2 * int(ell)
    A = (-1) ** ell * 2.0 * math.pi ** (k + d / 2.0) / (
        gamma((d + k) / 2.0) * math.factorial(ell)
    )
    lam = _richardson_derivative(lambda a: _residue_product(d, a, k), -float(k), step)
    return A, lam


def K_sd(s: float, d: int) -> float:
    """Constant ``K(s, d)`` with ``A = K(s, d)(1 - s)`` for the Riesz kernel ``V_s``."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s!r}")
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d!r}")
    num = gamma((d + 1 + s) / 2.0) * gamma((d + 1 - s) / 2.0)
    den = gamma(d / 2.0) * gamma((3 - s) / 2.0) * gamma((s + 1) / 2.0)
    return num / (den * sphere_area(d) * math.pi ** (d / 2.0))


def riesz_A(s: float, d: int) -> float:
    """Amplitude of ``V_s(x) = A x / |x|^(d-s+1)`` inverting the Riesz gradient."""
    return K_sd(s, d) * (1.0 - s)

import mpmath as mp
import numpy as np
import pytest

from dhgrad.constants import c_alpha
from dhgrad.field_ops import (
    Grid3,
    ScalarField,
    VectorField,
    curl_residual,
    divergence,
    gaussian_field,
    nonlocal_gradient_direct,
    nonlocal_gradient_spectral,
    radial_nonlocal_gradient,
    read_snapshot,
    reconstruct,
    write_axis_probes,
    write_snapshot,
)
from dhgrad.kernels import gaussian_profile
from dhgrad.radial_fourier import PowerTerm, RadialSpectrum, radial_ft

# g = exp(-pi |x|^2) is its own transform and has unit mass, i.e. a normal
# density with variance 1/(2 pi); convolving with exp(-|x|^2/2) stays Gaussian.
VAR_G = 1.0 / (2.0 * np.pi)
S = 1.0 + VAR_G


def _gauss_conv_gradient(x, y, z):
    r2 = x**2 + y**2 + z**2
    v = -S**-1.5 * np.exp(-r2 / (2 * S)) / S
    return np.stack([x * v, y * v, z * v])


@pytest.fixture(scope="module")
def gauss_spectrum():
    xi = np.geomspace(1e-3, 4.0, 4000)
    return RadialSpectrum(xi=xi, values=np.exp(-np.pi * xi**2), error=np.zeros_like(xi),
                          head=PowerTerm(-np.pi, 2.0, 0.0, 1.0), head_kind="finite",
                          tail=PowerTerm(0.0, 0.0, 0.0, 0.0))


def test_grid_validation_and_geometry():
    with pytest.raises(ValueError):
        Grid3(48, 16.0)
    with pytest.raises(ValueError):
        Grid3(8, 16.0)
    with pytest.raises(ValueError):
        Grid3(32, -1.0)
    g = Grid3(32, 8.0)
    assert g.h == 0.25 and g.cell_volume == 0.25**3
    assert g.axis[0] == -4.0 and g.axis[16] == 0.0
    kx, ky, kz = g.wavevectors()
    assert np.all(kx[16] == 0)  # Nyquist row zeroed
    assert g.xi_norm().max() == pytest.approx(np.sqrt(3) * 32 / (2 * 8.0))


def test_spectral_gradient_of_gaussian(grid64, unit_gaussian):
    grad = unit_gaussian.gradient().values
    exact = np.stack(unit_gaussian.grad(*grid64.coords()))
    assert np.max(np.abs(grad - exact)) < 1e-12


def test_divergence_of_gradient_is_laplacian(grid64, unit_gaussian):
    X, Y, Z = grid64.coords()
    r2 = X**2 + Y**2 + Z**2
    lap = (r2 - 3) * np.exp(-r2 / 2)
    assert np.max(np.abs(divergence(unit_gaussian.gradient()) - lap)) < 1e-11


def test_spectral_route_against_closed_form(grid64, unit_gaussian, gauss_spectrum):
    Gu = nonlocal_gradient_spectral(unit_gaussian, gauss_spectrum)
    exact = _gauss_conv_gradient(*grid64.coords())
    # limited by monotone interpolation of the sampled transform
    assert np.max(np.abs(Gu.values - exact)) < 1e-10


def test_direct_route_against_closed_form(unit_gaussian):
    pts = np.array([[0.5, 0.0, 0.0], [0.3, -0.7, 0.4], [1.2, 0.9, -0.5]])
    got = nonlocal_gradient_direct(unit_gaussian, gaussian_profile(), pts)
    exact = _gauss_conv_gradient(*pts.T).T
    assert np.allclose(got, exact, rtol=1e-6, atol=1e-12)


def test_reconstruction_round_trip(grid64, unit_gaussian):
    # exact Riesz symbol: reconstruction is limited only by round-off
    xi = np.geomspace(1e-3, 4.0, 4000)
    c = c_alpha(3, 0.5)
    sp = RadialSpectrum(xi=xi, values=c * xi**-0.5, error=np.zeros_like(xi),
                        head=PowerTerm(c, -0.5), head_kind="power", tail=PowerTerm(c, -0.5))
    Gu = nonlocal_gradient_spectral(unit_gaussian, sp)
    back = reconstruct(Gu, sp, unit_gaussian.values.mean())
    assert np.max(np.abs(back.values - unit_gaussian.values)) < 1e-12


def test_reconstruct_requires_positive_transform(grid64, unit_gaussian, gauss_spectrum):
    Gu = nonlocal_gradient_spectral(unit_gaussian, gauss_spectrum)
    neg = RadialSpectrum(xi=gauss_spectrum.xi, values=-gauss_spectrum.values, error=gauss_spectrum.error,
                         head=gauss_spectrum.head, head_kind="finite", tail=gauss_spectrum.tail)
    with pytest.raises(ValueError, match="not positive"):
        reconstruct(Gu, neg, 0.0)


def test_curl_residual_detects_rotation(grid64):
    X, Y, Z = grid64.coords()
    env = np.exp(-(X**2 + Y**2 + Z**2) / 2)
    rot = VectorField(grid64, np.stack([-Y * env, X * env, 0 * env]))
    assert curl_residual(rot) > 0.1


def test_spectral_route_refuses_boundary_mass(grid64, spectra):
    wide = gaussian_field(grid64, width=3.0)
    with pytest.raises(ValueError, match="enlarge L"):
        nonlocal_gradient_spectral(wide, spectra["riesz"])


def test_spectral_route_refuses_short_spectrum(unit_gaussian, profiles):
    short = radial_ft(profiles["riesz"], xi_min=1e-3, xi_max=1.0, n=64)
    with pytest.raises(ValueError, match="grid needs"):
        nonlocal_gradient_spectral(unit_gaussian, short)


def test_direct_route_needs_formula(grid64, profiles):
    u = ScalarField(grid64, np.zeros((64, 64, 64)))
    with pytest.raises(ValueError, match="analytic formula"):
        nonlocal_gradient_direct(u, profiles["riesz"], [[1.0, 0, 0]])


def _riesz_gaussian_oracle(r, s=0.5):
    # G u = d/dr of (2/r) int xi c xi^(s-1) u^(xi) sin(2 pi r xi) dxi
    mp.mp.dps = 30
    c = c_alpha(3, 1 - s)

    def conv(rr):
        f = lambda xi: xi**s * c * (2 * mp.pi) ** 1.5 * mp.exp(-2 * mp.pi**2 * xi**2) * mp.sin(2 * mp.pi * rr * xi)
        return 2 / rr * mp.quad(f, [0, 1, 2, 4, mp.inf])

    return float(mp.diff(conv, r))


@pytest.mark.parametrize("r", [0.25, 1.0, 2.0])
def test_radial_route_against_mpmath(spectra, r):
    u_hat = lambda xi: (2 * np.pi) ** 1.5 * np.exp(-2 * np.pi**2 * xi**2)
    got = radial_nonlocal_gradient(u_hat, spectra["riesz"], np.array([r]), xi_max=2.0)[0]
    assert got == pytest.approx(_riesz_gaussian_oracle(r), rel=1e-8)


def test_spectral_grid_agrees_with_radial_route(grid64, unit_gaussian, spectra):
    Gu = nonlocal_gradient_spectral(unit_gaussian, spectra["riesz"])
    c = grid64.N // 2
    idx = np.array([c + 4, c + 8])  # x = 1, 2 on the positive x axis
    r = grid64.axis[idx]
    u_hat = lambda xi: (2 * np.pi) ** 1.5 * np.exp(-2 * np.pi**2 * xi**2)
    radial = radial_nonlocal_gradient(u_hat, spectra["riesz"], r, xi_max=2.0)
    assert np.allclose(Gu.values[0, idx, c, c], radial, rtol=1e-3)
    assert np.allclose(Gu.values[1:, idx, c, c], 0.0, atol=1e-14)


def test_snapshot_round_trip(tmp_path, unit_gaussian):
    grid = Grid3(16, 4.0)
    vec = np.random.default_rng(0).standard_normal((3, 16, 16, 16))
    write_snapshot(tmp_path / "v.bin", vec, grid)
    g2, back = read_snapshot(tmp_path / "v.bin")
    assert g2 == grid and np.array_equal(back, vec)
    raw = (tmp_path / "v.bin").read_bytes()
    assert np.frombuffer(raw[:8], np.int64)[0] == 16
    assert np.frombuffer(raw[8:16], np.float64)[0] == 4.0
    assert np.frombuffer(raw[16:24], np.int64)[0] == 3
    assert len(raw) == 24 + 8 * vec.size
    sc = vec[0]
    write_snapshot(tmp_path / "s.bin", sc, grid)
    assert np.array_equal(read_snapshot(tmp_path / "s.bin")[1], sc)


def test_axis_probes(tmp_path):
    grid = Grid3(16, 4.0)
    vals = np.arange(16**3, dtype=float).reshape(16, 16, 16)
    write_axis_probes(tmp_path / "p.csv", grid, vals)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "axis,coord,c0" and len(lines) == 1 + 3 * 16
    axis, coord, v = lines[1 + 16 + 3].split(",")
    assert axis == "y" and float(coord) == grid.axis[3] and float(v) == vals[8, 3, 8]


def test_vector_field_arithmetic(grid64):
    a = VectorField(grid64, np.ones((3, 64, 64, 64)))
    b = 2.0 * a
    assert np.all((b - a).values == 1.0)
    assert np.allclose((a * 3.0).norm(), 3 * np.sqrt(3))

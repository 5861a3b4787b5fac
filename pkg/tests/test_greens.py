import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vdwcp.constants import atomic_units
from vdwcp.errors import CoincidentPoints, InsideSphere, ZeroFrequency
from vdwcp.greens import (
    FreeSpaceGreen,
    PermittivityModel,
    SphereSpec,
    free_space_axis_components,
    free_space_green,
    mie_B_M,
    mie_B_N,
    mie_small_sphere_B1N,
    sphere_scattering_green_diag,
)

AU = atomic_units()
coord = st.floats(-50, 50, allow_nan=False)
point = st.tuples(coord, coord, coord)
freq = st.floats(1e-3, 5.0)


def _distinct(a, b):
    return np.linalg.norm(np.subtract(a, b)) > 1e-2


@settings(max_examples=60, deadline=None)
@given(point, point, freq, st.floats(0.0, 3.0))
def test_onsager_reciprocity(a, b, wr, wi):
    assume(_distinct(a, b))
    w = complex(wr, wi)
    G1 = free_space_green(a, b, w, AU)
    G2 = free_space_green(b, a, w, AU)
    assert np.max(np.abs(G1 - G2.T)) <= 1e-12 * np.max(np.abs(G1))


@settings(max_examples=60, deadline=None)
@given(point, point, freq, st.floats(0.0, 3.0))
def test_schwartz_reflection(a, b, wr, wi):
    assume(_distinct(a, b))
    w = complex(wr, wi)
    G = free_space_green(a, b, w, AU)
    Gm = free_space_green(a, b, -np.conj(w), AU)
    assert np.max(np.abs(Gm - np.conj(G))) <= 1e-12 * np.max(np.abs(G))


@settings(max_examples=60, deadline=None)
@given(point, point, st.floats(1e-3, 50.0))
def test_real_on_imaginary_axis(a, b, u):
    assume(_distinct(a, b))
    G = free_space_green(a, b, 1j * u, AU)
    assert np.max(np.abs(G.imag)) <= 1e-12 * np.max(np.abs(G))


@settings(max_examples=40, deadline=None)
@given(point, point)
def test_u2_G_decays(a, b):
    assume(_distinct(a, b))
    ell = float(np.linalg.norm(np.subtract(a, b)))
    scale = AU.c**2 / ell**3
    u = 2000.0 * AU.c / ell
    assert np.max(np.abs(u**2 * free_space_green(a, b, 1j * u, AU))) <= 1e-12 * scale


def test_axis_components_match_tensor():
    r = 3.7
    for w in (0.2, 1.5 + 0.1j, 4j):
        G = free_space_green((0, 0, 0), (r, 0, 0), w, AU)
        gxx, gyy = free_space_axis_components(r, w, AU)
        assert abs(G[0, 0] - gxx) <= 1e-13 * abs(gxx)
        assert abs(G[1, 1] - gyy) <= 1e-13 * abs(gyy)
        assert abs(G[2, 2] - gyy) <= 1e-13 * abs(gyy)
        assert abs(G[0, 1]) == 0.0


def test_longitudinal_component_negative_on_imaginary_axis():
    # G_xx(iu) = -c^2 (1 + x) e^{-x} / (2 pi u^2 r^3), x = r u / c
    r, u = 10.0, 0.4
    x = r * u / AU.c
    gxx, gyy = free_space_axis_components(r, 1j * u, AU)
    assert gxx.real < 0
    assert gxx.real == pytest.approx(-AU.c**2 * (1 + x) * math.exp(-x) / (2 * math.pi * u**2 * r**3), rel=1e-13)
    assert gyy.real == pytest.approx(AU.c**2 * (1 + x + x * x) * math.exp(-x) / (4 * math.pi * u**2 * r**3), rel=1e-13)


def test_array_frequency_shape():
    G = FreeSpaceGreen(AU).evaluate((0, 0, 0), (1, 2, 3), 1j * np.array([0.1, 0.2, 0.3]))
    assert G.shape == (3, 3, 3)


def test_free_space_errors():
    with pytest.raises(CoincidentPoints):
        free_space_green((1, 1, 1), (1, 1, 1), 1.0, AU)
    with pytest.raises(ZeroFrequency):
        free_space_green((0, 0, 0), (1, 0, 0), 0.0, AU)


# -- permittivity --------------------------------------------------------------


def test_drude_lorentz_model():
    m = PermittivityModel(((0.5, 1.0, 0.1),), eps_inf=2.0)
    w = 0.7
    assert m(w) == pytest.approx(2.0 + 0.5 / (1 - w * w - 0.1j * w))
    assert m.susceptibility(w) == pytest.approx(m(w) - 1)
    # real and above 1 on the imaginary axis for a passive medium
    e = m(3j)
    assert abs(e.imag) < 1e-15 and e.real > 1
    assert m(-np.conj(0.3 + 0.2j)) == pytest.approx(np.conj(m(0.3 + 0.2j)))
    assert PermittivityModel.vacuum().is_vacuum
    assert PermittivityModel.constant(3.0)(1.0) == 3.0
    with pytest.raises(ValueError):
        PermittivityModel(((1.0, -1.0, 0.0),))


# -- Mie coefficients ------------------------------------------------------------

mpmath.mp.dps = 60


def _mp_mie(n, z0, eps):
    z0 = mpmath.mpc(z0)
    n1 = mpmath.sqrt(mpmath.mpc(eps))
    z1 = n1 * z0

    def j(z):
        return mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.besselj(n + 0.5, z)

    def y(z):
        return mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.bessely(n + 0.5, z)

    def dz(f, z):
        return mpmath.diff(lambda t: t * f(t), z)

    j0, j1 = j(z0), j(z1)
    h0 = j0 + 1j * y(z0)
    psi0, psi1 = dz(j, z0), dz(j, z1)
    xi0 = psi0 + 1j * dz(y, z0)
    bn = (eps * j1 * psi0 - j0 * psi1) / (h0 * psi1 - eps * j1 * xi0)
    bm = (j1 * psi0 - j0 * psi1) / (h0 * psi1 - j1 * xi0)
    return complex(bm), complex(bn)


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("z0, eps", [(0.5, 3.0 + 0.2j), (2.0, 2.0), (1.5j, 4.0), (0.3 + 0.1j, 1.5 + 0.5j)])
def test_mie_against_mpmath(n, z0, eps):
    sphere = SphereSpec(2.0, _ConstEps(eps))
    w = z0 * AU.c / sphere.radius
    bm_ref, bn_ref = _mp_mie(n, z0, eps)
    assert abs(mie_B_N(n, w, sphere, AU) - bn_ref) <= 1e-11 * abs(bn_ref)
    assert abs(mie_B_M(n, w, sphere, AU) - bm_ref) <= 1e-11 * abs(bm_ref)


class _ConstEps(PermittivityModel):
    """Constant complex permittivity, for oracle comparisons only."""

    def __init__(self, eps):
        object.__setattr__(self, "oscillators", ())
        object.__setattr__(self, "eps_inf", 1.0)
        object.__setattr__(self, "_chi", complex(eps) - 1)

    @property
    def is_vacuum(self):
        return False

    def susceptibility(self, omega):
        w = np.asarray(omega, dtype=complex)
        return self._chi if w.ndim == 0 else np.full(w.shape, self._chi)


def test_vacuum_sphere_coefficients_vanish():
    s = SphereSpec(1.0)
    assert mie_B_N(1, 0.3, s, AU) == 0 and mie_B_M(3, 2j, s, AU) == 0


@pytest.mark.parametrize("eps", [2.0, 10.0, 1.0 + 1e-6])
def test_small_sphere_limit(eps):
    sphere = SphereSpec(1.0, PermittivityModel.constant(eps))
    w = 1e-3 * AU.c
    bn = mie_B_N(1, w, sphere, AU)
    assert abs(bn / mie_small_sphere_B1N(w, sphere, AU) - 1) <= 1e-5
    # |B1M / B1N| ~ z0^2 (eps + 2) / 30
    assert abs(mie_B_M(1, w, sphere, AU)) / abs(bn) == pytest.approx(1e-6 * (eps + 2) / 30, rel=1e-3)


def test_weak_contrast_keeps_precision():
    # B1N is linear in eps - 1 for a weak medium; no cancellation loss
    s1 = SphereSpec(1.0, PermittivityModel.constant(1 + 1e-9))
    s2 = SphereSpec(1.0, PermittivityModel.constant(1 + 2e-9))
    for w in (0.5 * AU.c, 3j * AU.c):
        assert mie_B_N(2, w, s2, AU) / mie_B_N(2, w, s1, AU) == pytest.approx(2.0, rel=1e-6)


# -- equal-point scattering tensor ------------------------------------------------

GOLD_LIKE = PermittivityModel(((0.3, 0.05, 0.01), (0.2, 0.4, 0.05)), eps_inf=1.5)


@pytest.mark.parametrize("w", [0.2, 0.05 + 0.01j, 1j, 20j])
def test_sphere_series_self_convergence(w):
    sphere = SphereSpec(50.0, GOLD_LIKE)
    r = 80.0
    g1 = sphere_scattering_green_diag(r, w, sphere, AU, n_max=40)
    g2 = sphere_scattering_green_diag(r, w, sphere, AU, n_max=80)
    for a, b in zip(g1, g2):
        assert abs(a - b) <= 1e-10 * abs(b)
    ga = sphere_scattering_green_diag(r, w, sphere, AU)
    for a, b in zip(ga, g2):
        assert abs(a - b) <= 1e-10 * abs(b)


def test_sphere_tensor_schwartz_and_reality():
    sphere = SphereSpec(5.0, GOLD_LIKE)
    w = 0.3 + 0.05j
    g = sphere_scattering_green_diag(9.0, w, sphere, AU)
    gm = sphere_scattering_green_diag(9.0, -np.conj(w), sphere, AU)
    for a, b in zip(g, gm):
        assert abs(b - np.conj(a)) <= 1e-12 * abs(a)
    for u in (1e-3, 0.1, 5.0):
        for x in sphere_scattering_green_diag(9.0, 1j * u, sphere, AU):
            assert abs(x.imag) <= 1e-12 * abs(x)


def test_sphere_adaptive_order_reported():
    sphere = SphereSpec(1.0, PermittivityModel.constant(2.0))
    *_, n = sphere_scattering_green_diag(1000.0, 1e-3, sphere, AU, full_output=True)
    assert 1 <= n <= 16


def test_inside_sphere_rejected():
    with pytest.raises(InsideSphere):
        sphere_scattering_green_diag(0.5, 1.0, SphereSpec(1.0, PermittivityModel.constant(2.0)), AU)

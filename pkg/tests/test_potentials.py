import math

import numpy as np
import pytest

from vdwcp.atoms import AtomSpec
from vdwcp.errors import InsideSphere, NearResonance, PlasmonResonance, UnconvergedQuadrature
from vdwcp.greens import FreeSpaceGreen, PermittivityModel, SphereSpec
from vdwcp.potentials import (
    POWER,
    PV,
    PotentialBreakdown,
    QuadSettings,
    ResonantTerm,
    clausius_mossotti_alpha,
    cm_factor,
    cp_off_resonant_sphere,
    cp_resonant_sphere,
    cp_small_sphere_off_resonant,
    cp_small_sphere_resonant,
    f_retardation,
    free_space_breakdown,
    free_space_power_via_tensor,
    oscillatory_bracket,
    power_factor,
    vdw_free_space_off_resonant,
    vdw_free_space_resonant_power,
    vdw_free_space_resonant_pv,
    vdw_off_resonant_general,
    vdw_resonant_general,
    vdw_resonant_power,
)

Q = QuadSettings(rel_tol=1e-11)
A_EXC = AtomSpec.two_level(0.5, 1.0, excited=True)
B_GND = AtomSpec.two_level(0.3, 0.8)


def geo(r):
    return ((0.0, 0.0, 0.0), (r, 0.0, 0.0))


def test_retardation_function():
    assert f_retardation(0.0) == 3.0
    x = 1.7
    assert f_retardation(x) == pytest.approx(math.exp(-2 * x) * (3 + 6 * x + 5 * x**2 + 2 * x**3 + x**4))


def test_bracket_values():
    assert oscillatory_bracket(0.0) == 3.0
    e = math.pi / 2
    assert oscillatory_bracket(e) == pytest.approx(-(3 - 5 * e**2 + e**4), rel=1e-14)
    assert oscillatory_bracket(e) == pytest.approx(3.2490, abs=1e-4)


def test_london_limit(au):
    d, w0 = 1.3, 0.4
    a = AtomSpec.two_level(w0, d)
    r = 1e-3 * au.c / w0
    u = vdw_free_space_off_resonant(a, 0, a, 0, r, Q, au)
    assert u * r**6 == pytest.approx(-(d**4) / (3 * w0), rel=1e-3)


def test_nonretarded_r6_scaling(au):
    a = AtomSpec.two_level(0.4, 1.0)
    r = 1e-4 * au.c / 0.4
    u1 = vdw_free_space_off_resonant(a, 0, a, 0, r, Q, au)
    u2 = vdw_free_space_off_resonant(a, 0, a, 0, 10 * r, Q, au)
    assert u2 / u1 == pytest.approx(1e-6, rel=5e-3)


def test_zero_dipole_gives_zero(au):
    dark = AtomSpec((0.0, 0.3), ((0, 0), (0, 0)), 0)
    assert vdw_free_space_off_resonant(A_EXC, 1, dark, 0, 50.0, Q, au) == 0.0
    g = FreeSpaceGreen(au)
    assert vdw_off_resonant_general(A_EXC, 1, dark, 0, g, geo(50.0), Q, au) == 0.0


@pytest.mark.parametrize("eta", [0.01, 0.3, 2.0, 17.0, 50.0])
def test_generic_matches_closed_forms(au, eta):
    r = eta * au.c / 0.5
    g = FreeSpaceGreen(au)
    gen = vdw_resonant_general(A_EXC, 1, B_GND, 0, g, geo(r), au)
    closed = vdw_free_space_resonant_pv(A_EXC, 1, B_GND, r, au)
    assert len(gen) == len(closed) == 1
    assert gen[0].energy == pytest.approx(closed[0].energy, rel=1e-10)
    off_g = vdw_off_resonant_general(A_EXC, 1, B_GND, 0, g, geo(r), Q, au)
    off_c = vdw_free_space_off_resonant(A_EXC, 1, B_GND, 0, r, Q, au)
    assert off_g == pytest.approx(off_c, rel=1e-8)
    pw = vdw_resonant_power(A_EXC, 1, B_GND, g, geo(r), au)[0].energy
    assert pw == pytest.approx(vdw_free_space_resonant_power(A_EXC, 1, B_GND, r, au)[0].energy, rel=1e-12)
    assert pw == pytest.approx(free_space_power_via_tensor(A_EXC, 1, B_GND, r, au)[0].energy, rel=1e-12)


def test_power_factor_identity(au):
    # sum |G_ij|^2 = c^4 (3 + eta^2 + eta^4) / (8 pi^2 w^4 r^6)
    w, r = 0.5, 300.0
    eta = r * w / au.c
    G = FreeSpaceGreen(au).evaluate(*geo(r), w)
    s = np.sum(np.abs(G) ** 2)
    assert s == pytest.approx(au.c**4 * power_factor(eta) / (8 * np.pi**2 * w**4 * r**6), rel=1e-13)


def test_methods_agree_nonretarded(au):
    for eta in (1e-3, 1e-2, 3e-2):
        r = eta * au.c / 0.5
        pv = vdw_free_space_resonant_pv(A_EXC, 1, B_GND, r, au)[0].energy
        pw = vdw_free_space_resonant_power(A_EXC, 1, B_GND, r, au)[0].energy
        assert abs(pv / pw - 1) <= 2 * eta**2


def test_power_form_monotone_no_sign_change(au):
    rs = np.geomspace(5, 50, 200) * au.c / 0.5
    pw = np.array([vdw_free_space_resonant_power(A_EXC, 1, B_GND, r, au)[0].energy for r in rs])
    pv = np.array([vdw_free_space_resonant_pv(A_EXC, 1, B_GND, r, au)[0].energy for r in rs])
    assert np.all(np.sign(pw) == np.sign(pw[0]))
    assert np.all(np.diff(np.abs(pw)) < 0)
    assert np.count_nonzero(np.diff(np.sign(pv))) >= 10


def test_both_ground_has_no_resonant_terms(au):
    g = FreeSpaceGreen(au)
    assert vdw_resonant_general(B_GND, 0, B_GND, 0, g, geo(10.0), au) == []
    bd = free_space_breakdown(B_GND, 0, B_GND, 0, 10.0, au, Q)
    assert bd.resonant == [] and bd.total(PV) == bd.total(POWER) == bd.off_resonant


def test_both_excited_lists_both_channels_and_flags(au):
    g = FreeSpaceGreen(au)
    b_exc = AtomSpec.two_level(0.3, 0.8, excited=True)
    terms = vdw_resonant_general(A_EXC, 1, b_exc, 1, g, geo(40.0), au)
    assert sorted(t.atom for t in terms) == ["A", "B"]
    assert all("partner_excited" in t.flags for t in terms)
    with pytest.raises(ValueError):
        free_space_breakdown(A_EXC, 1, b_exc, 1, 40.0, au, Q, methods=(POWER,))


def test_degenerate_both_excited_refused(au):
    g = FreeSpaceGreen(au)
    with pytest.raises(NearResonance):
        vdw_resonant_general(A_EXC, 1, A_EXC, 1, g, geo(40.0), au)


def test_oriented_dipoles_reduce_to_isotropic_average(au):
    g = FreeSpaceGreen(au)
    r = 60.0
    iso = vdw_resonant_general(A_EXC, 1, B_GND, 0, g, geo(r), au)[0].energy
    parts = [vdw_resonant_general(A_EXC, 1, B_GND, 0, g, geo(r), au, dipoles={("A", 0): e})[0].energy
             for e in np.eye(3)]
    assert np.mean(parts) == pytest.approx(iso, rel=1e-12)


def test_breakdown_totals():
    bd = PotentialBreakdown(-1.0, [ResonantTerm(None, "A", PV, 0.5), ResonantTerm(None, "A", POWER, -0.25)])
    assert bd.total(PV) == -0.5 and bd.total(POWER) == -1.25
    with pytest.raises(ValueError):
        bd.total("other")


def test_unconverged_quadrature_is_reported(au):
    with pytest.raises(UnconvergedQuadrature) as info:
        vdw_free_space_off_resonant(B_GND, 0, B_GND, 0, 50.0, QuadSettings(rel_tol=1e-15, max_evaluations=200), au)
    assert np.isfinite(info.value.result.value)
    bd = free_space_breakdown(B_GND, 0, B_GND, 0, 50.0, au, QuadSettings(rel_tol=1e-15, max_evaluations=200))
    assert not bd.converged and np.isfinite(bd.off_resonant)


# -- sphere ------------------------------------------------------------------------

DIEL = SphereSpec(1.0, PermittivityModel.constant(2.5))


def test_vacuum_sphere_gives_zero(au):
    s = SphereSpec(1.0)
    assert cp_off_resonant_sphere(B_GND, 0, 10.0, s, Q, au) == 0.0
    assert [t.energy for t in cp_resonant_sphere(A_EXC, 1, 10.0, s, au)] == [0.0]
    assert cp_small_sphere_off_resonant(B_GND, 0, 10.0, s, Q, au) == 0.0


def test_ground_state_sphere_attractive(au):
    for r in (1.5, 5.0, 100.0, 5000.0):
        assert cp_off_resonant_sphere(B_GND, 0, r, DIEL, Q, au) < 0
    assert cp_resonant_sphere(B_GND, 0, 5.0, DIEL, au) == []


@pytest.mark.parametrize("eta", [0.1, 3.0, 12.0])
def test_small_sphere_limits(au, eta):
    r = eta * au.c / 0.5
    s = SphereSpec(1e-3 * r, PermittivityModel.constant(2.5))
    full = cp_off_resonant_sphere(A_EXC, 1, r, s, Q, au)
    small = cp_small_sphere_off_resonant(A_EXC, 1, r, s, Q, au)
    assert full == pytest.approx(small, rel=1e-5)
    res = cp_resonant_sphere(A_EXC, 1, r, s, au)[0].energy
    res_small = cp_small_sphere_resonant(A_EXC, 1, r, s, au)[0].energy
    assert res == pytest.approx(res_small, rel=1e-4)


def test_small_sphere_a3_scaling(au):
    r = 300.0
    u1 = cp_small_sphere_off_resonant(B_GND, 0, r, SphereSpec(1.0, PermittivityModel.constant(3.0)), Q, au)
    u2 = cp_small_sphere_off_resonant(B_GND, 0, r, SphereSpec(2.0, PermittivityModel.constant(3.0)), Q, au)
    assert u2 / u1 == pytest.approx(8.0, rel=1e-13)


def test_clausius_mossotti_substitution_is_exact(au):
    a = 2.0
    chi = 0.1
    s = SphereSpec(a, PermittivityModel.constant(1 + 3 * chi / (1 - chi)))
    alpha_s = clausius_mossotti_alpha(s, 0.3, au).real
    assert alpha_s == pytest.approx(4 * np.pi * au.eps0 * a**3 * chi, rel=1e-14)
    # with alpha_B replaced by alpha_s the small-sphere form is the two-atom bracket formula
    r = 400.0
    res_small = cp_small_sphere_resonant(A_EXC, 1, r, s, au)[0].energy
    eta = r * 0.5 / au.c
    direct = -1.0 / (24 * np.pi**2 * au.eps0**2 * r**6) * alpha_s * oscillatory_bracket(eta)
    assert res_small == pytest.approx(direct, rel=1e-12)


def test_cm_factor_limits(au):
    assert cm_factor(0.0) == 0
    assert cm_factor(1e12) == pytest.approx(1.0, rel=1e-11)
    s = SphereSpec(1.5, PermittivityModel.constant(2.0))
    assert clausius_mossotti_alpha(s, 0.0, au).real == pytest.approx(np.pi * au.eps0 * 1.5**3, rel=1e-14)
    with pytest.raises(PlasmonResonance):
        cm_factor(-3.0)


def test_inside_sphere(au):
    with pytest.raises(InsideSphere):
        cp_off_resonant_sphere(B_GND, 0, 0.5, DIEL, Q, au)
    with pytest.raises(InsideSphere):
        cp_resonant_sphere(A_EXC, 1, 1.0, DIEL, au)


def test_dispersive_sphere_resonant_matches_small_limit(au):
    mat = PermittivityModel(((0.09, 0.8, 0.0),))
    r = 2.0 * au.c / 0.5
    s = SphereSpec(1e-3 * r, mat)
    full = cp_resonant_sphere(A_EXC, 1, r, s, au)[0].energy
    small = cp_small_sphere_resonant(A_EXC, 1, r, s, au)[0].energy
    assert full == pytest.approx(small, rel=1e-4)

import json

import pytest

from vdwcp.atoms import AtomSpec, channels
from vdwcp.greens import PermittivityModel, SphereSpec
from vdwcp.verify import (
    CHECKS,
    contour_identity_check,
    default_atoms,
    end_to_end_check,
    equivalent_sphere,
    mie_limit_check,
    run_check,
    run_suite,
)


@pytest.mark.parametrize("name", CHECKS)
def test_default_suite_passes(au, name):
    rep = run_check(name, au)
    assert rep.passed, rep.to_dict()
    json.dumps(rep.to_dict())


@pytest.mark.parametrize("orientation", [("x", "x"), ("y", "y"), ("z", "x"), "isotropic"])
def test_contour_identity_orientations(au, orientation):
    A, B = default_atoms(au)
    rep = contour_identity_check(channels(A, au)[0], channels(B, au)[0], 2 * au.c / 0.5, au, orientation)
    assert rep.passed


@pytest.mark.parametrize("eta", [0.1, 3.0, 20.0])
def test_end_to_end_over_eta(au, eta):
    A, B = default_atoms(au)
    rep = end_to_end_check(A, 1, B, 0, eta * au.c / 0.5, au)
    assert rep.passed and rep.deviation <= 1e-4


def test_degenerate_pair_is_excluded_not_failed(au):
    A = AtomSpec.two_level(0.5, 1.0, excited=True)
    B = AtomSpec.two_level(0.5 * (1 + 1e-5), 1.0, excited=True)
    rep = contour_identity_check(channels(A, au)[0], channels(B, au)[0], 100.0, au)
    assert rep.excluded and rep.passed
    assert "excluded" in rep.notes[0]


def test_equivalent_sphere_reproduces_alpha(au):
    from vdwcp.atoms import polarizability
    from vdwcp.potentials import clausius_mossotti_alpha

    B = AtomSpec.two_level(0.3, 1e-3)
    s = equivalent_sphere(B, 1.0, 0.5, au)
    for w in (0.0, 0.1, 0.5, 2.0, 1j):
        assert clausius_mossotti_alpha(s, w, au) == pytest.approx(polarizability(B, 0, w, au), rel=1e-12)


def test_sphere_limit_reports_principal_value(au):
    rep = run_check("sphere_limit_retarded", au)
    assert rep.values["closer_to"] == "principal_value"
    assert not rep.values["power_consistent"]
    dev = rep.values["deviation_vs_principal_value"]
    assert all(b < a for a, b in zip(dev, dev[1:]))


def test_mie_limit_vacuum_and_plasmon(au):
    assert mie_limit_check(SphereSpec(1.0), (1e-2, 1e-3), au).passed
    # eps = -2 sits on the surface-plasmon pole: excluded with a note
    rep = mie_limit_check(SphereSpec(1.0, PermittivityModel.constant(-2.0)), (1e-2,), au)
    assert rep.excluded and rep.notes


def test_unknown_check_name(au):
    with pytest.raises(KeyError) as info:
        run_suite(["nope"], au)
    assert "contour_pole_free" in str(info.value)

import math

import numpy as np
import pytest

from qubitloss import cavity
from qubitloss.errors import DomainError, SingularityError, ValidationError


def erf_series(x, terms=60):
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
    return 2 / math.sqrt(math.pi) * total


@pytest.mark.parametrize("ratio", [0.1, 0.5, 1.0, 2.0, 3.0])
def test_geometric_factor_against_series(ratio):
    expected = math.pi / 4 * erf_series(ratio / math.sqrt(2))
    assert abs(cavity.geometric_factor(ratio) - expected) < 1e-12


def test_geometric_factor_unit_ratio():
    # erf(1/sqrt 2) is the one-sigma Gaussian mass 0.682689492137086
    assert abs(cavity.geometric_factor(1.0) - 0.682689492137086 * math.pi / 4) < 1e-14


def test_geometric_factor_derivative():
    h = 1e-6
    for r in (0.3, 1.0, 2.5):
        numeric = (cavity.geometric_factor(r + h) - cavity.geometric_factor(r - h)) / (2 * h)
        analytic = math.pi / 4 * 2 / math.sqrt(math.pi) * math.exp(-r * r / 2) / math.sqrt(2)
        assert abs(numeric - analytic) < 1e-8


def test_geometric_factor_is_monotone_and_bounded():
    values = [cavity.geometric_factor(r) for r in np.linspace(0.01, 10, 200)]
    assert all(b > a for a, b in zip(values, values[1:]) if b < math.pi / 4 - 1e-15)
    assert max(values) <= math.pi / 4


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_geometric_factor_domain(bad):
    with pytest.raises(DomainError):
        cavity.geometric_factor(bad)


def test_cross_section_and_optical_density():
    lam = 780e-9
    assert abs(cavity.resonant_cross_section(lam) - lam**2 / (2 * math.pi)) < 1e-30
    # with w0 = lambda: D0 = C / (2 pi^2)
    d0 = cavity.optical_density(1.0, lam, lam)
    assert math.isclose(d0, cavity.geometric_factor(1.0) / (2 * math.pi**2), rel_tol=1e-12)
    params = cavity.CavityParams(1e5, 1e3, wavelength=lam, atom_radius=lam)
    assert math.isclose(params.optical_density(), d0, rel_tol=1e-15)


def test_optical_density_scales_inverse_area():
    lam = 780e-9
    a = cavity.optical_density(2.0, lam, 1e-6)
    b = cavity.optical_density(2.0, lam, 2e-6)
    assert math.isclose(a / b, 4.0, rel_tol=1e-12)


def test_phase_values():
    assert cavity.single_pass_phase(4.0, 1e3) == 1e-3
    p = cavity.CavityParams(1e5, 1e3, photon_number=1.0, d0=4.0)
    assert math.isclose(cavity.total_phase(p), 100.0, rel_tol=1e-15)
    assert cavity.phase_uncertainty(4.0) == 0.5
    assert cavity.phase_uncertainty(4.0, k=2.0) == 1.0


def test_singular_detuning():
    with pytest.raises(SingularityError):
        cavity.single_pass_phase(1.0, 0.0)
    with pytest.raises(SingularityError):
        cavity.CavityParams(1e5, 0.0)
    with pytest.raises(SingularityError):
        cavity.photon_window(1e5, 0.0)


def test_phase_uncertainty_domain():
    with pytest.raises(DomainError):
        cavity.phase_uncertainty(0.0)


@pytest.mark.parametrize("kwargs", [dict(finesse=0, detuning_ratio=1), dict(finesse=1, detuning_ratio=1, photon_number=-1),
                                    dict(finesse=1, detuning_ratio=1, waist_ratio=0), dict(finesse=1, detuning_ratio=1, k=0)])
def test_params_validation(kwargs):
    with pytest.raises(ValidationError):
        cavity.CavityParams(**kwargs)


def test_missing_optical_density():
    p = cavity.CavityParams(1e5, 1e3)
    assert not p.has_optical_density
    with pytest.raises(DomainError):
        p.optical_density()
    assert cavity.feasibility(p).phi is None


def test_window_empty_for_low_finesse():
    assert cavity.photon_window(1.0, 10.0) is None
    assert cavity.photon_window(0.5, 10.0) is None
    lo, hi = cavity.photon_window(4.0, 10.0)
    assert math.isclose(lo, 6.25) and math.isclose(hi, 25.0)


def test_scattered_photons_at_window_edges():
    f, r = 1e5, 1e3
    lo, hi = cavity.photon_window(f, r)
    assert math.isclose(cavity.scattered_photons(cavity.CavityParams(f, r, lo)), 1 / f, rel_tol=1e-12)
    assert math.isclose(cavity.scattered_photons(cavity.CavityParams(f, r, hi)), 1.0, rel_tol=1e-12)


def test_phase_resolved_matches_condition_i_for_d0_four():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        f = 10 ** rng.uniform(0, 6)
        r = 10 ** rng.uniform(0, 4) * rng.choice([-1, 1])
        n_min = r * r / (f * f)
        n = n_min * 10 ** rng.uniform(-3, 3)
        if abs(n / n_min - 1) < 1e-9:
            continue
        rep = cavity.feasibility(cavity.CavityParams(f, r, n, d0=4.0))
        assert rep.phase_resolved == rep.condition_i


def test_phase_threshold():
    p = cavity.CavityParams(1e5, 1e3, 1.0, d0=4.0)
    assert math.isclose(cavity.phase_threshold(p), 1e-4, rel_tol=1e-12)


def test_report_notes_unmodeled_factor():
    rep = cavity.feasibility(cavity.CavityParams(1e5, 1e3))
    assert any("dipole" in note for note in rep.notes)

"""Feasibility of the dispersive cavity QND measurement of atom presence.

Closed-form relations, all dimensionless unless noted:

    C      = (pi/4) erf((w/w0) / sqrt(2))       geometric overlap factor
    sigma0 = lambda^2 / (2 pi)                  resonant cross-section [m^2]
    D0     = C sigma0 / sigma, sigma = pi w0^2  resonant optical density
    phi1   = D0 / (4 delta/Gamma)               single-pass phase shift [rad]
    phi    = f phi1                             total phase shift [rad]
    dphi   = k / sqrt(N)                        shot-noise phase uncertainty [rad]
    N_sc   = N (Gamma/delta)^2 f                photons scattered by the atom

Detection needs (i) the shift to beat its uncertainty, taken here in the
simplified form N > (delta/Gamma)^2 / f^2, and (ii) N_sc < 1. Together they
give the photon-number window ((delta/Gamma)^2/f^2, (delta/Gamma)^2/f), which
is non-empty exactly when f > 1. Equivalently 1/f < N_sc < 1.

Extra factors from the orientation of the atomic dipole are not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, SingularityError, ValidationError

UNMODELED = ("dipole-orientation geometric factor not included (multiplies D0)",)


def geometric_factor(waist_ratio: float) -> float:
    """Overlap C of a Gaussian mode of width w with an atomic disc of radius w0."""
    if not waist_ratio > 0:
        raise DomainError(f"waist ratio must be positive, got {waist_ratio}")
    return math.pi / 4 * math.erf(waist_ratio / math.sqrt(2))


def resonant_cross_section(wavelength: float) -> float:
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return wavelength**2 / (2 * math.pi)


def optical_density(waist_ratio: float, wavelength: float, atom_radius: float) -> float:
    """D0 = C sigma0 / sigma with the atomic area sigma = pi w0^2 (w0 = ``atom_radius``)."""
    if not atom_radius > 0:
        raise DomainError(f"atom radius must be positive, got {atom_radius}")
    sigma = math.pi * atom_radius**2
    return geometric_factor(waist_ratio) * resonant_cross_section(wavelength) / sigma


def single_pass_phase(d0: float, detuning_ratio: float) -> float:
    if detuning_ratio == 0:
        raise SingularityError("zero detuning: the dispersive phase formula does not apply on resonance")
    return d0 / (4 * detuning_ratio)


def phase_uncertainty(n_photons: float, k: float = 1.0) -> float:
    if not n_photons > 0:
        raise DomainError(f"photon number must be positive, got {n_photons}")
    return k / math.sqrt(n_photons)


@dataclass(frozen=True)
class CavityParams:
    """Inputs of the QND feasibility calculation.

    ``d0`` may be given directly; otherwise it is derived from ``wavelength``
    and ``atom_radius`` (both in meters) together with ``waist_ratio``.
    """

    finesse: float
    detuning_ratio: float
    photon_number: float = 1.0
    waist_ratio: float = 1.0
    wavelength: float | None = None
    atom_radius: float | None = None
    d0: float | None = None
    k: float = 1.0

    def __post_init__(self):
        if not self.finesse > 0:
            raise ValidationError(f"finesse must be positive, got {self.finesse}")
        if self.detuning_ratio == 0:
            raise SingularityError("detuning ratio must be non-zero")
        if not self.photon_number >= 0:
            raise ValidationError(f"photon number must be >= 0, got {self.photon_number}")
        if not self.waist_ratio > 0:
            raise ValidationError(f"waist ratio must be positive, got {self.waist_ratio}")
        if not self.k > 0:
            raise ValidationError(f"shot-noise prefactor must be positive, got {self.k}")

    @property
    def has_optical_density(self) -> bool:
        return self.d0 is not None or (self.wavelength is not None and self.atom_radius is not None)

    def optical_density(self) -> float:
        if self.d0 is not None:
            return self.d0
        if self.wavelength is None or self.atom_radius is None:
            raise DomainError("need either d0 or both wavelength and atom_radius")
        return optical_density(self.waist_ratio, self.wavelength, self.atom_radius)


def total_phase(params: CavityParams) -> float:
    return params.finesse * single_pass_phase(params.optical_density(), params.detuning_ratio)


def scattered_photons(params: CavityParams) -> float:
    return params.photon_number * params.finesse / params.detuning_ratio**2


def photon_window(finesse: float, detuning_ratio: float) -> tuple[float, float] | None:
    """Open interval of photon numbers meeting both conditions, or None if empty."""
    if detuning_ratio == 0:
        raise SingularityError("detuning ratio must be non-zero")
    n_min = detuning_ratio**2 / finesse**2
    n_max = detuning_ratio**2 / finesse
    return (n_min, n_max) if n_min < n_max else None


def phase_threshold(params: CavityParams) -> float:
    """Photon number above which |phi| > k/sqrt(N) holds exactly."""
    phi = total_phase(params)
    if phi == 0:
        return math.inf
    return (params.k / phi) ** 2


@dataclass(frozen=True)
class FeasibilityReport:
    phi: float | None
    delta_phi: float
    n_sc: float
    condition_i: bool
    condition_ii: bool
    window: tuple[float, float] | None
    phase_resolved: bool | None
    notes: tuple[str, ...] = UNMODELED

    @property
    def feasible(self) -> bool:
        return self.condition_i and self.condition_ii


def feasibility(params: CavityParams) -> FeasibilityReport:
    """Evaluate both detection conditions at ``params.photon_number``.

    ``condition_i`` uses the simplified bound N > (delta/Gamma)^2/f^2.
    ``phase_resolved`` is the direct comparison |phi| > dphi, available only
    when an optical density can be formed; the two agree only up to the
    normalization of D0 (they coincide for D0 = 4).
    """
    n = params.photon_number
    f = params.finesse
    ratio = params.detuning_ratio
    delta_phi = phase_uncertainty(n, params.k) if n > 0 else math.inf
    n_sc = scattered_photons(params)
    phi = total_phase(params) if params.has_optical_density else None
    return FeasibilityReport(
        phi=phi,
        delta_phi=delta_phi,
        n_sc=n_sc,
        condition_i=n > ratio**2 / f**2,
        condition_ii=n_sc < 1,
        window=photon_window(f, ratio),
        phase_resolved=None if phi is None else abs(phi) > delta_phi,
    )

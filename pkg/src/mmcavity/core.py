"""Domain types and Gaussian-beam geometry of a symmetric two-mirror cavity.

Unit conventions
----------------
Lengths are in meters, temperatures in kelvin, magnetic fields in tesla.
All frequencies and rates handled by the library are *angular* (rad/s);
conversion to ordinary frequency (Hz) happens only at file and CLI
boundaries. Names follow suit: ``omega`` for angular frequency, ``kappa``
for an angular energy decay rate.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import constants as const
from .errors import CavityError, UnstableGeometryError

POLARIZATIONS = ("x", "y", "R", "L")


@dataclass(frozen=True)
class CavityGeometry:
    """Symmetric Fabry-Perot cavity with (possibly toroidal) mirrors.

    The two principal curvature radii are stored as their harmonic mean
    ``mean_curvature_R`` and the astigmatism ``astigmatism_eta`` =
    (R_y - R_x)/(R_y + R_x), which are the natural fit parameters.

    Parameters
    ----------
    length_L : float
        Mirror spacing, m.
    mean_curvature_R : float
        Harmonic mean of R_x and R_y, m.
    astigmatism_eta : float
        Dimensionless astigmatism, |eta| < 1.
    aspheric_p : float
        Fourth-order mirror shape coefficient (0 sphere, 1 paraboloid).
    mirror_radius_rm : float, optional
        Transverse mirror radius, m. Only needed for clipping and NA.
    """

    length_L: float
    mean_curvature_R: float
    astigmatism_eta: float = 0.0
    aspheric_p: float = 0.0
    mirror_radius_rm: Optional[float] = None

    def __post_init__(self):
        if not self.length_L > 0:
            raise CavityError(f"length_L must be positive, got {self.length_L!r}")
        if not self.mean_curvature_R > 0:
            raise CavityError(f"mean_curvature_R must be positive, got {self.mean_curvature_R!r}")
        if not abs(self.astigmatism_eta) < 1:
            raise CavityError(f"|astigmatism_eta| must be < 1, got {self.astigmatism_eta!r}")
        if self.mirror_radius_rm is not None and not self.mirror_radius_rm > 0:
            raise CavityError(f"mirror_radius_rm must be positive, got {self.mirror_radius_rm!r}")

    @classmethod
    def from_radii(cls, length_L, R_x, R_y, aspheric_p=0.0, mirror_radius_rm=None):
        """Build from the two principal curvature radii."""
        mean_R = 2 * R_x * R_y / (R_x + R_y)
        eta = (R_y - R_x) / (R_y + R_x)
        return cls(length_L, mean_R, eta, aspheric_p, mirror_radius_rm)

    @classmethod
    def from_gbar(cls, gbar, mean_curvature_R, **kwargs):
        """Build from the stability parameter g = 1 - L/R and R."""
        return cls(mean_curvature_R * (1 - gbar), mean_curvature_R, **kwargs)

    @property
    def R_x(self):
        return self.mean_curvature_R / (1 + self.astigmatism_eta)

    @property
    def R_y(self):
        return self.mean_curvature_R / (1 - self.astigmatism_eta)

    @property
    def gbar(self):
        return derive_gbar(self)

    @property
    def is_stable(self):
        return -1 < self.gbar < 1

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return CavityGeometry(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {"length_L", "mean_curvature_R", "astigmatism_eta", "aspheric_p", "mirror_radius_rm"}
        missing = {"length_L", "mean_curvature_R"} - set(data)
        if missing:
            raise CavityError(f"geometry is missing field {sorted(missing)[0]!r}")
        unknown = set(data) - known
        if unknown:
            raise CavityError(f"geometry has unknown field {sorted(unknown)[0]!r}")
        kwargs = {}
        for name, value in data.items():
            if value is None and name == "mirror_radius_rm":
                kwargs[name] = None
                continue
            try:
                kwargs[name] = float(value)
            except (TypeError, ValueError):
                raise CavityError(f"geometry field {name!r} is not a number: {value!r}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class GaussianModeParams:
    """Fundamental Gaussian mode quantities at one wavelength.

    ``gamma_scale`` is w1/sqrt(2), the length unit of the transverse ladder
    operators; ``expansion_alpha`` = w1/w0.
    """

    waist_w0: float
    mirror_spot_w1: float
    rayleigh_zR: float
    expansion_alpha: float
    gamma_scale: float
    gbar: float
    wavelength: float


@dataclass(frozen=True)
class ModeLabel:
    """Laguerre-Gauss style mode label.

    ``angular_l`` is n+ - n-, ``radial_p`` is min(n+, n-), and the transverse
    order is N = 2p + |l|.
    """

    longitudinal_q: int
    transverse_N: int
    angular_l: int
    radial_p: int
    polarization: str

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise CavityError(f"polarization must be one of {POLARIZATIONS}, got {self.polarization!r}")
        if self.transverse_N < 0 or self.radial_p < 0:
            raise CavityError("transverse_N and radial_p must be non-negative")
        if self.transverse_N != 2 * self.radial_p + abs(self.angular_l):
            raise CavityError(f"inconsistent label: N={self.transverse_N} but 2p+|l|={2 * self.radial_p + abs(self.angular_l)}")
        if self.longitudinal_q < 1:
            raise CavityError(f"longitudinal_q must be >= 1, got {self.longitudinal_q}")

    @property
    def spin(self):
        """+1 for R, -1 for L, 0 for linear polarizations."""
        return {"R": 1, "L": -1}.get(self.polarization, 0)


@dataclass(frozen=True)
class ModeLine:
    """One predicted or measured cavity mode.

    ``omega`` is the angular frequency. ``composition`` pairs circular-basis
    labels with power fractions; ``label`` is the dominant assignment.
    """

    omega: float
    composition: tuple = ()
    label: Optional[ModeLabel] = None
    finesse: Optional[float] = None
    coupling_sqrt_k1k2: Optional[float] = None

    def __post_init__(self):
        if self.composition:
            total = sum(frac for _, frac in self.composition)
            if abs(total - 1) > 1e-9:
                raise CavityError(f"composition power fractions sum to {total}, not 1")

    @property
    def frequency_hz(self):
        return self.omega / (2 * math.pi)


@dataclass(frozen=True)
class MaterialProps:
    """Superconducting film constants.

    Parameters
    ----------
    normal_resistivity_rho_n : float
        Normal-state resistivity just above Tc, ohm m.
    gap_over_kB : float
        Superconducting gap Delta/k_B, K.
    critical_T : float
        Transition temperature, K.
    lambda_pure_0 : float
        Clean-limit London penetration depth at T = 0, m.
    xi0 : float
        Clean-limit coherence length, m.
    carrier_density_n0 : float
        Conduction electron density, 1/m^3.
    """

    normal_resistivity_rho_n: float
    gap_over_kB: float
    critical_T: float
    lambda_pure_0: float
    xi0: float
    carrier_density_n0: float = 5.56e28

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise CavityError(f"material field {name!r} must be positive, got {value!r}")
        if not self.gap_over_kB < 3 * self.critical_T:
            raise CavityError("gap_over_kB must be below 3 * critical_T")

    def replace(self, **changes):
        values = asdict(self)
        values.update(changes)
        return MaterialProps(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except TypeError as exc:
            raise CavityError(f"bad material definition: {exc}") from None


MATERIAL_PRESETS = {
    "niobium-film": MaterialProps(
        normal_resistivity_rho_n=2.8e-9,
        gap_over_kB=17.67,
        critical_T=9.2,
        lambda_pure_0=37e-9,
        xi0=40e-9,
        carrier_density_n0=5.56e28,
    ),
}


def load_material(spec):
    """Resolve a preset name, a dict, or a path to a JSON file into MaterialProps."""
    if isinstance(spec, MaterialProps):
        return spec
    if isinstance(spec, dict):
        return MaterialProps.from_dict(spec)
    if spec in MATERIAL_PRESETS:
        return MATERIAL_PRESETS[spec]
    path = Path(spec)
    if path.exists():
        return MaterialProps.from_dict(json.loads(path.read_text()))
    raise CavityError(f"unknown material preset or file: {spec!r}")


def derive_gbar(geometry):
    """Stability parameter g = 1 - L/R."""
    return 1.0 - geometry.length_L / geometry.mean_curvature_R


def _check_stable(gbar):
    if not -1 < gbar < 1:
        raise UnstableGeometryError(f"unstable geometry: g = {gbar:.6g} is outside (-1, 1)")


def rayleigh_range(length_L, gbar):
    """zR = (L/2) sqrt((1+g)/(1-g)) for a symmetric resonator."""
    _check_stable(gbar)
    return 0.5 * length_L * math.sqrt((1 + gbar) / (1 - gbar))


def expansion_alpha(gbar):
    """w1/w0 = sqrt(1 + (L/2zR)^2) = sqrt(2/(1+g))."""
    _check_stable(gbar)
    return math.sqrt(2.0 / (1.0 + gbar))


def derive_gaussian_params(geometry, omega):
    """Gaussian TEM00 beam parameters of ``geometry`` at angular frequency ``omega``.

    Raises
    ------
    UnstableGeometryError
        If |g| >= 1.
    """
    gbar = derive_gbar(geometry)
    z_r = rayleigh_range(geometry.length_L, gbar)
    wavelength = 2 * math.pi * const.c / omega
    w0 = math.sqrt(z_r * wavelength / math.pi)
    alpha = math.sqrt(1 + (geometry.length_L / (2 * z_r)) ** 2)
    w1 = alpha * w0
    return GaussianModeParams(
        waist_w0=w0,
        mirror_spot_w1=w1,
        rayleigh_zR=z_r,
        expansion_alpha=alpha,
        gamma_scale=w1 / math.sqrt(2),
        gbar=gbar,
        wavelength=wavelength,
    )


def mode_volume(geometry, omega):
    """TEM00 mode volume (pi/4) w0^2 L."""
    params = derive_gaussian_params(geometry, omega)
    return math.pi / 4 * params.waist_w0 ** 2 * geometry.length_L


def free_spectral_range(length_L, c=const.c):
    """Angular free spectral range 2 pi c / 2L (rad/s)."""
    if not length_L > 0:
        raise CavityError("length_L must be positive")
    return math.pi * c / length_L


def finesse_from_linewidth(kappa, fsr):
    """F = FSR / kappa. Both arguments in the same units (angular or not)."""
    if not kappa > 0:
        raise CavityError("kappa must be positive")
    return fsr / kappa


def linewidth_from_finesse(finesse, fsr):
    return fsr / finesse


def hz(omega):
    """Angular frequency to Hz."""
    return omega / (2 * math.pi)


def rad(freq_hz):
    """Hz to angular frequency."""
    return 2 * math.pi * freq_hz

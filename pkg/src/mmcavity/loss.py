"""Loss channels of a superconducting Fabry-Perot cavity expressed as finesse
limits: clipping, surface roughness, BCS surface resistance and trapped
vortices, plus fits of finesse against temperature and frequency.

Channels combine as 1/F = sum_j 1/F_j. A surface resistance R_s on both
mirrors limits the finesse to F = pi Z0 / (4 R_s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from . import constants as const
from .core import MATERIAL_PRESETS, CavityGeometry, MaterialProps, derive_gaussian_params
from .errors import CavityError, ConvergenceError, IdentifiabilityError

UNBOUNDED = math.inf
# Fermi-factor differences below this fraction of their peak are dropped
_FERMI_CUTOFF = 1e-18


def clipping_finesse(mirror_radius_rm, spot_w):
    """Finesse limit pi exp(2 r^2 / w^2) of a mirror of radius r."""
    if mirror_radius_rm < 0 or not spot_w > 0:
        raise CavityError("mirror radius must be >= 0 and spot size > 0")
    exponent = 2 * (mirror_radius_rm / spot_w) ** 2
    return math.pi * math.exp(exponent) if exponent < 700 else math.inf


def roughness_finesse(wavenumber_k, h_rms):
    """Diffuse-scattering finesse limit pi / (4 k^2 h^2); inf for h = 0."""
    if wavenumber_k < 0 or h_rms < 0:
        raise CavityError("k and h_rms must be non-negative")
    if h_rms == 0 or wavenumber_k == 0:
        return UNBOUNDED
    return math.pi / (4 * wavenumber_k ** 2 * h_rms ** 2)


def finesse_from_surface_resistance(Rs):
    """F = pi Z0 / (4 Rs)."""
    if not Rs > 0:
        raise CavityError("surface resistance must be positive")
    return math.pi * const.Z_0 / (4 * Rs)


def surface_resistance_from_finesse(finesse):
    if not finesse > 0:
        raise CavityError("finesse must be positive")
    return math.pi * const.Z_0 / (4 * finesse)


def geometry_factor(wavenumber_k, length_L):
    """G = k L Z0 / 4, so that Q = G / Rs."""
    return wavenumber_k * length_L * const.Z_0 / 4


def bcs_conductivity_ratio(T, omega, gap_over_kB, epsrel=1e-10):
    """Normal-fluid conductivity ratio sigma_1 / sigma_n from BCS theory.

    Evaluates

        (2 / hbar w) int_D^inf (e^2 + D^2 + hbar w e) [f(e) - f(e + hbar w)]
                               / sqrt(e^2 - D^2) / sqrt((e + hbar w)^2 - D^2) de

    after the substitution e = D cosh u, which removes the inverse square
    root at the gap edge, with adaptive quadrature.

    Parameters
    ----------
    T : float
        Temperature, K.
    omega : float
        Angular drive frequency, rad/s.
    gap_over_kB : float
        Gap Delta / k_B, K.

    Raises
    ------
    CavityError
        If hbar omega >= 2 Delta (direct pair breaking) or T <= 0.
    """
    if not T > 0:
        raise CavityError("temperature must be positive")
    if not omega > 0:
        raise CavityError("omega must be positive")
    kT = const.k_B * T
    gap = const.k_B * gap_over_kB
    hw = const.hbar * omega
    if hw >= 2 * gap:
        raise CavityError("hbar*omega >= 2*Delta: drive breaks Cooper pairs directly")
    x0 = gap / kT
    w = hw / kT
    d = gap / kT
    x_max = x0 + math.log(1 / _FERMI_CUTOFF)
    u_max = math.acosh(x_max / d)

    # exp(-x0) is factored out of the Fermi difference to avoid underflow
    def scaled(u):
        x = d * math.cosh(u)
        num = x * x + d * d + w * x
        den = math.sqrt((x + w) ** 2 - d * d)
        ex = math.exp(-x)
        diff = math.exp(-(x - x0)) * (-math.expm1(-w)) / ((1 + ex) * (1 + ex * math.exp(-w)))
        return num / den * diff

    value, _ = quad(scaled, 0.0, u_max, epsrel=epsrel, epsabs=0.0, limit=200)
    # integral was in units of kT; dividing by w = hbar omega / kT gives the ratio
    return 2.0 / w * value * math.exp(-x0)


def mean_free_path(material):
    """Drude mean free path p_F / (n0 e^2 rho_n)."""
    n0 = material.carrier_density_n0
    p_F = const.hbar * (3 * math.pi ** 2 * n0) ** (1 / 3)
    return p_F / (n0 * const.e ** 2 * material.normal_resistivity_rho_n)


def coherence_length(material):
    """Effective coherence length with 1/xi = 1/xi0 + 1/ell."""
    return 1.0 / (1.0 / material.xi0 + 1.0 / mean_free_path(material))


def purity_factor(a):
    """lambda / lambda_pure for impurity parameter a = pi xi0 / (2 ell)."""
    if a < 0:
        raise CavityError("impurity parameter must be non-negative")
    if a == 0:
        return 1.0
    if a < 1:
        g = math.acos(a) / math.sqrt(1 - a * a)
    elif a == 1:
        g = 1.0
    else:
        g = math.acosh(a) / math.sqrt(a * a - 1)
    if a < 1e-4:
        # series for small a avoids cancellation
        inv = 1 - math.pi * a / 4 + (2 / 3) * a * a
    else:
        inv = (math.pi / 2 - g) / a
    return 1.0 / math.sqrt(inv)


def penetration_depth(material, T, mean_free_path_ell=None):
    """Penetration depth including impurity and temperature corrections.

    lambda(T) = lambda_pure_0 * purity_factor(a) * [1 - (T/Tc)^4]^(-1/2).
    """
    if T < 0 or T >= material.critical_T:
        raise CavityError(f"temperature {T} K outside [0, Tc = {material.critical_T} K)")
    ell = mean_free_path(material) if mean_free_path_ell is None else mean_free_path_ell
    a = math.pi * material.xi0 / (2 * ell) if math.isfinite(ell) else 0.0
    return material.lambda_pure_0 * purity_factor(a) / math.sqrt(1 - (T / material.critical_T) ** 4)


def bcs_surface_resistance(material, T, omega):
    """R_BCS = mu0^2 omega^2 lambda(T)^3 / (2 rho_n) * sigma_1/sigma_n."""
    lam = penetration_depth(material, T)
    ratio = bcs_conductivity_ratio(T, omega, material.gap_over_kB)
    return const.mu_0 ** 2 * omega ** 2 * lam ** 3 / (2 * material.normal_resistivity_rho_n) * ratio


def vortex_resistance_limit(material, B_perp, xi=None, lam=None):
    """High-frequency trapped-flux surface resistance pi xi^2 rho_n B / (lambda Phi0).

    ``xi`` and ``lam`` default to :func:`coherence_length` and the T = 0
    :func:`penetration_depth`.
    """
    if B_perp < 0:
        raise CavityError("B_perp must be non-negative")
    xi = coherence_length(material) if xi is None else xi
    lam = penetration_depth(material, 0.0) if lam is None else lam
    return math.pi * xi ** 2 * material.normal_resistivity_rho_n * B_perp / (lam * const.phi_0)


def vortex_crossover_frequency(material, xi=None, lam=None):
    """omega_lambda = g rho_n xi^2 / (2 mu0 lambda^4), g = 1/2 + ln(lambda/xi)."""
    xi = coherence_length(material) if xi is None else xi
    lam = penetration_depth(material, 0.0) if lam is None else lam
    g = 0.5 + math.log(lam / xi)
    return g * material.normal_resistivity_rho_n * xi ** 2 / (2 * const.mu_0 * lam ** 4)


@dataclass(frozen=True)
class LossBudget:
    """Named finesse limits and their combination."""

    channels: tuple
    total_finesse: float

    def to_dict(self):
        return {name: value for name, value in self.channels}


def combine_losses(channels):
    """Combine finesse limits as 1/F = sum 1/F_j.

    ``channels`` is a mapping or a sequence of (name, finesse). Infinite
    entries contribute nothing.
    """
    items = list(channels.items()) if isinstance(channels, dict) else [tuple(c) for c in channels]
    if not items:
        raise CavityError("no loss channels given")
    inverse = 0.0
    for name, value in items:
        if not value > 0:
            raise CavityError(f"channel {name!r} has non-positive finesse {value!r}")
        inverse += 0.0 if math.isinf(value) else 1.0 / value
    total = math.inf if inverse == 0 else 1.0 / inverse
    return LossBudget(tuple((str(n), float(v)) for n, v in items), total)


def inverse_variance_mean(values, sigmas):
    """Inverse-variance weighted mean and its standard error."""
    values = np.asarray(values, dtype=float)
    w = 1.0 / np.asarray(sigmas, dtype=float) ** 2
    return float(np.sum(w * values) / np.sum(w)), float(1 / math.sqrt(np.sum(w)))


@dataclass(frozen=True)
class TemperatureFit:
    """Residual resistance and pure penetration depth from F(T)."""

    R0: float
    lambda_pure_0: float
    stderr_R0: float
    stderr_lambda_pure_0: float
    covariance: np.ndarray


def finesse_vs_temperature_model(T, R0, lambda_pure_0, omega, material):
    mat = material.replace(lambda_pure_0=lambda_pure_0)
    return np.array([
        finesse_from_surface_resistance(R0 + bcs_surface_resistance(mat, t, omega)) for t in np.atleast_1d(T)
    ])


def fit_finesse_vs_temperature(data, omega, material=None, R0_guess=None, lambda_guess=50e-9, sigma_rel=None):
    """Fit F(T) = pi Z0 / 4 (R0 + R_BCS(T; lambda_pure_0)).

    Parameters
    ----------
    data : sequence of (T, F)
    omega : float
        Angular frequency of the mode.
    material : MaterialProps, optional
        Supplies everything except lambda_pure_0; defaults to niobium film.
    sigma_rel : float, optional
        Relative finesse uncertainty. If omitted it is estimated from the
        residuals.

    Raises
    ------
    IdentifiabilityError
        If the data carry no temperature dependence, so lambda_pure_0 is
        unconstrained.
    """
    material = MATERIAL_PRESETS["niobium-film"] if material is None else material
    T = np.array([d[0] for d in data], dtype=float)
    F = np.array([d[1] for d in data], dtype=float)
    if len(T) < 3:
        raise CavityError("need at least 3 (T, F) points")
    if np.any(T >= material.critical_T) or np.any(T <= 0):
        raise CavityError("temperatures must lie in (0, Tc)")
    if T.max() / T.min() < 3:
        raise CavityError("data must span at least a factor 3 in temperature")
    if R0_guess is None:
        R0_guess = surface_resistance_from_finesse(F.max())

    def resid(x):
        R0, lam = math.exp(x[0]), math.exp(x[1])
        return np.log(finesse_vs_temperature_model(T, R0, lam, omega, material) / F)

    sol = least_squares(resid, [math.log(R0_guess), math.log(lambda_guess)], method="lm", xtol=1e-12, ftol=1e-14, max_nfev=400)
    R0, lam = math.exp(sol.x[0]), math.exp(sol.x[1])
    J = sol.jac
    dof = max(len(T) - 2, 1)
    s2 = sigma_rel ** 2 if sigma_rel is not None else 2 * sol.cost / dof
    _, sv, _ = np.linalg.svd(J)
    # the BCS share at the hottest point decides whether lambda is constrained
    mat = material.replace(lambda_pure_0=lam)
    bcs_share = bcs_surface_resistance(mat, T.max(), omega) / R0
    if sv[-1] < 1e-8 * sv[0] or bcs_share < 1e-6:
        raise IdentifiabilityError("lambda_pure_0", "data show no BCS temperature dependence; lambda_pure_0 is unconstrained")
    cov_log = np.linalg.inv(J.T @ J) * s2
    scale = np.array([R0, lam])
    cov = cov_log * np.outer(scale, scale)
    if sol.status == 0:
        raise ConvergenceError("temperature fit did not converge", best=(R0, lam), diagnostics={"message": sol.message})
    return TemperatureFit(R0, lam, float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1])), cov)


@dataclass(frozen=True)
class FrequencyFit:
    """Plateau finesse and effective mode expansion from F(omega)."""

    F_lim: float
    b: float
    stderr_F_lim: float
    stderr_b: float
    covariance: np.ndarray


def finesse_vs_frequency_model(omega, F_lim, b, geometry):
    """1/F = 1/F_lim + 1/(pi exp(2 rm^2 / (b w1(omega))^2))."""
    rm = geometry.mirror_radius_rm
    out = []
    for w in np.atleast_1d(omega):
        w1 = derive_gaussian_params(geometry, w).mirror_spot_w1
        out.append(1.0 / (1.0 / F_lim + 1.0 / clipping_finesse(rm, b * w1)))
    return np.array(out)


def fit_finesse_vs_frequency(data, geometry, F_lim_guess=None, b_guess=1.0, sigma_rel=None):
    """Fit the plateau finesse F_lim and expansion factor b.

    Parameters
    ----------
    data : sequence of (omega, F)
    geometry : CavityGeometry
        Must carry ``mirror_radius_rm``.
    """
    if geometry.mirror_radius_rm is None:
        raise CavityError("geometry needs mirror_radius_rm for the clipping term")
    om = np.array([d[0] for d in data], dtype=float)
    F = np.array([d[1] for d in data], dtype=float)
    if len(om) < 3:
        raise CavityError("need at least 3 (omega, F) points")
    if F_lim_guess is None:
        F_lim_guess = F.max()

    def resid(x):
        return np.log(finesse_vs_frequency_model(om, math.exp(x[0]), math.exp(x[1]), geometry) / F)

    sol = least_squares(resid, [math.log(F_lim_guess), math.log(b_guess)], method="lm", xtol=1e-14, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if sol.status == 0:
        raise ConvergenceError("frequency fit did not converge", best=np.exp(sol.x), diagnostics={"message": sol.message})
    F_lim, b = (float(v) for v in np.exp(sol.x))
    J = sol.jac
    dof = max(len(om) - 2, 1)
    s2 = sigma_rel ** 2 if sigma_rel is not None else 2 * sol.cost / dof
    try:
        cov_log = np.linalg.inv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov_log = np.full((2, 2), np.nan)
    scale = np.array([F_lim, b])
    cov = cov_log * np.outer(scale, scale)
    return FrequencyFit(F_lim, b, float(math.sqrt(abs(cov[0, 0]))), float(math.sqrt(abs(cov[1, 1]))), cov)


def loss_budget(material, T, omega, B_perp=0.0, h_rms=0.0, geometry=None):
    """Finesse budget of the BCS, vortex, roughness and (if sized) clipping channels."""
    k = omega / const.c
    channels = [
        ("bcs", finesse_from_surface_resistance(bcs_surface_resistance(material, T, omega))),
        ("flux", finesse_from_surface_resistance(vortex_resistance_limit(material, B_perp)) if B_perp > 0 else UNBOUNDED),
        ("roughness", roughness_finesse(k, h_rms)),
    ]
    if geometry is not None and geometry.mirror_radius_rm is not None:
        w1 = derive_gaussian_params(geometry, omega).mirror_spot_w1
        channels.append(("clipping", clipping_finesse(geometry.mirror_radius_rm, w1)))
    return combine_losses(channels)

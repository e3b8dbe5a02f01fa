"""Atom-cavity coupling parameters for circular Rydberg transitions.

Rates are angular (rad/s). Dipoles are in C m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .. import constants as const
from ..errors import CavityError


@dataclass(frozen=True)
class TransitionParams:
    """Atomic transition coupled to the cavity.

    Attributes
    ----------
    omega : float
        Angular transition frequency.
    dipole : float
        Transition dipole moment |d|, C m.
    polarization_overlap2 : float
        |eps_atom . eps_cavity|^2 in [0, 1].
    branching_ratio : float
        Fraction of spontaneous decay into the cavity-coupled channel.
    dipole_asymptotic : float, optional
        Large-n estimate n^2 e a0 / sqrt(2), for comparison.
    """

    omega: float
    dipole: float
    polarization_overlap2: float = 0.5
    branching_ratio: float = 1.0
    dipole_asymptotic: float = None

    def __post_init__(self):
        if not (self.omega > 0 and self.dipole > 0):
            raise CavityError("omega and dipole must be positive")
        if not 0 <= self.polarization_overlap2 <= 1:
            raise CavityError("polarization overlap must lie in [0, 1]")
        if not 0 < self.branching_ratio <= 1:
            raise CavityError("branching ratio must lie in (0, 1]")

    @property
    def wavelength(self):
        return 2 * math.pi * const.c / self.omega


def rydberg_frequency(n_upper, rydberg=const.rydberg):
    """Angular frequency of the n -> n-1 hydrogenic transition."""
    n = n_upper
    return 2 * math.pi * const.c * rydberg * (1 / (n - 1) ** 2 - 1 / n ** 2)


def circular_radial_integral(n_upper):
    """<n-1, l=n-2 | r | n, l=n-1> in units of a0 for hydrogen.

    Both radial functions are single power laws times exponentials,
    R_n(r) = N_n r^(n-1) exp(-r/n) with N_n^2 = (2/n)^(2n+1) / (2n)!, so the
    integral has the closed form N_(n-1) N_n (2n)! / beta^(2n+1) with
    beta = 1/(n-1) + 1/n. Evaluated in logarithms to avoid overflow.
    """
    n = n_upper
    if n < 3:
        raise CavityError("n_upper must be >= 3")

    def log_norm(k):
        return 0.5 * ((2 * k + 1) * math.log(2 / k) - math.lgamma(2 * k + 1))

    beta = 1 / (n - 1) + 1 / n
    return math.exp(log_norm(n - 1) + log_norm(n) + math.lgamma(2 * n + 1) - (2 * n + 1) * math.log(beta))


def circular_angular_factor(l_upper):
    """|<l-1, l-1 | (x + i y)/(sqrt 2 r) ... | l, l>| for the stretched sigma transition.

    Equals sqrt(l / (2l + 1)) between maximal-m states.
    """
    return math.sqrt(l_upper / (2 * l_upper + 1))


def rydberg_circular_transition(n_upper, polarization_overlap2=0.5, branching_ratio=1.0):
    """Circular-to-circular transition nC -> (n-1)C.

    The dipole is the exact hydrogenic radial integral times the
    stretched-state angular factor; the asymptotic n^2 e a0 / sqrt(2) is
    attached for reference.
    """
    n = int(n_upper)
    if n < 3:
        raise CavityError("n_upper must be >= 3")
    d = const.e * const.a_0 * circular_radial_integral(n) * circular_angular_factor(n - 1)
    return TransitionParams(
        omega=rydberg_frequency(n),
        dipole=d,
        polarization_overlap2=polarization_overlap2,
        branching_ratio=branching_ratio,
        dipole_asymptotic=const.e * const.a_0 * n ** 2 / math.sqrt(2),
    )


def vacuum_field_rms(omega, mode_volume):
    """Single-photon rms field sqrt(hbar omega / (2 eps0 V)), V/m."""
    if not (omega > 0 and mode_volume > 0):
        raise CavityError("omega and mode volume must be positive")
    return math.sqrt(const.hbar * omega / (2 * const.epsilon_0 * mode_volume))


def vacuum_rabi(dipole, omega, mode_volume, polarization_overlap2=1.0):
    """g = |d| E_rms sqrt(overlap^2) / hbar, rad/s."""
    if dipole < 0 or not 0 <= polarization_overlap2 <= 1:
        raise CavityError("dipole must be >= 0 and overlap in [0, 1]")
    return abs(dipole) * vacuum_field_rms(omega, mode_volume) * math.sqrt(polarization_overlap2) / const.hbar


def spontaneous_rate(dipole, omega):
    """Free-space emission rate |d|^2 omega^3 / (3 pi eps0 hbar c^3), rad/s."""
    return dipole ** 2 * omega ** 3 / (3 * math.pi * const.epsilon_0 * const.hbar * const.c ** 3)


def cooperativity(finesse, wavelength, rayleigh_zR, polarization_overlap2=1.0, branching_ratio=1.0):
    """eta = (6 / pi^2) (F lambda / zR) overlap^2 branching."""
    if not (finesse > 0 and wavelength > 0 and rayleigh_zR > 0):
        raise CavityError("finesse, wavelength and zR must be positive")
    return 6 / math.pi ** 2 * finesse * wavelength / rayleigh_zR * polarization_overlap2 * branching_ratio


def cooperativity_from_rates(g, kappa, gamma):
    """eta = 4 g^2 / (kappa Gamma)."""
    return 4 * g ** 2 / (kappa * gamma)


def special_detunings(m, g):
    """Detuning and time at which m precessions give an exact iSWAP.

    Delta_m = g (m-1) sqrt(8 / (2m - 1)) and t_m = 2 pi (m-1) / Delta_m.
    """
    if int(m) != m or m < 2:
        raise CavityError("m must be an integer >= 2")
    if not g > 0:
        raise CavityError("g must be positive")
    delta = g * (m - 1) * math.sqrt(8 / (2 * m - 1))
    return delta, 2 * math.pi * (m - 1) / delta


@dataclass(frozen=True)
class DispersiveEstimate:
    epsilon: float
    delta_opt: float
    epsilon_min: float
    eta_bar: float


def dispersive_error_estimates(g, kappa, gamma_bar, delta):
    """Dispersive-limit iSWAP error pi (kappa/(2 Delta) + Gamma Delta / g^2) and its optimum.

    Returns
    -------
    DispersiveEstimate
        ``delta_opt`` = g sqrt(kappa / (2 Gamma)) and ``epsilon_min`` =
        2 pi sqrt(2 / eta_bar) with eta_bar = 4 g^2 / (kappa Gamma).
    """
    if not (g > 0 and kappa > 0 and gamma_bar > 0 and delta > 0):
        raise CavityError("g, kappa, gamma_bar and delta must be positive")
    eta_bar = cooperativity_from_rates(g, kappa, gamma_bar)
    return DispersiveEstimate(
        epsilon=math.pi * (kappa / (2 * delta) + gamma_bar * delta / g ** 2),
        delta_opt=g * math.sqrt(kappa / (2 * gamma_bar)),
        epsilon_min=error_from_cooperativity(eta_bar),
        eta_bar=eta_bar,
    )


def error_from_cooperativity(eta_bar):
    """Optimal dispersive gate error 2 pi sqrt(2 / eta_bar)."""
    return 2 * math.pi * math.sqrt(2 / eta_bar)

"""Physical constants (CODATA, via :mod:`scipy.constants`).

Everything in the package pulls its constants from here so that a single
source defines c, hbar, and friends.
"""
import scipy.constants as _sc

c = _sc.c
hbar = _sc.hbar
h = _sc.h
epsilon_0 = _sc.epsilon_0
mu_0 = _sc.mu_0
k_B = _sc.k
e = _sc.e
a_0 = _sc.physical_constants["Bohr radius"][0]
rydberg = _sc.Rydberg  # R_inf, 1/m
phi_0 = _sc.physical_constants["mag. flux quantum"][0]

# free-space wave impedance mu_0 c
Z_0 = mu_0 * c

GAUSS = 1e-4  # tesla

"""Post-paraxial mode spectrum of a symmetric, weakly astigmatic cavity.

The round-trip phase operator is assembled from circular ladder operators
a+ and a- acting on a two-oscillator Fock space, tensored with the circular
polarization space {R, L}. Only couplings inside a fixed transverse order
N = n+ + n- are kept, so the operator splits into blocks of dimension
2(N + 1). An eigenvalue phi of a block maps to the angular frequency

    omega = omega_FSR * (q + phi / 2 pi),      omega_FSR = pi c / L.

Basis ordering inside a block is fixed: n+ ascending (n- = N - n+), and for
each spatial state R before L.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import constants as const
from .core import (
    CavityGeometry,
    ModeLabel,
    ModeLine,
    derive_gbar,
    expansion_alpha,
    free_spectral_range,
)
from .errors import CavityError

N_MAX_DEFAULT = 8
N_MAX_CAP = 16
_GUARD = 4
_POLS = ("R", "L")


@dataclass(frozen=True)
class HamiltonianBlock:
    """Round-trip phase operator restricted to one transverse order.

    Attributes
    ----------
    transverse_N : int
    basis : tuple of (n_plus, n_minus, polarization)
    matrix : ndarray, complex, shape (2(N+1), 2(N+1))
    wavenumber_k : float
        Wavenumber (1/m) at which the post-paraxial terms were evaluated.
    geometry : CavityGeometry
    """

    transverse_N: int
    basis: tuple
    matrix: np.ndarray
    wavenumber_k: float
    geometry: CavityGeometry

    @property
    def dimension(self):
        return len(self.basis)


def _block_basis(N):
    return tuple((n_plus, N - n_plus, pol) for n_plus in range(N + 1) for pol in _POLS)


@lru_cache(maxsize=N_MAX_CAP + 1)
def _orbital_operators(N):
    """Dimensionless orbital operators projected onto the order-N subspace.

    Returns (Q4, P4, D2, Lz) as (N+1)x(N+1) arrays where
    Q4 = (X^2 + Y^2)^2, P4 = (Px^2 + Py^2)^2, D2 = X^2 - Y^2, Lz = n+ - n-.
    """
    M = N + _GUARD
    states = [(i, j) for i in range(M + 1) for j in range(M + 1 - i)]
    index = {s: k for k, s in enumerate(states)}
    dim = len(states)
    a_plus = np.zeros((dim, dim))
    a_minus = np.zeros((dim, dim))
    for (i, j), k in index.items():
        if i > 0:
            a_plus[index[(i - 1, j)], k] = math.sqrt(i)
        if j > 0:
            a_minus[index[(i, j - 1)], k] = math.sqrt(j)
    a_x = (a_plus + a_minus) / math.sqrt(2)
    a_y = 1j * (a_plus - a_minus) / math.sqrt(2)
    X = (a_x + a_x.conj().T) / math.sqrt(2)
    Y = (a_y + a_y.conj().T) / math.sqrt(2)
    Px = -1j * (a_x - a_x.conj().T) / math.sqrt(2)
    Py = -1j * (a_y - a_y.conj().T) / math.sqrt(2)
    r2 = X @ X + Y @ Y
    k2 = Px @ Px + Py @ Py
    sel = [index[(n_plus, N - n_plus)] for n_plus in range(N + 1)]
    grid = np.ix_(sel, sel)
    Q4 = (r2 @ r2)[grid]
    P4 = (k2 @ k2)[grid]
    D2 = (X @ X - Y @ Y)[grid]
    Lz = np.diag([2.0 * n_plus - N for n_plus in range(N + 1)])
    # symmetrize away rounding noise
    def herm(A):
        return 0.5 * (A + A.conj().T)
    return herm(Q4), herm(P4), herm(D2), Lz


_SZ = np.diag([1.0, -1.0])
_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_I2 = np.eye(2)


def _check_N(N):
    if int(N) != N or N < 0:
        raise CavityError(f"transverse_N must be a non-negative integer, got {N!r}")
    if N > N_MAX_CAP:
        raise CavityError(f"transverse_N={N} exceeds the cap of {N_MAX_CAP}")


def build_block_hamiltonian(geometry, wavenumber_k, transverse_N):
    """Round-trip phase operator for transverse order ``transverse_N``.

    Parameters
    ----------
    geometry : CavityGeometry
    wavenumber_k : float
        Wavenumber in 1/m used in the 1/(k R) post-paraxial terms.
    transverse_N : int
        Transverse order, at most ``N_MAX_CAP``.

    Returns
    -------
    HamiltonianBlock
        Its eigenvalues are round-trip phases in radians.
    """
    N = int(transverse_N)
    _check_N(transverse_N)
    if not wavenumber_k > 0:
        raise CavityError("wavenumber_k must be positive")
    gbar = derive_gbar(geometry)
    alpha2 = expansion_alpha(gbar) ** 2
    eta = geometry.astigmatism_eta
    p = geometry.aspheric_p
    kR = wavenumber_k * geometry.mean_curvature_R

    Q4, P4, D2, Lz = _orbital_operators(N)
    n_orb = N + 1
    I_orb = np.eye(n_orb)

    scalar = 2 * math.acos(gbar) * (N + 1)
    orbital_1k = alpha2 * P4 + (3 - alpha2) * Q4 - 4 * (N + 1) ** 2 * I_orb + (1 - alpha2) * p * Q4
    H = scalar * np.eye(2 * n_orb, dtype=complex)
    H += np.kron(orbital_1k, _I2) / (2 * kR)
    H += -2 / kR * (np.eye(2 * n_orb) + np.kron(Lz, _SZ))
    H += 2 * eta * math.sqrt(alpha2 - 1) * np.kron(D2, _I2)
    H += -2 * eta / kR * np.kron(I_orb, _SX)
    H = 0.5 * (H + H.conj().T)
    return HamiltonianBlock(N, _block_basis(N), H, float(wavenumber_k), geometry)


def paraxial_wavenumber(geometry, q, transverse_N, c=const.c):
    """k of the paraxial ladder omega_FSR (q + (N+1) acos(g)/pi) / c."""
    gbar = derive_gbar(geometry)
    fsr = free_spectral_range(geometry.length_L, c)
    omega = fsr * (q + (transverse_N + 1) * math.acos(gbar) / math.pi)
    return omega / c


def _eigh_definite_J(H, basis):
    """Eigen-decompose sector by sector in J = l + s (valid when eta = 0)."""
    J = np.array([(n_plus - n_minus) + (1 if pol == "R" else -1) for n_plus, n_minus, pol in basis])
    dim = len(basis)
    values = np.empty(dim)
    vectors = np.zeros((dim, dim), dtype=complex)
    col = 0
    for j in np.unique(J):
        idx = np.flatnonzero(J == j)
        w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
        for m in range(len(idx)):
            values[col] = w[m]
            vectors[idx, col] = v[:, m]
            col += 1
    return values, vectors


def _fix_phase(vectors):
    """Make the largest component of each eigenvector real and positive."""
    for m in range(vectors.shape[1]):
        v = vectors[:, m]
        k = np.argmax(np.abs(v))
        vectors[:, m] = v * (abs(v[k]) / v[k])
    return vectors


def diagonalize_block(block):
    """Eigenphases (ascending) and phase-fixed eigenvectors of a block."""
    if block.geometry.astigmatism_eta == 0:
        values, vectors = _eigh_definite_J(block.matrix, block.basis)
    else:
        values, vectors = np.linalg.eigh(block.matrix)
    order = np.argsort(values, kind="stable")
    return values[order], _fix_phase(vectors[:, order])


def _label_for(q, n_plus, n_minus, pol):
    l = n_plus - n_minus
    return ModeLabel(q, n_plus + n_minus, l, min(n_plus, n_minus), pol)


def _dominant_label(q, basis, vec):
    power = np.abs(vec) ** 2
    N = basis[0][0] + basis[0][1]
    spatial = power.reshape(N + 1, 2).sum(axis=1)
    n_plus = int(np.argmax(spatial))
    pair = vec.reshape(N + 1, 2)[n_plus]
    pr, pl = abs(pair[0]) ** 2, abs(pair[1]) ** 2
    total = pr + pl
    sz = (pr - pl) / total
    if abs(sz) > 0.5:
        pol = "R" if sz > 0 else "L"
    else:
        # <Sx> > 0 is x polarization
        sx = 2 * (pair[0].conjugate() * pair[1]).real / total
        pol = "x" if sx > 0 else "y"
    return _label_for(q, n_plus, N - n_plus, pol)


def solve_block(block, longitudinal_q, c=const.c):
    """Convert block eigenpairs into mode lines for longitudinal index q.

    Returns
    -------
    list of ModeLine
        Ascending in frequency. ``composition`` holds circular-basis labels
        with their power fractions.
    """
    q = int(longitudinal_q)
    fsr = free_spectral_range(block.geometry.length_L, c)
    values, vectors = diagonalize_block(block)
    lines = []
    for phi, vec in zip(values, vectors.T):
        power = np.abs(vec) ** 2
        power = power / power.sum()
        composition = tuple(
            (_label_for(q, n_plus, n_minus, pol), float(w))
            for (n_plus, n_minus, pol), w in zip(block.basis, power)
        )
        lines.append(
            ModeLine(
                omega=fsr * (q + phi / (2 * math.pi)),
                composition=composition,
                label=_dominant_label(q, block.basis, vec),
            )
        )
    return lines


def tem00_frequency(geometry, q, polarization="x", c=const.c):
    """Closed-form TEM00 angular frequency.

    The wavenumber in the post-paraxial term is taken from the paraxial
    estimate, so the result coincides with ``solve_block`` at N = 0.

    Parameters
    ----------
    geometry : CavityGeometry
    q : int
        Longitudinal index.
    polarization : {"x", "y"}
        x (the lower-frequency line for eta > 0) or y.
    """
    if polarization not in ("x", "y"):
        raise CavityError(f"polarization must be 'x' or 'y', got {polarization!r}")
    sign = 1.0 if polarization == "x" else -1.0
    gbar = derive_gbar(geometry)
    expansion_alpha(gbar)  # stability check
    fsr = free_spectral_range(geometry.length_L, c)
    base = q + math.acos(gbar) / math.pi
    correction = 1 + geometry.aspheric_p * (1 - gbar) / (1 + gbar) + sign * 2 * geometry.astigmatism_eta
    return fsr * (base - correction * (1 - gbar) / (2 * math.pi ** 2 * base))


def predict_spectrum(geometry, omega_lo, omega_hi, N_max=N_MAX_DEFAULT, c=const.c):
    """All modes with q >= 1 and N <= N_max inside [omega_lo, omega_hi].

    Frequencies are angular. Returns a list of ModeLine sorted by frequency;
    an empty window gives an empty list.
    """
    if not omega_lo < omega_hi:
        raise CavityError("omega_lo must be below omega_hi")
    _check_N(N_max)
    gbar = derive_gbar(geometry)
    expansion_alpha(gbar)
    fsr = free_spectral_range(geometry.length_L, c)
    A = math.acos(gbar) / math.pi
    lines = []
    for N in range(int(N_max) + 1):
        offset = (N + 1) * A
        q_lo = max(1, math.floor(omega_lo / fsr - offset) - 1)
        q_hi = math.ceil(omega_hi / fsr - offset) + 1
        for q in range(q_lo, q_hi + 1):
            k = paraxial_wavenumber(geometry, q, N, c)
            block = build_block_hamiltonian(geometry, k, N)
            for line in solve_block(block, q, c):
                if omega_lo <= line.omega <= omega_hi:
                    lines.append(line)
    lines.sort(key=lambda line: line.omega)
    return lines


def hybridize_two_level(omega0, delta, coupling_V):
    """Eigenmodes of two bare modes at omega0 +/- delta coupled by V.

    Returns
    -------
    (omega_upper, omega_lower), (f_a, f_b)
        Branch frequencies omega0 +/- |V| sec(beta) with beta =
        atan(delta/|V|), and the power fractions (1 +/- sin beta)/2 of the
        upper branch in the bare modes at omega0 + delta and omega0 - delta.
        The lower branch has the fractions swapped. For V = 0 and
        delta = 0 the fractions are (1, 0) by convention.
    """
    if coupling_V < 0:
        raise CavityError("coupling_V must be non-negative")
    V = abs(coupling_V)
    if V == 0 and delta == 0:
        return (omega0, omega0), (1.0, 0.0)
    beta = math.atan2(delta, V)
    half = math.hypot(delta, V)
    s = math.sin(beta)
    f_a = (1 + s) / 2
    return (omega0 + half, omega0 - half), (f_a, 1 - f_a)

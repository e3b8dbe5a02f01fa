"""Cavity-mediated iSWAP between two atoms: no-jump Tavis-Cummings evolution.

The state space is atom 1 x atom 2 x Fock(0..n_max), atoms ordered
(up, down). In the frame rotating with the cavity,

    H_TC  = Delta/2 sum_j sz_j + g sum_j (s-_j a^dag + s+_j a)
    H_eff = H_TC - i/2 (kappa a^dag a + sum_{j,mu} Gamma_mu |mu><mu|_j).

The zero-photon block of exp(-i H_eff t) is compared with the iSWAP
U = i(|du><ud| + |ud><du|) by the average gate fidelity
[tr(M M^dag) + |tr M|^2] / (D (D + 1)), D = 4, maximized over a global
rotation about z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.optimize import golden

from ..errors import CavityError
from .params import special_detunings

D = 4
ISWAP = np.array([
    [1, 0, 0, 0],
    [0, 0, 1j, 0],
    [0, 1j, 0, 0],
    [0, 0, 0, 1],
], dtype=complex)
# sz eigenvalue sum of the two atoms for |uu>, |ud>, |du>, |dd>
_SZ_TOTAL = np.array([2, 0, 0, -2])


@dataclass(frozen=True)
class GateParams:
    """Gate simulation inputs, rates in rad/s and duration in s."""

    g: float
    kappa: float
    gamma_up: float
    gamma_down: float
    detuning: float
    duration: float
    photon_truncation: int = 2

    def __post_init__(self):
        for name in ("g", "kappa", "gamma_up", "gamma_down"):
            if getattr(self, name) < 0:
                raise CavityError(f"{name} must be non-negative")
        if self.photon_truncation < 2:
            raise CavityError("photon_truncation must be >= 2")
        if not self.duration > 0:
            raise CavityError("duration must be positive")

    @property
    def gamma_bar(self):
        return 0.5 * (self.gamma_up + self.gamma_down)


def tavis_cummings_hamiltonian(params, n_max=None, dissipative=True):
    """H_eff (or H_TC if ``dissipative`` is False) as a dense matrix."""
    n_max = params.photon_truncation if n_max is None else n_max
    nf = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, nf)), 1)
    sz = np.diag([1.0, -1.0])
    sm = np.array([[0.0, 0.0], [1.0, 0.0]])  # |down><up|
    sp = sm.T
    I2, If = np.eye(2), np.eye(nf)

    def atom(op, j):
        return np.kron(np.kron(op, I2), If) if j == 0 else np.kron(np.kron(I2, op), If)

    A = np.kron(np.kron(I2, I2), a)
    H = np.zeros((4 * nf, 4 * nf), dtype=complex)
    for j in (0, 1):
        H += params.detuning / 2 * atom(sz, j)
        H += params.g * (atom(sm, j) @ A.conj().T + atom(sp, j) @ A)
    if dissipative:
        P_up, P_down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        loss = params.kappa * A.conj().T @ A
        for j in (0, 1):
            loss = loss + params.gamma_up * atom(P_up, j) + params.gamma_down * atom(P_down, j)
        H = H - 0.5j * loss
    return H


def propagator(H, t):
    """exp(-i H t) via eigendecomposition, with a scaling-and-squaring fallback."""
    w, R = np.linalg.eig(H)
    if np.linalg.cond(R) < 1e8:
        return (R * np.exp(-1j * w * t)) @ np.linalg.inv(R)
    return scipy.linalg.expm(-1j * H * t)


def zero_photon_block(V, n_max):
    nf = n_max + 1
    idx = [k * nf for k in range(4)]
    return V[np.ix_(idx, idx)]


def pedersen_fidelity(M):
    """[tr(M M^dag) + |tr M|^2] / (D (D + 1))."""
    d = M.shape[0]
    return float((np.trace(M @ M.conj().T).real + abs(np.trace(M)) ** 2) / (d * (d + 1)))


def fidelity_vs_target(block, target=ISWAP, optimize_z=True):
    """Fidelity of a 4x4 block against ``target``, maximized over a global z rotation.

    Returns (fidelity, theta) where the target is replaced by
    Rz(theta) x Rz(theta) * target.
    """
    base = target.conj().T @ block
    frob = float(np.trace(base @ base.conj().T).real)
    diag = np.diag(base)
    if not optimize_z:
        return pedersen_fidelity(base), 0.0

    def negative(theta):
        # Rz(theta)^dag on the target side multiplies row k by exp(i theta sz_k / 2)
        phases = np.exp(0.5j * theta * _SZ_TOTAL)
        return -abs(np.sum(phases * diag)) ** 2

    grid = np.linspace(0, 2 * math.pi, 65)[:-1]
    vals = [negative(th) for th in grid]
    k = int(np.argmin(vals))
    h = grid[1] - grid[0]
    theta = golden(negative, brack=(grid[k] - h, grid[k], grid[k] + h), tol=1e-10)
    best = -negative(theta)
    return (frob + best) / (D * (D + 1)), float(theta % (2 * math.pi))


def _fidelity_at(params, n_max, dissipative):
    H = tavis_cummings_hamiltonian(params, n_max, dissipative)
    V = propagator(H, params.duration)
    return fidelity_vs_target(zero_photon_block(V, n_max))[0]


def simulate_iswap(params, dissipative=True, check_truncation=True):
    """Average gate fidelity of the no-jump evolution against iSWAP.

    Raises
    ------
    CavityError
        If raising the photon truncation by one changes the fidelity by more
        than 1e-10.
    """
    n_max = params.photon_truncation
    F = _fidelity_at(params, n_max, dissipative)
    if check_truncation:
        F_next = _fidelity_at(params, n_max + 1, dissipative)
        if abs(F_next - F) > 1e-10:
            raise CavityError(f"photon truncation {n_max} is insufficient: fidelity changes by {abs(F_next - F):.3g}")
    return F


@dataclass(frozen=True)
class ScanPoint:
    delta: float
    infidelity: float
    duration: float
    mode: str
    m: int = None


def scan_iswap(params, detunings=None, mode="fixed_tau_g", m_values=None, dissipative=True):
    """Infidelity versus detuning.

    Parameters
    ----------
    params : GateParams
        ``detuning`` and ``duration`` are overwritten per point.
    detunings : sequence of float
        Used with ``mode="fixed_tau_g"``; each point evolves for
        pi Delta / (2 g^2).
    mode : {"fixed_tau_g", "special_m"}
    m_values : sequence of int
        Used with ``mode="special_m"``; each point sits at (Delta_m, t_m).
    """
    out = []
    if mode == "fixed_tau_g":
        if detunings is None:
            raise CavityError("fixed_tau_g mode needs detunings")
        for delta in detunings:
            t = math.pi * delta / (2 * params.g ** 2)
            p = replace(params, detuning=float(delta), duration=t)
            out.append(ScanPoint(float(delta), 1 - simulate_iswap(p, dissipative), t, mode))
    elif mode == "special_m":
        if m_values is None:
            raise CavityError("special_m mode needs m_values")
        for m in m_values:
            delta, t = special_detunings(m, params.g)
            p = replace(params, detuning=delta, duration=t)
            out.append(ScanPoint(delta, 1 - simulate_iswap(p, dissipative), t, mode, int(m)))
    else:
        raise CavityError(f"unknown scan mode {mode!r}")
    return out


def state_index(up1, up2, n, n_max):
    """Index of |atom1, atom2, n> with atoms given as booleans (True = up)."""
    return ((0 if up1 else 1) * 2 + (0 if up2 else 1)) * (n_max + 1) + n

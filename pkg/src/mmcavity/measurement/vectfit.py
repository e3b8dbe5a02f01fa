"""Rational vector fitting of transmission sweeps by iterative pole relocation.

A sweep H(s) at s = i omega is approximated as

    H(s) = C + sum_n a_n / (s - p_n).

Near a single cavity line the response is one-sided (only positive
frequencies are measured), so the default model uses unpaired complex poles
``single_sided=True``. Wideband real-valued models pair every pole with its
conjugate instead.

Internally the frequency axis is shifted to the sweep centre and scaled by
its half-span; this keeps the least-squares systems well conditioned and
makes the fit exactly equivariant under a shift of the frequency axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CavityError, ConvergenceError


@dataclass(frozen=True)
class SweepTrace:
    """Complex transmission sampled at strictly increasing angular frequencies."""

    omega: np.ndarray
    s21: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        s21 = np.asarray(self.s21, dtype=complex)
        if omega.ndim != 1 or omega.shape != s21.shape:
            raise CavityError("omega and s21 must be 1-d arrays of equal length")
        if np.any(np.diff(omega) <= 0):
            raise CavityError("sweep frequencies must be strictly increasing")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "s21", s21)

    def __len__(self):
        return len(self.omega)

    @classmethod
    def from_points(cls, points):
        pts = list(points)
        return cls(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))


@dataclass(frozen=True)
class RationalModel:
    """Pole-residue model. Poles and residues are in rad/s.

    With ``single_sided`` False every listed pole stands for a conjugate
    pair whose partner has the conjugate residue.
    """

    constant_C: complex
    poles: np.ndarray
    residues: np.ndarray
    single_sided: bool = True
    rms_error: float = 0.0
    n_iterations: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        poles = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        residues = np.atleast_1d(np.asarray(self.residues, dtype=complex))
        if poles.shape != residues.shape:
            raise CavityError("poles and residues must have equal length")
        if np.any(poles.real > 0):
            raise CavityError("model has poles with positive real part")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)

    def __call__(self, omega):
        s = 1j * np.asarray(omega, dtype=float)
        out = np.full(s.shape, complex(self.constant_C))
        for p, a in zip(self.poles, self.residues):
            out = out + a / (s - p)
            if not self.single_sided:
                out = out + np.conj(a) / (s - np.conj(p))
        return out


def initial_poles(n_poles, span=1.0):
    """Poles spread evenly over the normalized band [-span, span].

    Imaginary parts are linearly spaced; real parts are -span/100, i.e. one
    percent of the normalized half-span.
    """
    if n_poles == 1:
        beta = np.array([0.0])
    else:
        beta = np.linspace(-span, span, n_poles + 2)[1:-1]
    return -span / 100 + 1j * beta


def _basis(s, poles, single_sided):
    if single_sided:
        return 1.0 / (s[:, None] - poles[None, :])
    # real-coefficient pair basis: (1/(s-p) + 1/(s-p*)), i (1/(s-p) - 1/(s-p*))
    a = 1.0 / (s[:, None] - poles[None, :])
    b = 1.0 / (s[:, None] - np.conj(poles)[None, :])
    return np.concatenate([a + b, 1j * (a - b)], axis=1)


def _solve(A, y, real):
    if real:
        A = np.concatenate([A.real, A.imag], axis=0)
        y = np.concatenate([y.real, y.imag])
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    x, *_ = np.linalg.lstsq(A / scale, y, rcond=None)
    return x / scale


def _relocate(s, h, poles, single_sided):
    phi = _basis(s, poles, single_sided)
    n = phi.shape[1]
    A = np.concatenate([phi, np.ones((len(s), 1)), -h[:, None] * phi], axis=1)
    x = _solve(A, h, real=not single_sided)
    c_sigma = x[n + 1:]
    if single_sided:
        M = np.diag(poles) - np.outer(np.ones(len(poles)), c_sigma)
        new = np.linalg.eigvals(M)
    else:
        m = len(poles)
        ct = c_sigma[:m] + 1j * c_sigma[m:]
        full_p = np.concatenate([poles, np.conj(poles)])
        full_c = np.concatenate([ct, np.conj(ct)])
        # residues of sigma: ct at p and conj(ct) at conj(p), from the pair basis
        ev = np.linalg.eigvals(np.diag(full_p) - np.outer(np.ones(2 * m), full_c))
        ev = ev[np.argsort(-ev.imag)][:m]
        new = ev
    # stabilize: reflect right-half-plane poles
    new = np.where(new.real > 0, -new.real + 1j * new.imag, new)
    return np.sort_complex(new)


def _residues(s, h, poles, single_sided):
    phi = _basis(s, poles, single_sided)
    A = np.concatenate([phi, np.ones((len(s), 1))], axis=1)
    x = _solve(A, h, real=not single_sided)
    n = len(poles)
    if single_sided:
        return x[:n], x[n]
    return x[:n] + 1j * x[n:2 * n], x[2 * n]


def vector_fit(trace, n_poles=1, n_iterations=50, single_sided=True, tol=1e-9, poles0=None):
    """Fit a pole-residue model to a sweep.

    Parameters
    ----------
    trace : SweepTrace
    n_poles : int
        Number of poles (conjugate pairs when ``single_sided`` is False).
    n_iterations : int
        Maximum number of pole relocations.
    single_sided : bool
        Unpaired complex poles (narrowband) or conjugate pairs (wideband).
    tol : float
        Convergence threshold on the largest pole movement between
        iterations, in units of the normalized half-span.
    poles0 : array_like, optional
        Starting poles in rad/s instead of the default layout.

    Returns
    -------
    RationalModel

    Raises
    ------
    ConvergenceError
        If the poles still move by more than ``tol`` after ``n_iterations``.
    """
    if n_poles < 1:
        raise CavityError("n_poles must be >= 1")
    if len(trace) < 4 * n_poles:
        raise CavityError("trace needs at least 4 points per pole")
    omega, h = trace.omega, trace.s21
    if single_sided:
        center = 0.5 * (omega[0] + omega[-1])
        scale = 0.5 * (omega[-1] - omega[0])
    else:
        center, scale = 0.0, float(np.max(np.abs(omega)))
    s = 1j * (omega - center) / scale
    if poles0 is None:
        if single_sided:
            poles = initial_poles(n_poles)
        else:
            lo, hi = omega[0] / scale, omega[-1] / scale
            beta = np.linspace(lo, hi, n_poles + 2)[1:-1]
            poles = -beta / 100 + 1j * beta
    else:
        poles = (np.asarray(poles0, dtype=complex) - 1j * center) / scale
    history = []
    converged = False
    it = 0
    for it in range(1, n_iterations + 1):
        new = _relocate(s, h, poles, single_sided)
        move = float(np.max(np.abs(new - poles)))
        history.append(move)
        poles = new
        if move < tol:
            converged = True
            break
    residues, C = _residues(s, h, poles, single_sided)
    model = _denormalize(C, poles, residues, center, scale, single_sided)
    rms = float(np.sqrt(np.mean(np.abs(model(omega) - h) ** 2)))
    model = RationalModel(model.constant_C, model.poles, model.residues, single_sided, rms, it,
                          {"pole_movement": history, "center": center, "scale": scale})
    if not converged:
        raise ConvergenceError(
            f"pole relocation did not converge in {n_iterations} iterations",
            best=model,
            diagnostics={"pole_movement": history},
        )
    return model


def _denormalize(C, poles, residues, center, scale, single_sided):
    return RationalModel(complex(C), 1j * center + scale * poles, scale * residues, single_sided)

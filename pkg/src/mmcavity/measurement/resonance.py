"""Resonance parameters from a fitted S21 model, Q-circle probe coupling, and
probe coupling predicted from the mode field.

For a single pole p = -kappa/2 + i omega0 with residue a, the transmission
near resonance is a / (i omega - p) and traces a circle of diameter
d21 = 2 sqrt(kappa1 kappa2) / kappa in the complex plane, with
|a| = sqrt(kappa1 kappa2) attenuated by the probe-line insertion loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..errors import CavityError, ConvergenceError
from .vectfit import RationalModel, SweepTrace
from .. import constants as const


@dataclass(frozen=True)
class ResonanceParams:
    """Loaded resonance parameters, all in rad/s, with 1-sigma errors."""

    omega0: float
    kappa: float
    sqrt_k1k2: float
    omega0_err: float = 0.0
    kappa_err: float = 0.0
    sqrt_k1k2_err: float = 0.0
    residue: complex = 0j
    model: RationalModel = field(default=None, repr=False, compare=False)
    covariance: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise CavityError("kappa must be positive")
        if self.sqrt_k1k2 < 0:
            raise CavityError("sqrt_k1k2 must be non-negative")

    @property
    def qcircle_diameter(self):
        return qcircle_diameter(self.kappa, self.sqrt_k1k2)

    def to_dict(self):
        return {
            "omega0": self.omega0,
            "kappa": self.kappa,
            "sqrt_k1k2": self.sqrt_k1k2,
            "omega0_err": self.omega0_err,
            "kappa_err": self.kappa_err,
            "sqrt_k1k2_err": self.sqrt_k1k2_err,
        }


def qcircle_diameter(kappa, sqrt_k1k2):
    """d21 = 2 sqrt(kappa1 kappa2) / kappa."""
    return 2 * sqrt_k1k2 / kappa


def qcircle_diameter_from_rates(kappa0, kappa1, kappa2):
    """Q-circle diameter for internal loss kappa0 and port rates kappa1, kappa2."""
    return 2 * math.sqrt(kappa1 * kappa2) / (kappa0 + kappa1 + kappa2)


def _dominant_pole(model, trace):
    # largest peak contribution |a| / |Re p| inside the sweep band
    inside = [(abs(a) / abs(p.real), k) for k, (p, a) in enumerate(zip(model.poles, model.residues))
              if trace.omega[0] <= p.imag <= trace.omega[-1]]
    if not inside:
        inside = [(abs(a) / abs(p.real), k) for k, (p, a) in enumerate(zip(model.poles, model.residues))]
    return max(inside)[1]


def refine_resonance(model, trace, pole_index=None):
    """Nonlinear least-squares refinement of a vector-fit model.

    All poles, residues and the constant are refined jointly against the
    sweep with equal weights on the real and imaginary parts (the maximum
    likelihood estimate for white complex noise). The covariance is
    s^2 (J^T J)^-1 with s^2 the residual variance.

    Parameters
    ----------
    model : RationalModel
        Single-sided model from :func:`vector_fit`.
    trace : SweepTrace
    pole_index : int, optional
        Which pole is the cavity line; defaults to the strongest in band.

    Returns
    -------
    ResonanceParams
        ``sqrt_k1k2`` is |a| as measured, before insertion-loss correction.
    """
    if not model.single_sided:
        raise CavityError("refine_resonance expects a single-sided model")
    omega = trace.omega
    center = 0.5 * (omega[0] + omega[-1])
    scale = 0.5 * (omega[-1] - omega[0])
    s = 1j * (omega - center) / scale
    yscale = float(np.max(np.abs(trace.s21))) or 1.0
    y = trace.s21 / yscale
    n = len(model.poles)
    p = (model.poles - 1j * center) / scale
    a = model.residues / scale / yscale
    C = model.constant_C / yscale
    x0 = np.concatenate([[C.real, C.imag], p.real, p.imag, a.real, a.imag])

    def unpack(x):
        C = x[0] + 1j * x[1]
        p = x[2:2 + n] + 1j * x[2 + n:2 + 2 * n]
        a = x[2 + 2 * n:2 + 3 * n] + 1j * x[2 + 3 * n:2 + 4 * n]
        return C, p, a

    def resid(x):
        C, p, a = unpack(x)
        m = C + np.sum(a[None, :] / (s[:, None] - p[None, :]), axis=1)
        r = m - y
        return np.concatenate([r.real, r.imag])

    def jac(x):
        C, p, a = unpack(x)
        d = 1.0 / (s[:, None] - p[None, :])
        dp = a[None, :] * d ** 2
        cols = [np.ones(len(s)), 1j * np.ones(len(s))]
        J = np.column_stack(cols + [dp[:, k] for k in range(n)] + [1j * dp[:, k] for k in range(n)]
                            + [d[:, k] for k in range(n)] + [1j * d[:, k] for k in range(n)])
        return np.concatenate([J.real, J.imag], axis=0)

    sol = least_squares(resid, x0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if sol.status == 0:
        raise ConvergenceError("resonance refinement did not converge", best=sol.x, diagnostics={"message": sol.message})
    C, p, a = unpack(sol.x)
    if np.any(p.real > 0):
        raise ConvergenceError("refinement produced an unstable pole", best=sol.x)
    J = jac(sol.x)
    dof = max(J.shape[0] - J.shape[1], 1)
    s2 = float(sol.fun @ sol.fun) / dof
    cov = np.linalg.pinv(J.T @ J) * s2

    refined = RationalModel(C * yscale, 1j * center + scale * p, a * scale * yscale, True,
                            float(np.sqrt(np.mean((sol.fun * yscale) ** 2) * 2)), model.n_iterations)
    k = pole_index if pole_index is not None else _dominant_pole(refined, trace)
    pk, ak = refined.poles[k], refined.residues[k]
    # indices of the chosen pole and residue in the parameter vector
    i_re, i_im = 2 + k, 2 + n + k
    j_re, j_im = 2 + 2 * n + k, 2 + 3 * n + k
    kappa = -2 * pk.real
    kappa_err = 2 * scale * math.sqrt(cov[i_re, i_re])
    omega0_err = scale * math.sqrt(cov[i_im, i_im])
    # |a| error, linearized
    an = a[k]
    g = np.zeros(len(sol.x))
    if abs(an) > 0:
        g[j_re], g[j_im] = an.real / abs(an), an.imag / abs(an)
    amp_err = scale * yscale * math.sqrt(max(g @ cov @ g, 0.0))
    return ResonanceParams(
        omega0=float(pk.imag),
        kappa=float(kappa),
        sqrt_k1k2=float(abs(ak)),
        omega0_err=float(omega0_err),
        kappa_err=float(kappa_err),
        sqrt_k1k2_err=float(amp_err),
        residue=complex(ak),
        model=refined,
        covariance=cov,
    )


@dataclass(frozen=True)
class ThruCalibration:
    """Tabulated probe-line insertion loss (dB, positive) against frequency."""

    omega: np.ndarray
    loss_db: np.ndarray

    def __call__(self, omega):
        return float(np.interp(omega, self.omega, self.loss_db))


def extract_probe_coupling(params, residue=None, insertion_loss_dB=0.0):
    """Geometric-mean probe coupling sqrt(kappa1 kappa2) in rad/s.

    The measured residue magnitude is corrected by the amplitude factor
    10^(IL/20) of the total insertion loss IL (dB) of the probe lines.

    Parameters
    ----------
    params : ResonanceParams
    residue : complex, optional
        Residue of the cavity pole; defaults to ``params.residue``.
    insertion_loss_dB : float or ThruCalibration
        Scalar loss, or a calibration table evaluated at omega0.

    Raises
    ------
    CavityError
        If the corrected coupling exceeds kappa/2, which would require
        kappa1 + kappa2 > kappa.
    """
    a = params.residue if residue is None else residue
    il = insertion_loss_dB(params.omega0) if callable(insertion_loss_dB) else float(insertion_loss_dB)
    if il < 0:
        raise CavityError("insertion loss must be non-negative (dB of attenuation)")
    value = abs(a) * 10 ** (il / 20)
    if value > params.kappa / 2 * (1 + 1e-9):
        raise CavityError(
            f"sqrt(kappa1 kappa2) = {value:.6g} exceeds kappa/2 = {params.kappa / 2:.6g}; check the insertion loss"
        )
    return value


def probe_coupling_from_field(E_tip_over_Emax2, mode_volume, omega, tip_area, line_impedance=50.0):
    """Probe decay rate from the field at the probe tip.

    kappa_probe = omega^2 eps0 |Z| A^2 / V * |E_tip|^2 / max|E|^2, treating the
    exposed tip of area A as a point receiver of the local field.
    """
    if not 0 <= E_tip_over_Emax2 <= 1:
        raise CavityError("field ratio must lie in [0, 1]")
    if not (mode_volume > 0 and omega > 0 and tip_area > 0):
        raise CavityError("mode volume, omega and tip area must be positive")
    return omega ** 2 * const.epsilon_0 * abs(line_impedance) * tip_area ** 2 / mode_volume * E_tip_over_Emax2


def gaussian_intensity_ratio(r, spot_w):
    """Paraxial TEM00 intensity at radius r relative to the axis, exp(-2 r^2/w^2)."""
    return math.exp(-2 * (r / spot_w) ** 2)


def synthesize_sweep(omega, omega0, kappa, sqrt_k1k2, background=0j, phase=0.0, insertion_loss_dB=0.0,
                     noise=0.0, rng=None):
    """Single-pole transmission a / (i omega - p) + background with optional noise.

    ``noise`` is the standard deviation of each quadrature.
    """
    omega = np.asarray(omega, dtype=float)
    a = sqrt_k1k2 * 10 ** (-insertion_loss_dB / 20) * np.exp(1j * phase)
    p = -kappa / 2 + 1j * omega0
    s21 = background + a / (1j * omega - p)
    if noise and rng is not None:
        s21 = s21 + noise * (rng.normal(size=omega.shape) + 1j * rng.normal(size=omega.shape))
    return SweepTrace(omega, s21)

"""Ringdown analysis of heterodyne cavity-decay records.

Each shot is modelled as

    s(t) = s_inf + s0 exp(-kappa t / 2 + i theta(t)) + noise(t)

with a leakage offset s_inf common to all shots, a shot-dependent phase
theta(t) (vibrations detune the cavity, so shots are not mutually phase
coherent) and circular complex Gaussian noise of variance sigma^2. The
phase-insensitive ensemble average of |s - s_inf|^2 then follows
|s0|^2 exp(-kappa t) + sigma^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import least_squares, minimize, minimize_scalar

from ..errors import CavityError, ConvergenceError


@dataclass(frozen=True)
class RingdownShot:
    """Uniformly sampled complex ringdown record."""

    times: np.ndarray
    samples: np.ndarray
    shot_id: int = 0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.samples, dtype=complex)
        if t.ndim != 1 or t.shape != s.shape or len(t) < 3:
            raise CavityError("times and samples must be equal-length 1-d arrays with >= 3 points")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise CavityError("ringdown times must be strictly increasing")
        if np.max(np.abs(dt - dt.mean())) > 1e-9 * abs(dt.mean()):
            raise CavityError("ringdown samples must be uniformly spaced")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class RingdownFit:
    """Ensemble ringdown estimate. Rates in rad/s (energy decay)."""

    kappa: float
    amplitude2: float
    noise_sigma2: float
    s_inf: complex
    kappa_err: float
    amplitude2_err: float
    noise_sigma2_err: float
    s_inf_err: float
    n_shots: int
    low_snr: bool = False
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self):
        return {
            "kappa": self.kappa,
            "kappa_err": self.kappa_err,
            "amplitude2": self.amplitude2,
            "amplitude2_err": self.amplitude2_err,
            "noise_sigma2": self.noise_sigma2,
            "noise_sigma2_err": self.noise_sigma2_err,
            "s_inf_re": self.s_inf.real,
            "s_inf_im": self.s_inf.imag,
            "s_inf_err": self.s_inf_err,
            "n_shots": self.n_shots,
            "low_snr": self.low_snr,
        }


def _stack(shots):
    shots = list(shots)
    if not shots:
        raise CavityError("need at least one ringdown shot")
    t = shots[0].times
    for shot in shots[1:]:
        if shot.times.shape != t.shape or np.max(np.abs(shot.times - t)) > 1e-9 * (t[-1] - t[0]):
            raise CavityError("all shots must share the same time grid")
    # order-independent: sort by shot id, then by content
    order = sorted(range(len(shots)), key=lambda k: (shots[k].shot_id, k))
    S = np.array([shots[k].samples for k in order])
    return t - t[0], S


def _inner(t, y, w):
    """Best (A, sigma2, kappa) for y ~ A exp(-kappa t) + sigma2, weights w."""
    span = t[-1]

    def linear(kappa):
        X = np.column_stack([np.exp(-kappa * t), np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
        r = (X @ coef - y) * w
        return coef, float(r @ r)

    res = minimize_scalar(lambda lk: linear(math.exp(lk))[1], bounds=(math.log(0.1 / span), math.log(1e4 / span)),
                          method="bounded", options={"xatol": 1e-10})
    kappa = math.exp(res.x)
    coef, cost = linear(kappa)
    return coef[0], coef[1], kappa, cost


def ringdown_fit_ensemble(shots, s_inf0=None):
    """Fit the ensemble-mean power |s - s_inf|^2 = A exp(-kappa t) + sigma^2.

    The offset s_inf is optimized as a nuisance parameter: an outer
    Nelder-Mead search over its real and imaginary parts wraps an inner
    variable-projection fit (A and sigma^2 linear, kappa by a bounded scalar
    search). A final joint least-squares step supplies the uncertainties.
    Shots are combined only through |s - s_inf|^2, so no phase coherence
    between shots is assumed.

    Returns
    -------
    RingdownFit
        ``low_snr`` is set when A < 3 sigma^2.
    """
    t, S = _stack(shots)
    n_shots = S.shape[0]
    tail = S[:, int(0.9 * S.shape[1]):]
    s0 = complex(np.mean(tail)) if s_inf0 is None else complex(s_inf0)
    P0 = np.abs(S - s0) ** 2
    y0 = P0.mean(axis=0)
    if n_shots >= 5:
        sd = P0.std(axis=0, ddof=1) / math.sqrt(n_shots)
    else:
        sd = np.full_like(y0, 1.0)
    sd = np.maximum(sd, 1e-3 * np.median(sd) + 1e-300)
    w = 1.0 / sd
    amp = math.sqrt(max(y0.max(), 1e-300))

    def outer_cost(z):
        sinf = s0 + amp * (z[0] + 1j * z[1])
        y = np.mean(np.abs(S - sinf) ** 2, axis=0)
        return _inner(t, y, w)[3]

    res = minimize(outer_cost, [0.0, 0.0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14 * max(outer_cost([0, 0]), 1e-300), "maxiter": 2000})
    sinf = s0 + amp * (res.x[0] + 1j * res.x[1])
    y = np.mean(np.abs(S - sinf) ** 2, axis=0)
    A, sig2, kappa, _ = _inner(t, y, w)

    # joint polish in scaled parameters
    ys = amp ** 2
    x0 = np.array([A / ys, math.log(kappa * t[-1]), sig2 / ys, (sinf - s0).real / amp, (sinf - s0).imag / amp])

    def resid(x):
        si = s0 + amp * (x[3] + 1j * x[4])
        yy = np.mean(np.abs(S - si) ** 2, axis=0) / ys
        k = math.exp(x[1]) / t[-1]
        return (x[0] * np.exp(-k * t) + x[2] - yy) * w * ys

    sol = least_squares(resid, x0, method="lm", xtol=1e-14, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if not sol.success:
        raise ConvergenceError("ringdown polish failed", best=x0, diagnostics={"message": sol.message})
    x = sol.x
    J = sol.jac
    dof = max(len(t) - 5, 1)
    s2 = float(sol.fun @ sol.fun) / dof
    # if weights were empirical the residuals are unit-variance already; use the
    # larger of the two scales to stay conservative
    cov = np.linalg.pinv(J.T @ J) * max(s2, 1.0 if n_shots >= 5 else s2)
    kappa = math.exp(x[1]) / t[-1]
    A = x[0] * ys
    sig2 = x[2] * ys
    sinf = s0 + amp * (x[3] + 1j * x[4])
    kappa_err = kappa * math.sqrt(max(cov[1, 1], 0))
    return RingdownFit(
        kappa=float(kappa),
        amplitude2=float(A),
        noise_sigma2=float(sig2),
        s_inf=complex(sinf),
        kappa_err=float(kappa_err),
        amplitude2_err=float(ys * math.sqrt(max(cov[0, 0], 0))),
        noise_sigma2_err=float(ys * math.sqrt(max(cov[2, 2], 0))),
        s_inf_err=float(amp * math.sqrt(max(cov[3, 3] + cov[4, 4], 0))),
        n_shots=n_shots,
        low_snr=bool(A < 3 * sig2),
        diagnostics={"outer": res.message, "polish": sol.message, "reduced_chi2": s2},
    )


def coherent_average_kappa(shots):
    """Decay rate from |<s>|^2 averaged phase-coherently across shots.

    This is the estimator the ensemble fit avoids; with dephased shots it
    overestimates kappa. Provided for comparison.
    """
    t, S = _stack(shots)
    y = np.abs(S.mean(axis=0)) ** 2
    return _inner(t, y, np.ones_like(t))[2]


def instantaneous_detuning(shot, s_inf, smooth=5, noise_sigma2=None, snr_threshold=3.0):
    """Instantaneous mode-probe detuning d/dt arg(s - s_inf) in rad/s.

    The unwrapped phase is smoothed with a boxcar of ``smooth`` samples and
    differentiated by central differences. If ``noise_sigma2`` is given the
    output stops at the first sample where |s - s_inf|^2 drops below
    ``snr_threshold`` * sigma^2.

    Returns
    -------
    times, delta : ndarray
    """
    z = shot.samples - complex(s_inf)
    phase = np.unwrap(np.angle(z))
    if smooth and smooth > 1:
        phase = uniform_filter1d(phase, int(smooth), mode="nearest")
    delta = np.gradient(phase, shot.times)
    n = len(z)
    if noise_sigma2 is not None and noise_sigma2 > 0:
        low = np.flatnonzero(np.abs(z) ** 2 < snr_threshold * noise_sigma2)
        if low.size:
            n = int(low[0])
    return shot.times[:n], delta[:n]


def length_excursion(delta_omega_pp, omega, length_L):
    """Mirror-spacing excursion L * d_omega / omega matching a detuning sweep."""
    return length_L * delta_omega_pp / omega


def synthesize_ensemble(kappa, n_shots, duration, n_samples, amplitude=1.0, noise_sigma=0.0, s_inf=0j,
                        detuning_rms=0.0, detuning_corr_time=None, random_phase=True, rng=None):
    """Synthetic dephased ringdown shots.

    Each shot has a random initial phase (if ``random_phase``) and a
    detuning that performs an Ornstein-Uhlenbeck walk of rms
    ``detuning_rms`` (rad/s) and correlation time ``detuning_corr_time``.
    ``noise_sigma`` is the rms of the complex noise, so E|noise|^2 =
    noise_sigma^2.
    """
    rng = np.random.default_rng() if rng is None else rng
    t = np.linspace(0.0, duration, n_samples)
    dt = t[1] - t[0]
    tau = duration / 10 if detuning_corr_time is None else detuning_corr_time
    shots = []
    for k in range(n_shots):
        phi0 = rng.uniform(0, 2 * math.pi) if random_phase else 0.0
        if detuning_rms > 0:
            a = math.exp(-dt / tau)
            d = np.empty(n_samples)
            d[0] = rng.normal(0, detuning_rms)
            kicks = rng.normal(0, detuning_rms * math.sqrt(1 - a * a), n_samples)
            for i in range(1, n_samples):
                d[i] = a * d[i - 1] + kicks[i]
            theta = phi0 + np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * dt)])
        else:
            theta = phi0 + np.zeros(n_samples)
        s = s_inf + amplitude * np.exp(-kappa * t / 2 + 1j * theta)
        if noise_sigma > 0:
            s = s + noise_sigma / math.sqrt(2) * (rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples))
        shots.append(RingdownShot(t, s, k))
    return shots

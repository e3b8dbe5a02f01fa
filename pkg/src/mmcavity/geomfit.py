"""Geometry fits to assigned TEM00 lines, avoided-crossing reconstruction and
FSR grouping of peak lists.

All frequencies are angular (rad/s).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import constants as const
from .core import CavityGeometry, derive_gbar
from .errors import CavityError, ConvergenceError, IdentifiabilityError
from .spectrum import hybridize_two_level, tem00_frequency

PARAMETERS = ("length_L", "mean_curvature_R", "astigmatism_eta", "aspheric_p")
_INTERNAL = ("gbar", "mean_curvature_R", "astigmatism_eta", "aspheric_p")


@dataclass(frozen=True)
class ModeAssignment:
    """A measured TEM00 line with its longitudinal index and polarization."""

    omega: float
    q: int
    polarization: str
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise CavityError(f"sigma must be positive, got {self.sigma!r}")
        if self.polarization not in ("x", "y"):
            raise CavityError(f"polarization must be 'x' or 'y', got {self.polarization!r}")
        if int(self.q) != self.q or self.q < 1:
            raise CavityError(f"q must be a positive integer, got {self.q!r}")


@dataclass(frozen=True)
class GeometryFit:
    """Result of :func:`fit_geometry`.

    ``covariance`` is over (L, R, eta, p) in that order, in SI units.
    ``residual_rms`` is the unweighted rms of model minus data, rad/s.
    """

    geometry: CavityGeometry
    covariance: np.ndarray
    residual_rms: float
    chi2: float
    n_iterations: int
    residuals: np.ndarray = field(repr=False)
    weighted_jacobian: np.ndarray = field(repr=False)

    @property
    def stderr(self):
        return dict(zip(PARAMETERS, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))


def _tem00_and_jacobian(theta, R0, q, sign, c):
    """Closed-form TEM00 frequencies and d omega / d theta.

    theta = (gbar, R/R0, eta, p).
    """
    gbar, rho, eta, p = theta
    R = R0 * rho
    F = math.pi * c / (R * (1 - gbar))
    A = math.acos(gbar)
    B = q + A / math.pi
    C = 1 + p * (1 - gbar) / (1 + gbar) + 2 * sign * eta
    denom = 2 * math.pi ** 2 * B
    T = C * (1 - gbar) / denom
    omega = F * (B - T)

    dB = -1 / (math.pi * math.sqrt(1 - gbar ** 2))
    dC = -2 * p / (1 + gbar) ** 2
    dT = (dC * (1 - gbar) - C) / denom - T * dB / B
    d_gbar = F / (1 - gbar) * (B - T) + F * (dB - dT)
    d_rho = -omega / rho
    d_eta = -F * 2 * sign * (1 - gbar) / denom
    d_p = -F * (1 - gbar) ** 2 / (1 + gbar) / denom
    return omega, np.column_stack([d_gbar, d_rho, d_eta, d_p])


def _to_geometry(theta, R0, template):
    gbar, rho, eta, p = theta
    R = R0 * rho
    return CavityGeometry(float(R * (1 - gbar)), float(R), float(eta), float(p), template.mirror_radius_rm)


def fit_geometry(assignments, initial_guess, c=const.c, max_iterations=100, xtol=1e-10):
    """Weighted least-squares fit of (L, R, eta, p) to TEM00 line positions.

    Parameters
    ----------
    assignments : sequence of ModeAssignment
        At least 5 lines spanning at least 3 distinct q, with both
        polarizations present.
    initial_guess : CavityGeometry
    c : float
        Speed of light. Exposed so that rescaling checks can scale it together
        with the frequencies.
    max_iterations : int
        Iteration budget of the damped Gauss-Newton solver.

    Returns
    -------
    GeometryFit

    Raises
    ------
    IdentifiabilityError
        If only one polarization is present (eta cannot be separated from p)
        or the Jacobian is otherwise rank deficient.
    ConvergenceError
        If the iteration budget runs out. ``best`` holds the last iterate.
    """
    assignments = list(assignments)
    if len(assignments) < 5:
        raise CavityError("fit_geometry needs at least 5 assignments")
    if len({a.q for a in assignments}) < 3:
        raise CavityError("fit_geometry needs assignments spanning at least 3 distinct q")
    if len({a.polarization for a in assignments}) < 2:
        raise IdentifiabilityError(
            "astigmatism_eta",
            "only one polarization is present, so astigmatism_eta is degenerate with aspheric_p",
        )
    q = np.array([a.q for a in assignments], dtype=float)
    sign = np.array([1.0 if a.polarization == "x" else -1.0 for a in assignments])
    omega = np.array([a.omega for a in assignments])
    sigma = np.array([a.sigma for a in assignments])

    R0 = initial_guess.mean_curvature_R
    theta0 = np.array([derive_gbar(initial_guess), 1.0, initial_guess.astigmatism_eta, initial_guess.aspheric_p])

    def model(theta):
        return _tem00_and_jacobian(theta, R0, q, sign, c)

    def residuals(theta):
        return (model(theta)[0] - omega) / sigma

    def jacobian(theta):
        return model(theta)[1] / sigma[:, None]

    J0 = jacobian(theta0)
    _check_rank(J0)

    sol = least_squares(
        residuals, theta0, jac=jacobian, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15,
        max_nfev=max_iterations * 5, x_scale="jac",
    )
    theta = sol.x
    if not -1 < theta[0] < 1:
        raise ConvergenceError("fit left the stable region", best=theta, diagnostics={"status": sol.status})
    J = jacobian(theta)
    _check_rank(J)
    r = residuals(theta)
    fit = _make_fit(theta, R0, initial_guess, J, r, sigma, sol.nfev)
    if sol.status == 0:
        raise ConvergenceError(
            f"geometry fit did not converge in {max_iterations} iterations",
            best=fit,
            diagnostics={"message": sol.message, "nfev": sol.nfev},
        )
    return fit


def _check_rank(J):
    scale = np.linalg.norm(J, axis=0)
    if np.any(scale == 0):
        raise IdentifiabilityError(_INTERNAL_TO_PUBLIC[_INTERNAL[int(np.argmin(scale))]])
    _, s, vt = np.linalg.svd(J / scale, full_matrices=False)
    if s[-1] < 1e-10 * s[0]:
        worst = int(np.argmax(np.abs(vt[-1])))
        raise IdentifiabilityError(_INTERNAL_TO_PUBLIC[_INTERNAL[worst]])


_INTERNAL_TO_PUBLIC = {
    "gbar": "length_L",
    "mean_curvature_R": "mean_curvature_R",
    "astigmatism_eta": "astigmatism_eta",
    "aspheric_p": "aspheric_p",
}


def _make_fit(theta, R0, template, J, r, sigma, nfev):
    cov_internal = np.linalg.inv(J.T @ J)
    gbar, rho = theta[0], theta[1]
    # (L, R, eta, p) as functions of (gbar, rho, eta, p)
    T = np.array([
        [-R0 * rho, R0 * (1 - gbar), 0, 0],
        [0, R0, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ])
    cov = T @ cov_internal @ T.T
    cov = 0.5 * (cov + cov.T)
    return GeometryFit(
        geometry=_to_geometry(theta, R0, template),
        covariance=cov,
        residual_rms=float(np.sqrt(np.mean((r * sigma) ** 2))),
        chi2=float(r @ r),
        n_iterations=int(nfev),
        residuals=r * sigma,
        weighted_jacobian=J,
    )


def synthesize_assignments(geometry, q_values, sigma, rng=None, c=const.c):
    """TEM00 lines of ``geometry`` for both polarizations, optionally noisy.

    ``sigma`` is the angular noise level; with ``rng`` None no noise is added.
    """
    out = []
    for q in q_values:
        for pol in ("x", "y"):
            omega = tem00_frequency(geometry, q, pol, c)
            if rng is not None:
                omega += rng.normal(0.0, sigma)
            out.append(ModeAssignment(omega, int(q), pol, sigma))
    return out


@dataclass(frozen=True)
class CrossingFit:
    """Avoided-crossing reconstruction.

    Attributes
    ----------
    coupling_V : float
    detuning_a, detuning_b : float
        Bare half-splitting model delta_q = a + b q.
    centers : dict q -> omega0
    bare_frequencies : dict q -> (omega0 + delta_q, omega0 - delta_q)
    fractions : dict q -> (f_a, f_b) of the upper branch
    extrapolated : bool
        True when no branch pair comes within 10 |V| of the crossing, in
        which case V is an extrapolation.
    stderr_V : float
    """

    coupling_V: float
    detuning_a: float
    detuning_b: float
    centers: dict
    bare_frequencies: dict
    fractions: dict
    extrapolated: bool
    stderr_V: float


def fit_crossing(branches):
    """Fit a two-level hybridization model to upper/lower branch frequencies.

    Parameters
    ----------
    branches : sequence of (omega_upper, omega_lower, q)
        At least 3 pairs. The bare half-splitting is modelled as linear in q.

    Returns
    -------
    CrossingFit
    """
    branches = sorted(branches, key=lambda b: b[2])
    if len(branches) < 3:
        raise CavityError("fit_crossing needs at least 3 branch pairs")
    up = np.array([b[0] for b in branches], dtype=float)
    lo = np.array([b[1] for b in branches], dtype=float)
    qs = np.array([b[2] for b in branches], dtype=float)
    if np.any(up < lo):
        raise CavityError("each branch pair must be given as (upper, lower, q)")
    centers = 0.5 * (up + lo)
    half = 0.5 * (up - lo)
    scale = float(np.max(half))

    # initial guess: signed detunings changing sign at the narrowest gap
    i_min = int(np.argmin(half))
    V0 = half[i_min]
    d0 = np.sqrt(np.clip(half ** 2 - 0.25 * V0 ** 2, 0, None))
    d0[:i_min] *= -1
    b0, a0 = np.polyfit(qs, d0, 1)
    x0 = np.array([0.5 * V0, a0, b0]) / scale
    q_mid = qs.mean()

    def resid(x):
        V, a, b = x
        return np.hypot(a + b * qs, V) - half / scale

    # the slope sign is a mirror symmetry; both starting signs are tried
    best = None
    for sgn in (1.0, -1.0):
        start = x0 * np.array([1, sgn, sgn])
        sol = least_squares(resid, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        if best is None or sol.cost < best.cost:
            best = sol
    V, a, b = best.x * scale
    V = abs(V)
    J = best.jac
    dof = max(len(qs) - 3, 1)
    s2 = 2 * best.cost / dof
    try:
        cov = np.linalg.inv(J.T @ J) * s2
        stderr_V = float(math.sqrt(max(cov[0, 0], 0))) * scale
    except np.linalg.LinAlgError:
        stderr_V = float("nan")
    deltas = a + b * qs
    extrapolated = bool(np.min(np.abs(deltas)) > 10 * V)
    if extrapolated:
        warnings.warn("branches never approach within 10|V|; the coupling is extrapolated", stacklevel=2)
    bare, fractions, cmap = {}, {}, {}
    for qv, w0, d in zip(qs, centers, deltas):
        qi = int(qv)
        cmap[qi] = float(w0)
        bare[qi] = (float(w0 + d), float(w0 - d))
        fractions[qi] = hybridize_two_level(w0, d, V)[1]
    return CrossingFit(float(V), float(a), float(b), cmap, bare, fractions, extrapolated, stderr_V)


@dataclass(frozen=True)
class ModeGroup:
    """Peaks repeating once per FSR, with their FSR index."""

    offset: float
    peaks: tuple
    indices: tuple


@dataclass(frozen=True)
class FSRGrouping:
    fsr: float
    fsr_stderr: float
    groups: tuple


def group_by_fsr(peaks, fsr_guess, tolerance=0.05):
    """Sort peaks into families that repeat every FSR and refine the FSR.

    Parameters
    ----------
    peaks : sequence of float
        Peak frequencies.
    fsr_guess : float
    tolerance : float
        Fraction of the FSR within which folded peaks are considered to
        belong to the same family.

    Returns
    -------
    FSRGrouping
        Families sorted by their folded offset. Two combs offset by FSR/2
        give two families.

    Raises
    ------
    CavityError
        If all peaks fall within a single FSR period or the folded peaks
        show no periodic clustering.
    """
    peaks = np.sort(np.asarray(peaks, dtype=float))
    if len(peaks) < 2:
        raise CavityError("group_by_fsr needs at least 2 peaks")
    if not fsr_guess > 0:
        raise CavityError("fsr_guess must be positive")
    fsr = float(fsr_guess)
    origin = peaks[0]
    for _ in range(3):
        n = np.floor((peaks - origin) / fsr + 0.5 * tolerance).astype(int)
        folded = (peaks - origin) - n * fsr
        labels = _cluster_1d(folded, tolerance * fsr)
        last = labels.max()
        if last > 0 and folded.min() + fsr - folded.max() < tolerance * fsr:
            # the top family wraps around onto the bottom one
            wrap = labels == last
            n[wrap] += 1
            folded[wrap] -= fsr
            labels[wrap] = 0
        families = [np.flatnonzero(labels == k) for k in range(labels.max() + 1)]
        periodic = [f for f in families if len(set(n[f])) >= 2]
        if not periodic:
            raise CavityError("no periodic structure: all peaks lie within one FSR period")
        # shared slope, per-family intercepts
        A = np.zeros((len(peaks), 1 + len(families)))
        A[:, 0] = n
        for k, f in enumerate(families):
            A[f, 1 + k] = 1.0
        coef, *_ = np.linalg.lstsq(A, peaks - origin, rcond=None)
        fsr = float(coef[0])
    resid = peaks - origin - A @ coef
    dof = len(peaks) - A.shape[1]
    if np.sqrt(np.mean(resid ** 2)) > tolerance * fsr:
        raise CavityError("no periodic structure at the given FSR")
    if dof > 0:
        s2 = resid @ resid / dof
        fsr_err = float(np.sqrt(s2 * np.linalg.pinv(A.T @ A)[0, 0]))
    else:
        fsr_err = float("nan")
    groups = []
    for k, f in enumerate(families):
        groups.append(ModeGroup(float(coef[1 + k] + origin), tuple(peaks[f]), tuple(int(i) for i in n[f])))
    groups.sort(key=lambda g: g.offset)
    return FSRGrouping(fsr, fsr_err, tuple(groups))


def _cluster_1d(x, gap):
    """Label points so that sorted neighbours closer than ``gap`` share a label."""
    order = np.argsort(x, kind="stable")
    labels = np.empty(len(x), dtype=int)
    current = 0
    labels[order[0]] = 0
    for prev, idx in zip(order[:-1], order[1:]):
        if x[idx] - x[prev] > gap:
            current += 1
        labels[idx] = current
    return labels

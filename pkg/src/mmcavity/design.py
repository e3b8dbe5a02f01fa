"""Mirror sizing and transverse optical access of a symmetric two-mirror cavity.

The numerical aperture is the half-angle of the widest cone from the cavity
centre, with its axis transverse to the cavity axis, that clears both
mirrors. For spherical caps of radius R and aperture radius rm the mirror
edge sits at z_edge = L/2 - (R - sqrt(R^2 - rm^2)) from the centre, so

    NA = sin(atan(z_edge / rm)).

Ignoring the sagitta (``flat_edge=True``) places the edge at L/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CavityGeometry
from .errors import CavityError

F_CLIP_DEFAULT = 1e10
WAVELENGTH_DEFAULT = 3.26e-3


def mirror_radius_for_clip_target(spot_w1, F_clip=F_CLIP_DEFAULT):
    """Mirror radius w1 sqrt(ln(F/pi) / 2) at which clipping limits the finesse to F."""
    if not F_clip > math.pi:
        raise CavityError("clipping finesse target must exceed pi")
    if not spot_w1 > 0:
        raise CavityError("spot size must be positive")
    return spot_w1 * math.sqrt(math.log(F_clip / math.pi) / 2)


@dataclass(frozen=True)
class ApertureResult:
    numerical_aperture: float
    z_edge: float
    enclosed: bool = False


def _aperture(L, R, rm, flat_edge):
    sag = 0.0 if flat_edge else R - np.sqrt(R ** 2 - rm ** 2)
    z_edge = L / 2 - sag
    na = np.where(z_edge > 0, np.sin(np.arctan2(np.maximum(z_edge, 0.0), rm)), 0.0)
    return na, z_edge


def numerical_aperture(geometry, mirror_radius_rm=None, flat_edge=False, full=False):
    """Transverse numerical aperture left open by the mirrors.

    Parameters
    ----------
    geometry : CavityGeometry
        Uses ``length_L`` and ``mean_curvature_R``.
    mirror_radius_rm : float, optional
        Mirror aperture radius; defaults to ``geometry.mirror_radius_rm``.
    flat_edge : bool
        Ignore the sagitta of the mirror cap.
    full : bool
        Return an :class:`ApertureResult` instead of the bare NA.

    Returns
    -------
    float or ApertureResult
        NA is 0 (and ``enclosed`` set) when the mirror edges reach past the
        midplane.
    """
    rm = geometry.mirror_radius_rm if mirror_radius_rm is None else mirror_radius_rm
    if rm is None or not rm > 0:
        raise CavityError("mirror radius must be positive")
    R = geometry.mean_curvature_R
    if rm > R:
        raise CavityError("mirror radius exceeds the curvature radius; sagitta undefined")
    na, z_edge = _aperture(geometry.length_L, R, rm, flat_edge)
    result = ApertureResult(float(na), float(z_edge), bool(z_edge <= 0))
    return result if full else result.numerical_aperture


@dataclass(frozen=True)
class DesignPoint:
    """One cell of the design map. Lengths in meters."""

    L_over_zR: float
    zR_over_lambda: float
    clip_target_F: float
    mirror_radius: float
    numerical_aperture: float
    length_over_lambda: float
    gbar: float
    valid: bool = True
    reason: str = ""


@dataclass(frozen=True)
class DesignMap:
    """NA over a (L/zR, zR/lambda) grid; arrays are indexed [i_L, i_zR]."""

    L_over_zR: np.ndarray
    zR_over_lambda: np.ndarray
    clip_target_F: float
    wavelength: float
    numerical_aperture: np.ndarray
    mirror_radius: np.ndarray
    length_over_lambda: np.ndarray
    gbar: np.ndarray
    valid: np.ndarray
    flat_edge: bool = False

    @property
    def shape(self):
        return self.numerical_aperture.shape

    def point(self, i, j):
        ok = bool(self.valid[i, j])
        return DesignPoint(
            L_over_zR=float(self.L_over_zR[i]),
            zR_over_lambda=float(self.zR_over_lambda[j]),
            clip_target_F=self.clip_target_F,
            mirror_radius=float(self.mirror_radius[i, j]),
            numerical_aperture=float(self.numerical_aperture[i, j]),
            length_over_lambda=float(self.length_over_lambda[i, j]),
            gbar=float(self.gbar[i, j]),
            valid=ok,
            reason="" if ok else _reason(self.gbar[i, j], self.mirror_radius[i, j],
                                         self.L_over_zR[i] * self.zR_over_lambda[j] * self.wavelength),
        )

    def points(self):
        return [self.point(i, j) for i in range(self.shape[0]) for j in range(self.shape[1])]


def _reason(gbar, rm, L):
    if not abs(gbar) < 1:
        return "unstable"
    R = L / (1 - gbar)
    if rm > R:
        return "mirror radius exceeds curvature radius"
    return "mirrors enclose the midplane"


def default_grids(n_L=200, n_zR=200):
    """Linear L/zR in [0.05, 6] and log-spaced zR/lambda in [1, 30]."""
    return np.linspace(0.05, 6.0, n_L), np.geomspace(1.0, 30.0, n_zR)


def design_map(L_over_zR=None, zR_over_lambda=None, F_clip=F_CLIP_DEFAULT, wavelength=WAVELENGTH_DEFAULT,
               flat_edge=False):
    """Numerical aperture over the dimensionless design space.

    For each cell the symmetric geometry follows from
    (2 zR / L)^2 = (1 + g) / (1 - g) and R = L / (1 - g). Mirrors are sized
    so that clipping alone limits the finesse to ``F_clip``. Cells where the
    mirror radius exceeds R, the geometry is unstable, or the mirrors
    enclose the midplane are marked invalid with NA = 0.
    """
    if L_over_zR is None or zR_over_lambda is None:
        dl, dz = default_grids()
        L_over_zR = dl if L_over_zR is None else L_over_zR
        zR_over_lambda = dz if zR_over_lambda is None else zR_over_lambda
    x = np.asarray(L_over_zR, dtype=float)
    y = np.asarray(zR_over_lambda, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or np.any(x <= 0) or np.any(y <= 0):
        raise CavityError("grids must be 1-d and positive")
    if not wavelength > 0:
        raise CavityError("wavelength must be positive")
    if not F_clip > math.pi:
        raise CavityError("clipping finesse target must exceed pi")
    X, Y = np.meshgrid(x, y, indexing="ij")
    zR = Y * wavelength
    L = X * zR
    s = (2 / X) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        gbar = (s - 1) / (s + 1)
        stable = np.abs(gbar) < 1
        R = np.where(stable, L / (1 - gbar), np.inf)
        w0 = np.sqrt(wavelength * zR / math.pi)
        w1 = w0 * np.sqrt(1 + (X / 2) ** 2)
        rm = w1 * math.sqrt(math.log(F_clip / math.pi) / 2)
        fits = stable & (rm <= R)
        na, z_edge = _aperture(L, np.where(fits, R, 2 * rm), rm, flat_edge)
    valid = fits & (z_edge > 0)
    na = np.where(valid, na, 0.0)
    return DesignMap(x, y, float(F_clip), float(wavelength), na, rm, L / wavelength, gbar, valid, bool(flat_edge))


def geometry_for_cell(L_over_zR, zR_over_lambda, wavelength=WAVELENGTH_DEFAULT, F_clip=F_CLIP_DEFAULT):
    """Symmetric CavityGeometry (with clip-sized mirrors) for one design-map cell."""
    zR = zR_over_lambda * wavelength
    L = L_over_zR * zR
    s = (2 / L_over_zR) ** 2
    gbar = (s - 1) / (s + 1)
    R = L / (1 - gbar)
    w1 = math.sqrt(wavelength * zR / math.pi) * math.sqrt(1 + (L_over_zR / 2) ** 2)
    return CavityGeometry(L, R, mirror_radius_rm=mirror_radius_for_clip_target(w1, F_clip))

import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmcavity import constants as const
from mmcavity.core import MATERIAL_PRESETS, derive_gaussian_params, free_spectral_range, rad
from mmcavity.errors import CavityError, IdentifiabilityError
from mmcavity.loss import (
    bcs_conductivity_ratio,
    bcs_surface_resistance,
    clipping_finesse,
    coherence_length,
    combine_losses,
    finesse_from_surface_resistance,
    finesse_vs_frequency_model,
    finesse_vs_temperature_model,
    fit_finesse_vs_frequency,
    fit_finesse_vs_temperature,
    inverse_variance_mean,
    loss_budget,
    mean_free_path,
    penetration_depth,
    purity_factor,
    roughness_finesse,
    surface_resistance_from_finesse,
    vortex_crossover_frequency,
    vortex_resistance_limit,
)

from oracles import bcs_ratio_gauss_legendre

NB = MATERIAL_PRESETS["niobium-film"]
GAUSS = 1e-4
F_MODE = rad(94.073e9)


@pytest.mark.parametrize("T, f", list(itertools.product((0.5, 1.0, 2.0, 4.0), (70e9, 94e9, 110e9))))
def test_bcs_ratio_matches_fixed_grid_oracle(T, f):
    main = bcs_conductivity_ratio(T, rad(f), NB.gap_over_kB)
    assert main == pytest.approx(bcs_ratio_gauss_legendre(T, rad(f), NB.gap_over_kB), rel=1e-6)


def test_bcs_ratio_self_consistent_under_tighter_tolerance():
    a = bcs_conductivity_ratio(4.0, F_MODE, NB.gap_over_kB, epsrel=1e-10)
    b = bcs_conductivity_ratio(4.0, F_MODE, NB.gap_over_kB, epsrel=5e-11)
    assert a == pytest.approx(b, rel=1e-9)


def test_bcs_ratio_vanishes_at_low_temperature():
    assert bcs_conductivity_ratio(0.05, F_MODE, NB.gap_over_kB) < 1e-150


def test_pair_breaking_regime_rejected():
    two_gap = 2 * const.k_B * NB.gap_over_kB / const.hbar
    with pytest.raises(CavityError):
        bcs_conductivity_ratio(2.0, 1.01 * two_gap, NB.gap_over_kB)


def test_bcs_ratio_monotonic_in_temperature():
    values = [bcs_conductivity_ratio(T, F_MODE, NB.gap_over_kB) for T in np.linspace(0.5, 4.5, 17)]
    assert np.all(np.diff(values) > 0)


def test_bcs_ratio_boltzmann_scaling():
    r = bcs_conductivity_ratio(2.0, F_MODE, NB.gap_over_kB) / bcs_conductivity_ratio(4.0, F_MODE, NB.gap_over_kB)
    assert r == pytest.approx(math.exp(-NB.gap_over_kB * (1 / 2 - 1 / 4)), rel=0.25)


def test_surface_resistance_grows_slower_than_omega_squared():
    # sigma_1/sigma_n falls with omega, so R_BCS / omega^2 is not flat
    for T in (2.0, 4.0):
        omegas = rad(np.array([70e9, 94e9, 110e9]))
        R = np.array([bcs_surface_resistance(NB, T, w) for w in omegas])
        assert np.all(np.diff(R) > 0)
        assert np.all(np.diff(R / omegas ** 2) < 0)
        ratios = [bcs_conductivity_ratio(T, w, NB.gap_over_kB) for w in omegas]
        lam = penetration_depth(NB, T)
        direct = const.mu_0 ** 2 * omegas ** 2 * lam ** 3 / (2 * NB.normal_resistivity_rho_n) * np.array(ratios)
        assert R == pytest.approx(direct, rel=1e-14)


def test_arrhenius_slope():
    w = rad(10e9)
    slope = (math.log(bcs_surface_resistance(NB, 3.0, w)) - math.log(bcs_surface_resistance(NB, 2.0, w))) / (1 / 3 - 1 / 2)
    assert slope == pytest.approx(-NB.gap_over_kB, rel=0.10)


def test_material_lengths():
    assert mean_free_path(NB) == pytest.approx(320e-9, rel=0.05)
    assert penetration_depth(NB, 0.0) == pytest.approx(40e-9, rel=0.03)
    assert coherence_length(NB) == pytest.approx(36e-9, rel=0.03)
    doubled = dataclasses.replace(NB, normal_resistivity_rho_n=2 * NB.normal_resistivity_rho_n)
    assert mean_free_path(doubled) == pytest.approx(mean_free_path(NB) / 2, rel=1e-14)


def test_penetration_depth_limits():
    assert purity_factor(0.0) == 1.0
    assert penetration_depth(NB, 0.0, mean_free_path_ell=math.inf) == NB.lambda_pure_0
    assert penetration_depth(NB, 4.0) / penetration_depth(NB, 0.0) == pytest.approx(1.0183, abs=1e-4)
    with pytest.raises(CavityError):
        penetration_depth(NB, NB.critical_T)


@given(a=st.floats(1e-6, 50.0))
def test_purity_factor_continuous_and_increasing(a):
    assert purity_factor(a * 1.001) > purity_factor(a)
    assert purity_factor(a) >= 1.0


def test_purity_factor_branches_join():
    assert purity_factor(1 - 1e-9) == pytest.approx(purity_factor(1.0), rel=1e-6)
    assert purity_factor(1 + 1e-9) == pytest.approx(purity_factor(1.0), rel=1e-6)
    assert purity_factor(0.99e-4) == pytest.approx(purity_factor(1.01e-4), rel=1e-6)


def test_vortex_limits():
    # resistance at 1 G is the ohm-per-gauss figure
    assert vortex_resistance_limit(NB, GAUSS, xi=36e-9, lam=40e-9) == pytest.approx(13.8e-6, rel=0.01)
    assert vortex_resistance_limit(NB, GAUSS) == pytest.approx(12e-6, rel=0.20)
    assert vortex_resistance_limit(NB, 0.0) == 0.0
    F_flux = finesse_from_surface_resistance(vortex_resistance_limit(NB, 0.22 * GAUSS))
    assert F_flux == pytest.approx(1.1e8, rel=0.20)
    assert vortex_crossover_frequency(NB) == pytest.approx(rad(44e9), rel=0.30)


def test_roughness_example():
    F = roughness_finesse(rad(94e9) / const.c, 23e-9)
    assert 3.5e8 <= F <= 4.2e8
    assert roughness_finesse(1e3, 0.0) == math.inf


def test_clipping_finesse():
    assert clipping_finesse(1.0, 1.0) == pytest.approx(math.pi * math.e ** 2, rel=1e-15)
    assert clipping_finesse(0.0, 1.0) == math.pi


def test_surface_resistance_round_trip():
    assert surface_resistance_from_finesse(finesse_from_surface_resistance(1e-6)) == pytest.approx(1e-6, rel=1e-15)


def test_combine_losses_examples():
    assert combine_losses({"a": 3e7}).total_finesse == 3e7
    assert combine_losses({"a": 4e7, "b": 4e7}).total_finesse == pytest.approx(2e7, rel=1e-15)
    assert combine_losses({"flux": 1.12e8, "surf": 3.8e8}).total_finesse == pytest.approx(8.65e7, rel=0.01)
    assert combine_losses({"a": math.inf}).total_finesse == math.inf
    with pytest.raises(CavityError):
        combine_losses({"a": 0.0})


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e3, 1e12), min_size=1, max_size=6), st.randoms())
def test_combine_losses_permutation_and_association(values, random):
    total = combine_losses([(str(i), v) for i, v in enumerate(values)]).total_finesse
    shuffled = values[:]
    random.shuffle(shuffled)
    assert combine_losses([(str(i), v) for i, v in enumerate(shuffled)]).total_finesse == pytest.approx(total, rel=1e-12)
    head = combine_losses([("h", v) for v in values[:1]]).total_finesse
    if len(values) > 1:
        tail = combine_losses([("t", v) for v in values[1:]]).total_finesse
        assert combine_losses([("h", head), ("t", tail)]).total_finesse == pytest.approx(total, rel=1e-12)


def test_finesse_limits_decrease_with_drive():
    ks = rad(94e9) / const.c
    assert roughness_finesse(ks, 10e-9) > roughness_finesse(ks, 20e-9)
    assert vortex_resistance_limit(NB, 1e-5) < vortex_resistance_limit(NB, 2e-5)
    Fs = [finesse_from_surface_resistance(bcs_surface_resistance(NB, T, F_MODE)) for T in (1.0, 2.0, 3.0)]
    assert Fs == sorted(Fs, reverse=True)


def test_loss_budget_channels(g2):
    budget = loss_budget(NB, 1.0, rad(94e9), B_perp=0.22 * GAUSS, h_rms=23e-9, geometry=g2)
    d = budget.to_dict()
    assert set(d) == {"bcs", "flux", "roughness", "clipping"}
    assert budget.total_finesse == pytest.approx(1 / sum(1 / v for v in d.values()), rel=1e-12)
    assert loss_budget(NB, 1.0, rad(94e9)).to_dict()["flux"] == math.inf


def _temperature_data(noise, rng=None):
    R0 = surface_resistance_from_finesse(6e7)
    T = np.linspace(0.5, 4.5, 25)
    F = finesse_vs_temperature_model(T, R0, 37e-9, F_MODE, NB)
    if rng is not None:
        F = F * (1 + noise * rng.standard_normal(len(F)))
    return R0, list(zip(T, F))


def test_temperature_fit_noiseless():
    R0, data = _temperature_data(0.0)
    fit = fit_finesse_vs_temperature(data, F_MODE)
    assert fit.R0 == pytest.approx(R0, rel=0.02)
    assert fit.lambda_pure_0 == pytest.approx(37e-9, rel=0.02)


def test_temperature_fit_with_noise():
    R0, data = _temperature_data(0.02, np.random.default_rng(11))
    fit = fit_finesse_vs_temperature(data, F_MODE, sigma_rel=0.02)
    assert fit.lambda_pure_0 == pytest.approx(37e-9, rel=0.01)
    assert abs(fit.lambda_pure_0 - 37e-9) < 3 * fit.stderr_lambda_pure_0
    assert fit.R0 == pytest.approx(R0, rel=0.02)


def test_temperature_fit_without_bcs_term_is_unidentifiable():
    data = [(T, 6e7) for T in np.linspace(0.3, 1.2, 10)]
    with pytest.raises(IdentifiabilityError) as info:
        fit_finesse_vs_temperature(data, F_MODE)
    assert info.value.parameter == "lambda_pure_0"


def test_temperature_fit_preconditions():
    with pytest.raises(CavityError):
        fit_finesse_vs_temperature([(1.0, 1e7), (1.2, 1e7), (1.5, 1e7)], F_MODE)


def _frequency_data(geometry, F_lim, b, rng, noise=0.01):
    omegas = rad(np.linspace(60e9, 110e9, 14))
    F = finesse_vs_frequency_model(omegas, F_lim, b, geometry)
    return list(zip(omegas, F * (1 + noise * rng.standard_normal(len(F)))))


def test_plateau_fits_and_concordance(g1, g2):
    rng = np.random.default_rng(31)
    g1 = dataclasses.replace(g1, mirror_radius_rm=24e-3)
    fit1 = fit_finesse_vs_frequency(_frequency_data(g1, 6.16e7, 1.35, rng), g1, sigma_rel=0.01)
    fit2 = fit_finesse_vs_frequency(_frequency_data(g2, 5.74e7, 1.2, rng), g2, sigma_rel=0.01)
    assert fit1.F_lim == pytest.approx(6.16e7, rel=0.02)
    assert fit2.F_lim == pytest.approx(5.74e7, rel=0.02)
    mean, err = inverse_variance_mean([6.16e7, 5.74e7], [0.21e7, 0.10e7])
    assert mean == pytest.approx(5.8e7, abs=0.1e7)
    assert err == pytest.approx(0.09e7, abs=0.01e7)
    fitted_mean, _ = inverse_variance_mean([fit1.F_lim, fit2.F_lim], [0.21e7, 0.10e7])
    assert fitted_mean == pytest.approx(5.8e7, abs=0.1e7)


def test_plateau_fit_noiseless_without_clipping(g2):
    # with rm / w >> 1 the clipping term is invisible and the plateau is returned exactly
    omegas = rad(np.linspace(95e9, 110e9, 6))
    w1 = derive_gaussian_params(g2, omegas[0]).mirror_spot_w1
    assert g2.mirror_radius_rm / w1 > 3
    data = list(zip(omegas, finesse_vs_frequency_model(omegas, 5.8e7, 1.0, g2)))
    fit = fit_finesse_vs_frequency(data, g2, b_guess=1.0)
    assert fit.F_lim == pytest.approx(5.8e7, rel=1e-9)


def test_frequency_fit_needs_mirror_radius(g1):
    with pytest.raises(CavityError):
        fit_finesse_vs_frequency([(1e11, 1e7)] * 3, g1)


def test_linewidth_finesse_cross_check():
    fsr = free_spectral_range(45.44e-3)
    assert fsr / rad(55.1) == pytest.approx(5.99e7, rel=2e-3)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmcavity.core import rad
from mmcavity.errors import CavityError
from mmcavity.measurement import (
    RingdownShot,
    SweepTrace,
    ThruCalibration,
    coherent_average_kappa,
    extract_probe_coupling,
    gaussian_intensity_ratio,
    initial_poles,
    instantaneous_detuning,
    length_excursion,
    probe_coupling_from_field,
    qcircle_diameter,
    qcircle_diameter_from_rates,
    refine_resonance,
    ringdown_fit_ensemble,
    synthesize_ensemble,
    synthesize_sweep,
    vector_fit,
)

F0 = rad(90e9)
KAPPA_RD = rad(813.3)


def _axis(center, kappa, n=401, width=12):
    return center + np.linspace(-width, width, n) * kappa / 2


def _fit(trace):
    return refine_resonance(vector_fit(trace, 1), trace)


def test_single_pole_noiseless_recovery():
    kappa = rad(1e3)
    trace = synthesize_sweep(_axis(F0, kappa), F0, kappa, 0.3 * kappa, background=0.02 - 0.01j, phase=0.7)
    model = vector_fit(trace, 1)
    p = model.poles[0]
    assert -2 * p.real == pytest.approx(kappa, rel=1e-8)
    assert p.imag == pytest.approx(F0, rel=1e-12)
    assert np.all(model.poles.real <= 0)
    assert model.rms_error < 1e-10


def test_refit_of_model_output_is_exact():
    kappa = rad(2e3)
    omega = _axis(F0, kappa)
    model = vector_fit(synthesize_sweep(omega, F0, kappa, 0.2 * kappa, background=0.1), 1)
    again = vector_fit(SweepTrace(omega, model(omega)), 1)
    assert again.rms_error < 1e-12
    assert again.poles == pytest.approx(model.poles, rel=1e-12)


def test_model_reproduces_data_to_reported_rms():
    rng = np.random.default_rng(4)
    kappa = rad(1e3)
    trace = synthesize_sweep(_axis(F0, kappa), F0, kappa, 0.4 * kappa, noise=1e-3, rng=rng)
    model = vector_fit(trace, 2)
    rms = math.sqrt(np.mean(np.abs(model(trace.omega) - trace.s21) ** 2))
    assert rms == pytest.approx(model.rms_error, rel=1e-12)


def test_vector_fit_at_minus_80_db_noise():
    kappa, coupling = rad(1e3), rad(200.0)
    peak = qcircle_diameter(kappa, coupling)
    noise = peak * 10 ** (-80 / 20)
    omega = _axis(F0, kappa)
    worst = np.zeros(3)
    for seed in range(50):
        rng = np.random.default_rng(seed)
        trace = synthesize_sweep(omega, F0, kappa, coupling, background=0.05 * peak, phase=seed * 0.1,
                                 noise=noise, rng=rng)
        res = _fit(trace)
        err = np.abs([res.kappa / kappa - 1, (res.omega0 - F0) / kappa, res.sqrt_k1k2 / coupling - 1])
        worst = np.maximum(worst, err)
    assert np.all(worst < 0.01)


def test_qcircle_style_uncertainty():
    kappa = rad(7.214e3)
    rng = np.random.default_rng(8)
    coupling = 0.3 * kappa
    trace = synthesize_sweep(_axis(F0, kappa, 301), F0, kappa, coupling, noise=2e-3, rng=rng)
    res = _fit(trace)
    assert res.kappa_err / res.kappa < 3e-3
    assert abs(res.kappa - kappa) < 3 * res.kappa_err


def test_noiseless_covariance_vanishes():
    kappa = rad(1e3)
    res = _fit(synthesize_sweep(_axis(F0, kappa), F0, kappa, 0.3 * kappa, background=0.01))
    assert res.kappa_err < 1e-9 * kappa
    assert res.omega0_err < 1e-9 * kappa


@settings(max_examples=20, deadline=None)
@given(shift=st.floats(-rad(1e9), rad(1e9)))
def test_frequency_shift_equivariance(shift):
    kappa = rad(1e3)
    omega = _axis(F0, kappa)
    a = _fit(synthesize_sweep(omega, F0, kappa, 0.3 * kappa, background=0.02))
    b = _fit(synthesize_sweep(omega + shift, F0 + shift, kappa, 0.3 * kappa, background=0.02))
    assert b.omega0 - a.omega0 == pytest.approx(shift, abs=1e-6 * kappa)
    assert b.kappa == pytest.approx(a.kappa, rel=1e-7)


def test_insertion_loss_chain():
    kappa0 = rad(400.0)
    k1 = k2 = rad(200.0)
    kappa = kappa0 + k1 + k2
    coupling = math.sqrt(k1 * k2)
    rng = np.random.default_rng(12)
    trace = synthesize_sweep(_axis(F0, kappa), F0, kappa, coupling, insertion_loss_dB=20.0, phase=1.1,
                             noise=1e-5, rng=rng)
    res = _fit(trace)
    value = extract_probe_coupling(res, insertion_loss_dB=20.0)
    assert value == pytest.approx(coupling, rel=0.01)
    thru = ThruCalibration(np.array([F0 - 1e9, F0 + 1e9]), np.array([19.0, 21.0]))
    assert extract_probe_coupling(res, insertion_loss_dB=thru) == pytest.approx(value, rel=1e-6)
    assert qcircle_diameter(res.kappa, value) == pytest.approx(qcircle_diameter_from_rates(kappa0, k1, k2), rel=0.01)


def test_coupling_bound_enforced():
    kappa = rad(1e3)
    res = _fit(synthesize_sweep(_axis(F0, kappa), F0, kappa, 0.4 * kappa, insertion_loss_dB=10.0))
    with pytest.raises(CavityError):
        extract_probe_coupling(res, insertion_loss_dB=20.0)
    with pytest.raises(CavityError):
        extract_probe_coupling(res, insertion_loss_dB=-1.0)


def test_qcircle_diameters():
    assert qcircle_diameter_from_rates(0.0, 1.0, 1.0) == 1.0
    assert qcircle_diameter_from_rates(1.0, 1.0, 1.0) == pytest.approx(2 / 3, rel=1e-15)


def test_vector_fit_preconditions():
    trace = SweepTrace(np.arange(6.0), np.ones(6))
    with pytest.raises(CavityError):
        vector_fit(trace, 2)
    with pytest.raises(CavityError):
        vector_fit(trace, 0)
    with pytest.raises(CavityError):
        SweepTrace(np.array([1.0, 1.0, 2.0]), np.ones(3))


def test_initial_pole_layout():
    p = initial_poles(4)
    assert np.all(p.real < 0)
    assert np.all(np.diff(p.imag) > 0)
    # real parts are one percent of the normalized half-span
    assert p.real == pytest.approx(np.full(4, -0.01))


def test_two_pole_sweep():
    kappa = rad(1e3)
    omega = _axis(F0, kappa, 801, 30)
    h = synthesize_sweep(omega, F0 - 4 * kappa, kappa, 0.2 * kappa).s21 + \
        synthesize_sweep(omega, F0 + 5 * kappa, 2 * kappa, 0.3 * kappa).s21
    model = vector_fit(SweepTrace(omega, h), 2)
    order = np.argsort(model.poles.imag)
    assert -2 * model.poles.real[order] == pytest.approx([kappa, 2 * kappa], rel=1e-8)


def _ensemble(seed, **kw):
    args = dict(kappa=KAPPA_RD, n_shots=200, duration=12 / KAPPA_RD, n_samples=300, amplitude=1.0,
                noise_sigma=0.05, s_inf=0.02 + 0.01j, detuning_rms=rad(150.0), detuning_corr_time=2e-3)
    args.update(kw)
    return synthesize_ensemble(rng=np.random.default_rng(seed), **args)


def test_ringdown_ensemble_recovers_kappa():
    shots = _ensemble(1)
    fit = ringdown_fit_ensemble(shots)
    assert fit.kappa == pytest.approx(KAPPA_RD, rel=0.005)
    assert fit.noise_sigma2 == pytest.approx(0.05 ** 2, rel=0.1)
    assert abs(fit.s_inf - (0.02 + 0.01j)) < 0.005
    assert not fit.low_snr


def _rotate(shots, seed):
    rng = np.random.default_rng(seed)
    return [RingdownShot(s.times, s.samples * np.exp(1j * rng.uniform(0, 2 * math.pi)), s.shot_id) for s in shots]


def test_ringdown_invariant_to_shot_phase_without_offset():
    # with no offset and no noise the optimum sits at s_inf = 0, where rotations drop out exactly
    shots = _ensemble(2, n_shots=20, s_inf=0j, noise_sigma=0.0)
    base = ringdown_fit_ensemble(shots)
    assert base.kappa == pytest.approx(KAPPA_RD, rel=1e-6)
    assert ringdown_fit_ensemble(_rotate(shots, 3)).kappa == pytest.approx(base.kappa, rel=1e-6)


def test_ringdown_phase_rotation_within_statistical_error():
    # a fitted common offset picks up noise, so noisy shots are invariant only statistically
    shots = _ensemble(2, n_shots=40, s_inf=0j)
    base = ringdown_fit_ensemble(shots)
    rotated = ringdown_fit_ensemble(_rotate(shots, 3))
    assert abs(rotated.kappa - base.kappa) < base.kappa_err


def test_ringdown_invariant_to_shot_order():
    shots = _ensemble(4, n_shots=30)
    base = ringdown_fit_ensemble(shots)
    assert ringdown_fit_ensemble(shots[::-1]).kappa == pytest.approx(base.kappa, rel=1e-12)


def test_single_clean_shot_is_exact():
    shots = synthesize_ensemble(KAPPA_RD, 1, 12 / KAPPA_RD, 200, random_phase=False)
    fit = ringdown_fit_ensemble(shots, s_inf0=0j)
    assert fit.kappa == pytest.approx(KAPPA_RD, rel=1e-6)


def test_coherent_average_is_biased_high():
    # shots start in phase, then dephase through the detuning walk
    shots = _ensemble(5, n_shots=100, s_inf=0j, random_phase=False, detuning_rms=rad(300.0),
                      detuning_corr_time=1e-2)
    coherent = coherent_average_kappa(shots)
    ensemble = ringdown_fit_ensemble(shots).kappa
    assert coherent > 1.05 * KAPPA_RD
    assert ensemble == pytest.approx(KAPPA_RD, rel=0.02)


def test_low_snr_flag():
    shots = _ensemble(6, n_shots=5, amplitude=0.02, noise_sigma=0.05, s_inf=0j)
    assert ringdown_fit_ensemble(shots, s_inf0=0j).low_snr


def test_ringdown_shot_validation():
    with pytest.raises(CavityError):
        RingdownShot(np.array([0.0, 1.0, 3.0]), np.ones(3))
    with pytest.raises(CavityError):
        RingdownShot(np.array([0.0, 1.0]), np.ones(2))


def test_constant_detuning_recovered():
    t = np.linspace(0, 5e-3, 2000)
    delta = rad(200.0)
    shot = RingdownShot(t, 0.1 + np.exp(-KAPPA_RD * t / 2 + 1j * delta * t))
    times, d = instantaneous_detuning(shot, 0.1)
    assert d[5:-5] == pytest.approx(np.full(len(d) - 10, delta), rel=1e-9)


def test_zero_detuning_has_flat_phase():
    t = np.linspace(0, 5e-3, 500)
    shot = RingdownShot(t, np.exp(-KAPPA_RD * t / 2) * np.exp(0.3j))
    _, d = instantaneous_detuning(shot, 0j)
    assert np.max(np.abs(d)) < 1e-6


def test_detuning_truncated_at_low_snr():
    t = np.linspace(0, 20 / KAPPA_RD, 500)
    shot = RingdownShot(t, np.exp(-KAPPA_RD * t / 2))
    times, _ = instantaneous_detuning(shot, 0j, noise_sigma2=1e-4)
    assert times[-1] < t[-1]
    assert math.exp(-KAPPA_RD * times[-1]) >= 3e-4


def test_length_excursion_example():
    assert length_excursion(rad(700.0), rad(92e9), 47.15e-3) == pytest.approx(0.36e-9, rel=0.1)


def test_probe_coupling_from_field():
    args = dict(mode_volume=0.81e-6, omega=rad(90e9), tip_area=1e-6)
    assert probe_coupling_from_field(0.0, **args) == 0.0
    single = probe_coupling_from_field(0.5, **args)
    assert probe_coupling_from_field(0.5, **{**args, "tip_area": 2e-6}) == pytest.approx(4 * single, rel=1e-15)
    with pytest.raises(CavityError):
        probe_coupling_from_field(1.5, **args)


def test_probe_coupling_decays_with_radius(g1):
    from mmcavity.core import derive_gaussian_params
    w1 = derive_gaussian_params(g1, rad(90e9)).mirror_spot_w1
    radii = np.linspace(12e-3, 22e-3, 6)
    values = [probe_coupling_from_field(gaussian_intensity_ratio(r, w1), 0.81e-6, rad(90e9), 1e-6) for r in radii]
    assert np.all(np.diff(values) < 0)

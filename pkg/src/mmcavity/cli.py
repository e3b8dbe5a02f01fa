"""Command-line interface.

Frequencies in files and on the command line are in Hz (not rad/s); lengths
in meters, temperatures in kelvin, fields in tesla. Results are JSON
objects carrying ``schema_version`` or CSV tables with a fixed header.

Exit codes: 0 success, 2 bad input (arguments or files), 3 numerical
failure. Errors are written to standard error as a JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as const
from .core import CavityGeometry, derive_gaussian_params, free_spectral_range, load_material, mode_volume
from .errors import CavityError, ConvergenceError, IdentifiabilityError
from .cqed.gate import GateParams, scan_iswap
from .cqed.params import (
    cooperativity,
    cooperativity_from_rates,
    rydberg_circular_transition,
    spontaneous_rate,
    vacuum_field_rms,
    vacuum_rabi,
)
from .design import design_map
from .geomfit import ModeAssignment, fit_geometry, synthesize_assignments
from .loss import bcs_surface_resistance, loss_budget, vortex_resistance_limit
from .measurement.resonance import ThruCalibration, extract_probe_coupling, refine_resonance, synthesize_sweep
from .measurement.ringdown import RingdownShot, ringdown_fit_ensemble, synthesize_ensemble
from .measurement.vectfit import SweepTrace, vector_fit
from .spectrum import predict_spectrum

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
TWO_PI = 2 * math.pi

# (g, kappa, Gamma_up, Gamma_down) / 2pi in Hz for the gate simulation
PAPER_RATES = (22e3, 55.0, 13.0, 15.0)

CSV_SCHEMAS = {
    "assignments": ("freq_hz", "q", "pol", "sigma_hz"),
    "sweep": ("freq_hz", "re", "im"),
    "ringdown": ("shot_id", "time_s", "re", "im"),
    "thru": ("freq_hz", "loss_db"),
    "spectrum": ("freq_hz", "q", "N", "l", "p", "pol", "weight"),
    "parameters": ("parameter", "value", "stderr"),
    "budget": ("channel", "finesse"),
    "design_map": ("L_over_zR", "zR_over_lambda", "na", "length_over_lambda"),
    "gate_scan": ("delta_over_g", "infidelity", "mode"),
    "quantities": ("quantity", "value"),
}


class InputError(Exception):
    """Malformed arguments or input files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


# ---------------------------------------------------------------- file I/O

def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def read_csv(path, schema):
    """Rows of a CSV file as dicts of strings, checking the header against ``schema``."""
    columns = CSV_SCHEMAS[schema]
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    reader = csv.DictReader(io.StringIO(text))
    header = tuple(h.strip() for h in (reader.fieldnames or ()))
    missing = [c for c in columns if c not in header]
    if missing:
        raise InputError(f"{path}: missing column {missing[0]!r} (expected {','.join(columns)})")
    return [{k.strip(): (v or "").strip() for k, v in row.items() if k is not None} for row in reader]


def _number(row, key, line, path, kind=float):
    try:
        value = kind(row[key]) if kind is not int else int(float(row[key]))
    except (TypeError, ValueError):
        raise InputError(f"{path}: row {line}: column {key!r} is not a number: {row[key]!r}") from None
    return value


def load_geometry(path):
    data = read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: geometry must be a JSON object")
    data = {k: v for k, v in data.items() if k != "schema_version"}
    try:
        return CavityGeometry.from_dict(data)
    except CavityError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_assignments(path):
    out = []
    for i, row in enumerate(read_csv(path, "assignments"), start=2):
        try:
            out.append(ModeAssignment(
                omega=TWO_PI * _number(row, "freq_hz", i, path),
                q=_number(row, "q", i, path, int),
                polarization=row["pol"],
                sigma=TWO_PI * _number(row, "sigma_hz", i, path),
            ))
        except CavityError as exc:
            raise InputError(f"{path}: row {i}: {exc}") from None
    return out


def load_sweep(path):
    rows = read_csv(path, "sweep")
    f = [_number(r, "freq_hz", i, path) for i, r in enumerate(rows, start=2)]
    z = [complex(_number(r, "re", i, path), _number(r, "im", i, path)) for i, r in enumerate(rows, start=2)]
    try:
        return SweepTrace(TWO_PI * np.array(f), np.array(z))
    except CavityError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_thru(path):
    rows = read_csv(path, "thru")
    f = np.array([_number(r, "freq_hz", i, path) for i, r in enumerate(rows, start=2)])
    loss = np.array([_number(r, "loss_db", i, path) for i, r in enumerate(rows, start=2)])
    if len(f) < 1 or np.any(np.diff(f) <= 0):
        raise InputError(f"{path}: calibration frequencies must be strictly increasing")
    return ThruCalibration(TWO_PI * f, loss)


def load_ringdown(path):
    groups = {}
    for i, r in enumerate(read_csv(path, "ringdown"), start=2):
        sid = _number(r, "shot_id", i, path, int)
        groups.setdefault(sid, []).append(
            (_number(r, "time_s", i, path), complex(_number(r, "re", i, path), _number(r, "im", i, path))))
    shots = []
    for sid in sorted(groups):
        pts = sorted(groups[sid], key=lambda p: p[0])
        try:
            shots.append(RingdownShot(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]), sid))
        except CavityError as exc:
            raise InputError(f"{path}: shot {sid}: {exc}") from None
    if not shots:
        raise InputError(f"{path}: no ringdown samples")
    return shots


def format_csv(schema, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_SCHEMAS[schema])
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def format_json(command, result):
    payload = {"schema_version": SCHEMA_VERSION, "command": command, "result": result}
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _param_rows(values, errors):
    return [(name, float(values[name]), float(errors.get(name, 0.0))) for name in values]


# ---------------------------------------------------------------- commands

def cmd_spectrum(args):
    geometry = load_geometry(args.geometry)
    lines = predict_spectrum(geometry, TWO_PI * args.f_from, TWO_PI * args.f_to, N_max=args.nmax)
    rows = []
    for line in lines:
        lab = line.label
        weight = max(w for _, w in line.composition)
        rows.append((line.frequency_hz, lab.longitudinal_q, lab.transverse_N, lab.angular_l, lab.radial_p,
                     lab.polarization, weight))
    if args.output == "csv":
        return format_csv("spectrum", rows)
    keys = CSV_SCHEMAS["spectrum"]
    return format_json("spectrum", {"geometry": geometry.to_dict(), "modes": [dict(zip(keys, r)) for r in rows]})


def cmd_fit_geometry(args):
    assignments = load_assignments(args.assignments)
    initial = load_geometry(args.initial)
    fit = fit_geometry(assignments, initial, max_iterations=args.max_iterations)
    values = {k: v for k, v in fit.geometry.to_dict().items() if k != "mirror_radius_rm"}
    errors = fit.stderr
    if args.output == "csv":
        return format_csv("parameters", _param_rows(values, errors))
    return format_json("fit-geometry", {
        "geometry": fit.geometry.to_dict(),
        "stderr": errors,
        "covariance": fit.covariance,
        "chi2": fit.chi2,
        "residual_rms_hz": fit.residual_rms / TWO_PI,
        "residuals_hz": fit.residuals / TWO_PI,
        "n_iterations": fit.n_iterations,
        "gbar": fit.geometry.gbar,
    })


def cmd_fit_s21(args):
    trace = load_sweep(args.sweep)
    model = vector_fit(trace, n_poles=args.n_poles, n_iterations=args.iterations)
    params = refine_resonance(model, trace)
    loss = load_thru(args.thru) if args.thru else args.insertion_loss_db
    coupling = extract_probe_coupling(params, insertion_loss_dB=loss)
    factor = coupling / params.sqrt_k1k2 if params.sqrt_k1k2 > 0 else 1.0
    values = {
        "f0_hz": params.omega0 / TWO_PI,
        "linewidth_hz": params.kappa / TWO_PI,
        "sqrt_k1k2_hz": coupling / TWO_PI,
        "qcircle_diameter": params.qcircle_diameter,
    }
    errors = {
        "f0_hz": params.omega0_err / TWO_PI,
        "linewidth_hz": params.kappa_err / TWO_PI,
        "sqrt_k1k2_hz": params.sqrt_k1k2_err * factor / TWO_PI,
    }
    if args.fsr_hz:
        values["finesse"] = args.fsr_hz / values["linewidth_hz"]
        errors["finesse"] = values["finesse"] * errors["linewidth_hz"] / values["linewidth_hz"]
    if args.output == "csv":
        return format_csv("parameters", _param_rows(values, errors))
    resonance = params.to_dict()
    resonance["sqrt_k1k2"] = coupling
    resonance["sqrt_k1k2_err"] = params.sqrt_k1k2_err * factor
    return format_json("fit-s21", {"resonance": resonance, "values": values, "stderr": errors,
                                   "rms_error": model.rms_error,
                                   "n_iterations": model.n_iterations})


def cmd_fit_ringdown(args):
    shots = load_ringdown(args.shots)
    s_inf0 = complex(args.s_inf_re, args.s_inf_im) if args.s_inf_re is not None else None
    fit = ringdown_fit_ensemble(shots, s_inf0=s_inf0)
    values = {
        "linewidth_hz": fit.kappa / TWO_PI,
        "lifetime_s": 1 / fit.kappa,
        "amplitude2": fit.amplitude2,
        "noise_sigma2": fit.noise_sigma2,
    }
    errors = {
        "linewidth_hz": fit.kappa_err / TWO_PI,
        "lifetime_s": fit.kappa_err / fit.kappa ** 2,
        "amplitude2": fit.amplitude2_err,
        "noise_sigma2": fit.noise_sigma2_err,
    }
    if args.fsr_hz:
        values["finesse"] = args.fsr_hz / values["linewidth_hz"]
        errors["finesse"] = values["finesse"] * errors["linewidth_hz"] / values["linewidth_hz"]
    if args.output == "csv":
        return format_csv("parameters", _param_rows(values, errors))
    return format_json("fit-ringdown", {"values": values, "stderr": errors, "s_inf_re": fit.s_inf.real,
                                        "s_inf_im": fit.s_inf.imag, "n_shots": fit.n_shots, "low_snr": fit.low_snr})


def cmd_loss_budget(args):
    try:
        material = load_material(args.material)
    except CavityError as exc:
        raise InputError(str(exc)) from None
    geometry = load_geometry(args.geometry) if args.geometry else None
    omega = TWO_PI * args.f
    budget = loss_budget(material, args.T, omega, B_perp=args.B, h_rms=args.h, geometry=geometry)
    if args.output == "csv":
        return format_csv("budget", list(budget.channels) + [("total", budget.total_finesse)])
    extra = {"bcs_surface_resistance_ohm": bcs_surface_resistance(material, args.T, omega)}
    if args.B > 0:
        extra["flux_surface_resistance_ohm"] = vortex_resistance_limit(material, args.B)
    return format_json("loss-budget", {"channels": budget.to_dict(), "total_finesse": budget.total_finesse,
                                        "material": material.to_dict(), "T": args.T, "f_hz": args.f,
                                        "B_perp": args.B, "h_rms": args.h, **extra})


def _grid(text, log):
    try:
        lo, hi, n = text.split(",")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise InputError(f"grid must be 'lo,hi,n', got {text!r}") from None
    if n < 1 or not 0 < lo <= hi:
        raise InputError(f"invalid grid {text!r}")
    return np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)


def cmd_design_map(args):
    x = _grid(args.L_over_zR, log=False)
    y = _grid(args.zR_over_lambda, log=True)
    m = design_map(x, y, F_clip=args.F_clip, wavelength=args.wavelength, flat_edge=args.flat_edge)
    meta = {"L_over_zR": m.L_over_zR, "zR_over_lambda": m.zR_over_lambda, "F_clip": m.clip_target_F,
            "wavelength": m.wavelength, "flat_edge": m.flat_edge, "n_valid": int(m.valid.sum())}
    if args.metadata:
        Path(args.metadata).write_text(format_json("design-map", meta))
    if args.output == "csv":
        rows = []
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                na = float(m.numerical_aperture[i, j]) if m.valid[i, j] else math.nan
                rows.append((float(m.L_over_zR[i]), float(m.zR_over_lambda[j]), na,
                             float(m.length_over_lambda[i, j])))
        return format_csv("design_map", rows)
    na = np.where(m.valid, m.numerical_aperture, np.nan)
    return format_json("design-map", {**meta, "na": na, "length_over_lambda": m.length_over_lambda,
                                       "valid": m.valid})


def cqed_quantities(geometry, finesse, n_upper, overlap2=0.5, branching=1.0):
    """Coupling parameters of the nC -> (n-1)C transition in ``geometry``; rates / 2pi in Hz."""
    tr = rydberg_circular_transition(n_upper, overlap2, branching)
    V = mode_volume(geometry, tr.omega)
    zR = derive_gaussian_params(geometry, tr.omega).rayleigh_zR
    g = vacuum_rabi(tr.dipole, tr.omega, V, overlap2)
    kappa = free_spectral_range(geometry.length_L) / finesse
    gamma = spontaneous_rate(tr.dipole, tr.omega)
    ea0 = const.e * const.a_0
    return {
        "n_upper": int(n_upper),
        "frequency_hz": tr.omega / TWO_PI,
        "wavelength_m": tr.wavelength,
        "dipole_ea0": tr.dipole / ea0,
        "dipole_asymptotic_ea0": tr.dipole_asymptotic / ea0,
        "mode_volume_m3": V,
        "rayleigh_zR_m": zR,
        "E_rms_V_per_m": vacuum_field_rms(tr.omega, V),
        "g_hz": g / TWO_PI,
        "kappa_hz": kappa / TWO_PI,
        "gamma_hz": gamma / TWO_PI,
        "cooperativity": cooperativity(finesse, tr.wavelength, zR, overlap2, branching),
        "cooperativity_rates": cooperativity_from_rates(g, kappa, gamma / branching) if g > 0 else 0.0,
        "finesse": finesse,
        "polarization_overlap2": overlap2,
        "branching_ratio": branching,
    }


def cmd_cqed(args):
    geometry = load_geometry(args.geometry)
    if not args.finesse > 0:
        raise InputError("finesse must be positive")
    q = cqed_quantities(geometry, args.finesse, args.n, args.overlap2, args.branching)
    if args.output == "csv":
        return format_csv("quantities", [(k, float(v)) for k, v in q.items()])
    return format_json("cqed", q)


def cmd_gate_scan(args):
    if args.rates == "paper":
        rates = PAPER_RATES
    else:
        rates = (args.g_hz, args.kappa_hz, args.gamma_up_hz, args.gamma_down_hz)
        if any(r is None for r in rates):
            raise InputError("--rates custom needs --g-hz, --kappa-hz, --gamma-up-hz and --gamma-down-hz")
    g, kappa, gu, gd = (TWO_PI * r for r in rates)
    try:
        base = GateParams(g, kappa, gu, gd, detuning=g, duration=1.0)
    except CavityError as exc:
        raise InputError(str(exc)) from None
    dissipative = not args.unitary
    if args.mode == "special":
        if args.m_min < 2 or args.m_max < args.m_min:
            raise InputError("need 2 <= m-min <= m-max")
        points = scan_iswap(base, mode="special_m", m_values=range(args.m_min, args.m_max + 1),
                            dissipative=dissipative)
    else:
        deltas = g * _grid(args.delta_over_g, log=False)
        points = scan_iswap(base, detunings=deltas, mode="fixed_tau_g", dissipative=dissipative)
    label = ("special" if args.mode == "special" else "fixed") + ("" if dissipative else "-unitary")
    rows = [(p.delta / g, p.infidelity, label) for p in points]
    if args.output == "csv":
        return format_csv("gate_scan", rows)
    best = min(points, key=lambda p: p.infidelity)
    return format_json("gate-scan", {
        "rates_hz": {"g": rates[0], "kappa": rates[1], "gamma_up": rates[2], "gamma_down": rates[3]},
        "mode": label,
        "points": [{"delta_over_g": p.delta / g, "infidelity": p.infidelity, "duration_s": p.duration,
                    "m": p.m} for p in points],
        "minimum": {"delta_over_g": best.delta / g, "infidelity": best.infidelity, "m": best.m},
    })


def cmd_synthesize(args):
    rng = np.random.default_rng(args.seed)
    if args.kind == "sweep":
        f = np.linspace(args.f0 - 5 * args.linewidth, args.f0 + 5 * args.linewidth, args.n_points)
        tr = synthesize_sweep(TWO_PI * f, TWO_PI * args.f0, TWO_PI * args.linewidth, TWO_PI * args.coupling,
                              insertion_loss_dB=args.insertion_loss_db, noise=args.noise, rng=rng)
        rows = [(float(fi), float(z.real), float(z.imag)) for fi, z in zip(f, tr.s21)]
        return format_csv("sweep", rows)
    if args.kind == "ringdown":
        kappa = TWO_PI * args.linewidth
        shots = synthesize_ensemble(kappa, args.n_shots, 6 / kappa, args.n_points, noise_sigma=args.noise,
                                    detuning_rms=TWO_PI * args.linewidth, rng=rng)
        rows = [(s.shot_id, float(t), float(z.real), float(z.imag)) for s in shots
                for t, z in zip(s.times, s.samples)]
        return format_csv("ringdown", rows)
    geometry = load_geometry(args.geometry)
    qs = range(args.q_min, args.q_max + 1)
    data = synthesize_assignments(geometry, qs, TWO_PI * args.sigma_hz, rng=rng)
    rows = [(a.omega / TWO_PI, a.q, a.polarization, a.sigma / TWO_PI) for a in data]
    return format_csv("assignments", rows)


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="mmcavity", description="Millimeter-wave cavity modelling and analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--output", choices=("json", "csv"), default="json")
        sp.add_argument("--config", help="JSON file whose keys override the flags")
        sp.add_argument("--out", help="write the result here instead of standard output")
        return sp

    sp = add("spectrum", cmd_spectrum, "predict mode frequencies in a window")
    sp.add_argument("--geometry", required=True)
    sp.add_argument("--from", dest="f_from", type=float, required=True, help="Hz")
    sp.add_argument("--to", dest="f_to", type=float, required=True, help="Hz")
    sp.add_argument("--nmax", type=int, default=8)

    sp = add("fit-geometry", cmd_fit_geometry, "fit (L, R, eta, p) to TEM00 lines")
    sp.add_argument("--assignments", required=True, help="CSV freq_hz,q,pol,sigma_hz")
    sp.add_argument("--initial", required=True, help="geometry JSON used as starting point")
    sp.add_argument("--max-iterations", type=int, default=100)

    sp = add("fit-s21", cmd_fit_s21, "resonance parameters from a transmission sweep")
    sp.add_argument("--sweep", required=True, help="CSV freq_hz,re,im")
    sp.add_argument("--n-poles", type=int, default=1)
    sp.add_argument("--iterations", type=int, default=50)
    sp.add_argument("--thru", help="CSV freq_hz,loss_db")
    sp.add_argument("--insertion-loss-db", type=float, default=0.0)
    sp.add_argument("--fsr-hz", type=float, help="report finesse FSR/linewidth")

    sp = add("fit-ringdown", cmd_fit_ringdown, "linewidth from an ensemble of ringdown shots")
    sp.add_argument("--shots", required=True, help="CSV shot_id,time_s,re,im")
    sp.add_argument("--s-inf-re", type=float)
    sp.add_argument("--s-inf-im", type=float, default=0.0)
    sp.add_argument("--fsr-hz", type=float)

    sp = add("loss-budget", cmd_loss_budget, "finesse limits of the loss channels")
    sp.add_argument("--material", default="niobium-film", help="preset name or JSON file")
    sp.add_argument("--T", type=float, required=True, help="K")
    sp.add_argument("--f", type=float, required=True, help="Hz")
    sp.add_argument("--B", type=float, default=0.0, help="trapped perpendicular field, T")
    sp.add_argument("--h", type=float, default=0.0, help="rms roughness, m")
    sp.add_argument("--geometry", help="geometry JSON with mirror_radius_rm for clipping")

    sp = add("design-map", cmd_design_map, "numerical aperture over (L/zR, zR/lambda)")
    sp.add_argument("--L-over-zR", dest="L_over_zR", default="0.05,6,200", help="lo,hi,n (linear)")
    sp.add_argument("--zR-over-lambda", dest="zR_over_lambda", default="1,30,200", help="lo,hi,n (log)")
    sp.add_argument("--F-clip", dest="F_clip", type=float, default=1e10)
    sp.add_argument("--wavelength", type=float, default=3.26e-3)
    sp.add_argument("--flat-edge", action="store_true", help="ignore mirror sagitta")
    sp.add_argument("--metadata", help="also write JSON metadata here")

    sp = add("cqed", cmd_cqed, "g, kappa, Gamma and cooperativity for a circular Rydberg transition")
    sp.add_argument("--geometry", required=True)
    sp.add_argument("--finesse", type=float, required=True)
    sp.add_argument("--n", type=int, default=42, help="upper principal quantum number")
    sp.add_argument("--overlap2", type=float, default=0.5)
    sp.add_argument("--branching", type=float, default=1.0)

    sp = add("gate-scan", cmd_gate_scan, "iSWAP infidelity versus detuning")
    sp.add_argument("--rates", choices=("paper", "custom"), default="paper")
    sp.add_argument("--g-hz", type=float)
    sp.add_argument("--kappa-hz", type=float)
    sp.add_argument("--gamma-up-hz", type=float)
    sp.add_argument("--gamma-down-hz", type=float)
    sp.add_argument("--mode", choices=("special", "fixed"), default="special")
    sp.add_argument("--m-min", type=int, default=2)
    sp.add_argument("--m-max", type=int, default=30)
    sp.add_argument("--delta-over-g", default="1,20,200", help="lo,hi,n for --mode fixed")
    sp.add_argument("--unitary", action="store_true", help="no decay")

    sp = add("synthesize", cmd_synthesize, "write synthetic input data (CSV)")
    sp.add_argument("kind", choices=("sweep", "ringdown", "assignments"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--f0", type=float, default=94e9, help="sweep centre, Hz")
    sp.add_argument("--linewidth", type=float, default=813.3, help="Hz")
    sp.add_argument("--coupling", type=float, default=200.0, help="sqrt(k1 k2)/2pi, Hz")
    sp.add_argument("--insertion-loss-db", type=float, default=0.0)
    sp.add_argument("--noise", type=float, default=1e-4)
    sp.add_argument("--n-points", type=int, default=401)
    sp.add_argument("--n-shots", type=int, default=200)
    sp.add_argument("--geometry")
    sp.add_argument("--q-min", type=int, default=20)
    sp.add_argument("--q-max", type=int, default=30)
    sp.add_argument("--sigma-hz", type=float, default=1e3)
    return p


def _apply_config(args, parser):
    data = read_json(args.config)
    if not isinstance(data, dict):
        raise InputError(f"{args.config}: config must be a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("func", "command", "config") or not hasattr(args, dest):
            raise InputError(f"{args.config}: unknown option {key!r}")
        setattr(args, dest, value)
    return args


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"schema_version": SCHEMA_VERSION,
                                 "error": {"type": kind, "message": message, "exit_code": code}}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(args, parser)
        text = args.func(args)
    except InputError as exc:
        return _error("input", str(exc), EXIT_INPUT)
    except IdentifiabilityError as exc:
        return _error("identifiability", str(exc), EXIT_NUMERICAL)
    except ConvergenceError as exc:
        return _error("convergence", str(exc), EXIT_NUMERICAL)
    except (CavityError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error("numerical", str(exc), EXIT_NUMERICAL)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Batch front-end: JSON experiment configs in, plot-ready CSV/JSON out.

Frequencies in configs use ``*_hz`` fields meaning cycles per second
(value/2pi of the angular quantity); every other physical number is SI.
Run ``ionsim <scenario> --config cfg.json --out outdir``; scenarios are
crystal, couplings, evolve, fidelity-scan, ramp, nlsm and entropy.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import multiprocessing
import sys
import time
from pathlib import Path

import numpy as np
from scipy.constants import atomic_mass, pi

from . import __version__, adiabatic, couplings, evolution, fidelity, field_theory
from . import hamiltonians as ham
from . import ion_crystal, operators, spectra_entropy
from .couplings import DriveSpec
from .ion_crystal import CrystalConfig


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"config field '{path}': {message}")


def _require(cfg: dict, key: str, kind, path: str = ""):
    full = f"{path}.{key}" if path else key
    if key not in cfg:
        raise ConfigError(full, "missing")
    value = cfg[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is list and isinstance(value, list):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise ConfigError(full, f"expected {kind.__name__}")


def _crystal_from(cfg: dict) -> CrystalConfig:
    mass = cfg.get("mass_amu", 170.936) * atomic_mass
    return CrystalConfig(
        n_ions=_require(cfg, "n_ions", int),
        omega_z=2.0 * pi * _require(cfg, "omega_z_hz", float),
        omega_x=2.0 * pi * _require(cfg, "omega_x_hz", float),
        mass=mass,
    )


def _drive_from(cfg: dict, modes) -> DriveSpec:
    omega_x = modes.config.omega_x if modes.config else modes.frequencies.max()
    side = cfg.get("detuning_side", "below")
    if side not in ("above", "below"):
        raise ConfigError("detuning_side", "must be 'above' or 'below'")
    detuning = 2.0 * pi * _require(cfg, "detuning_hz", float)
    mu = omega_x + detuning if side == "above" else omega_x - detuning
    eta = cfg.get("eta", 0.07)
    return DriveSpec.from_spin_phase(
        pi * cfg.get("phi_s_over_pi", 0.0),
        omega_l=2.0 * pi * _require(cfg, "omega_l_hz", float),
        mu=mu,
        h0=2.0 * pi * cfg.get("h0_hz", 0.0),
        delta=2.0 * pi * cfg.get("delta_hz", 4.0 * cfg.get("h0_hz", 0.25 / pi)),
        xi=cfg.get("xi", 0.0),
        eta=eta,
        omega_x=omega_x,
    )


def _provenance(config: dict, scenario: str, seed: int) -> list[str]:
    blob = json.dumps(config, sort_keys=True).encode()
    digest = hashlib.sha256(blob).hexdigest()[:16]
    return [
        f"# ionsim={__version__} scenario={scenario} config_sha256={digest} seed={seed}",
        f"# written_at={time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]


def _write_rows(path: Path, header_lines: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.10g}" if isinstance(x, float) else str(x) for x in row))
            fh.write("\n")


def run_crystal(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    crystal = _crystal_from(config)
    model = config.get("model", "exact")
    if model == "exact":
        modes = ion_crystal.chain_modes(crystal)
    elif model == "periodic":
        exact = ion_crystal.chain_modes(crystal)
        modes = ion_crystal.periodic_modes(
            crystal.n_ions, exact.a0, exact.beta_x, crystal.omega_x
        )
    else:
        raise ConfigError("model", "must be 'exact' or 'periodic'")
    rows = [
        (j + 1, float(modes.positions[j]), float(modes.frequencies[j] / (2 * pi)))
        for j in range(modes.n_ions)
    ]
    path = out / "crystal.csv"
    _write_rows(path, _provenance(config, "crystal", seed), ["index", "u_j", "omega_n_hz"], rows)
    return [path]


def run_couplings(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    crystal = _crystal_from(config)
    modes = ion_crystal.chain_modes(crystal)
    detunings = config.get("detuning_hz_list") or [_require(config, "detuning_hz", float)]
    paths = []
    for det in detunings:
        cfg = dict(config)
        cfg["detuning_hz"] = det
        drive = _drive_from(cfg, modes)
        _check_regime(drive, modes, strict)
        j_num = couplings.coupling_matrix_numeric(modes, drive)
        j0, lam, xi0 = couplings.coupling_params(drive, modes)
        center = modes.n_ions // 2 - 1
        r_max = config.get("r_max", modes.n_ions // 2)
        j1 = j_num[center, center + 1]
        ja1 = couplings.coupling_analytic(1, modes.n_ions, j0, lam, xi0, modes.a0)
        rows = []
        for r in range(1, r_max + 1):
            dist = abs(modes.positions[center + r] - modes.positions[center])
            dist *= crystal.length_scale
            ja = couplings.coupling_analytic(r, modes.n_ions, j0, lam, xi0, modes.a0)
            rows.append(
                (r, float(dist), float(j_num[center, center + r] / j1), float(ja / ja1), 1.0 / r**3)
            )
        path = out / f"couplings_det{det:g}.csv"
        header = _provenance(config, "couplings", seed)
        header.append(f"# J0={j0:.6e} lambda={lam:.6f} xi0={xi0:.6e} a0={modes.a0:.6e}")
        _write_rows(
            path,
            header,
            ["r", "distance_m", "j_ratio_numeric", "j_ratio_analytic", "dipolar"],
            rows,
        )
        paths.append(path)
    return paths


def _check_regime(drive, modes, strict: bool, j_matrix=None, nbar=0.0) -> None:
    report = couplings.validate_regime(drive, modes, j_matrix, nbar)
    if not report.passed:
        text = "drive-regime validation failed:\n" + report.summary()
        if strict:
            raise RuntimeError(text)
        print("warning: " + text, file=sys.stderr)


def run_evolve(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    crystal = _crystal_from(config)
    modes = ion_crystal.chain_modes(crystal)
    drive = _drive_from(config, modes)
    n_max = config.get("n_max", 7)
    nbar = config.get("nbar", [0.0] * len(modes.frequencies))
    j = couplings.coupling_matrix_numeric(modes, drive)
    _check_regime(drive, modes, strict, j, np.asarray(nbar))
    thermal = evolution.thermal_phonon_state(
        nbar, n_max, tol=config.get("truncation_tol", 1e-6), weight_floor=1e-9
    )
    h_exact = ham.build_interaction_hamiltonian(modes, drive, n_max)
    n = crystal.n_ions
    spin0 = operators.spin_product_state(
        [operators.KET_PLUS_Y if s > 0 else operators.KET_MINUS_Y for s in config.get(
            "initial_spins_y", [1] + [-1] * (n - 1))]
    )
    k_values = list(range(config.get("k_max", 8) + 1))
    echo = config.get("echo", True)

    observables = [
        operators.embed_spin(
            operators.spin_site_operator(operators.SY, i, n), len(modes.frequencies), n_max
        )
        for i in range(n)
    ]
    exact = evolution.stroboscopic_magnetization(
        h_exact, spin0, thermal, k_values, observables, echo=echo
    )

    obs_spin = [operators.spin_site_operator(operators.SY, i, n) for i in range(n)]
    h_xyz = ham.build_effective(ham.EffectiveModelSpec.xyz_from_drive(j, drive.phi_s, drive.xi))(0.0)
    h_qim = ham.build_effective(
        ham.EffectiveModelSpec(kind=ham.QIM, j=j, phi_s=drive.phi_s, h0=0.0)
    )(0.0)
    xyz = evolution.spin_model_stroboscopic(h_xyz, spin0, k_values, obs_spin, drive.h0, echo)
    qim = evolution.spin_model_stroboscopic(h_qim, spin0, k_values, obs_spin, drive.h0, echo)

    rows = []
    for row, k in enumerate(k_values):
        t_k = k * pi / drive.h0
        for i in range(n):
            rows.append((float(t_k), i + 1, float(exact[row, i]), float(xyz[row, i]), float(qim[row, i])))
    path = out / "evolve_sigma_y.csv"
    _write_rows(
        path,
        _provenance(config, "evolve", seed),
        ["t_s", "ion", "sigma_y_exact", "sigma_y_xyz", "sigma_y_qim"],
        rows,
    )
    return [path]


def _fidelity_point(args):
    (config, phi_over_pi, h0_hz, nbar) = args
    crystal = _crystal_from(config)
    modes = ion_crystal.chain_modes(crystal)
    cfg = dict(config)
    cfg["phi_s_over_pi"] = phi_over_pi
    cfg["h0_hz"] = h0_hz
    cfg["delta_hz"] = 4.0 * h0_hz
    drive = _drive_from(cfg, modes)
    n_max = cfg.get("n_max", 7)
    thermal = evolution.thermal_phonon_state(
        nbar, n_max, tol=cfg.get("truncation_tol", 2e-4), weight_floor=1e-10
    )
    j = couplings.coupling_matrix_numeric(modes, drive)
    h_exact = ham.build_interaction_hamiltonian(modes, drive, n_max)
    h_target = ham.build_effective(
        ham.EffectiveModelSpec.xyz_from_drive(j, drive.phi_s, drive.xi)
    )(0.0)
    t_f = pi / abs(j[0, 1])
    _, _, eps = fidelity.channel_error(
        h_exact, drive, thermal, h_target, t_f, n_times=cfg.get("n_times", 81)
    )
    return phi_over_pi, h0_hz, nbar, eps


def run_fidelity_scan(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    phi_grid = config.get("phi_s_over_pi_list", [0.5])
    h0_list = config.get("h0_hz_list") or [_require(config, "h0_hz", float)]
    nbar_list = config.get("nbar_list", [[0.05, 0.047]])
    points = [
        (config, float(p), float(h), tuple(nb))
        for p in phi_grid
        for h in h0_list
        for nb in nbar_list
    ]
    if threads > 1:
        with multiprocessing.Pool(threads) as pool:
            results = pool.map(_fidelity_point, points)
    else:
        results = [_fidelity_point(p) for p in points]
    rows = [
        (
            float(p),
            float(h),
            ";".join(f"{x:g}" for x in nb),
            float(eps),
        )
        for p, h, nb, eps in results
    ]
    path = out / "fidelity_scan.csv"
    _write_rows(
        path,
        _provenance(config, "fidelity-scan", seed),
        ["phi_s_over_pi", "h0_hz", "nbar", "eps_bar"],
        rows,
    )
    return [path]


def _ramp_point(args):
    j, cycles, phi_over_pi, xi, spp = args
    schedule = adiabatic.RampSchedule.from_couplings(j, cycles, pi * phi_over_pi, xi)
    result = adiabatic.run_ramp(schedule, j, steps_per_period=spp)
    gs = adiabatic.xxz_ground_state(j, pi * phi_over_pi, schedule.parity, xi)
    fid = adiabatic.adiabatic_fidelity(result.final_state, gs.state)
    return cycles, phi_over_pi, fid


def run_ramp(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    crystal = _crystal_from(config)
    modes = ion_crystal.chain_modes(crystal)
    drive = _drive_from(config, modes)
    j = couplings.coupling_matrix_numeric(modes, drive)
    cycles_list = config.get("t_f_cycles_list", [8, 32, 128])
    phi_list = config.get("phi_f_over_pi_list", [0.05, 0.25, 0.45])
    spp = config.get("steps_per_period", 16)
    points = [(j, int(c), float(p), config.get("xi", 0.0), spp) for c in cycles_list for p in phi_list]
    if threads > 1:
        with multiprocessing.Pool(threads) as pool:
            results = pool.map(_ramp_point, points)
    else:
        results = [_ramp_point(p) for p in points]
    rows = [(int(c), float(p), float(f)) for c, p, f in results]
    path = out / "ramp_fidelity.csv"
    header = _provenance(config, "ramp", seed)
    header.append(f"# h0_hz={12.0 * abs(j[0, 1]) / (2 * pi):.6g} (12 J_12)")
    _write_rows(path, header, ["t_f_cycles", "phi_f_over_pi", "f_ad"], rows)
    return [path]


def run_nlsm(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    mode = config.get("mode", "power-law")
    rows = []
    if mode == "power-law":
        for s in config.get("s_list", [2.0, 3.0, 4.0]):
            p = field_theory.power_law_nlsm(
                float(s), config.get("j1", 1.0), config.get("lattice_a", 1.0), config.get("spin", 0.5)
            )
            rows.append((float(s), p.v, p.g, p.theta))
        columns = ["s", "v", "g", "theta"]
    elif mode == "trapped-ion":
        for lam in config.get("lambda_list", [0.0, 0.05, 0.1]):
            g_closed = field_theory.trapped_ion_g(float(lam))
            xi0 = -1.0 / np.log((1.0 - np.sqrt(1.0 - lam**2)) / abs(lam)) if lam else 0.0
            tail = field_theory.trapped_ion_tail(0.25, float(lam), xi0) if lam else None
            g_series = (
                field_theory.nlsm_from_couplings(tail, spin=1.0, r_max=config.get("r_max", 100000)).g
                if tail
                else float("nan")
            )
            rows.append((float(lam), g_closed, g_series))
        columns = ["lambda", "g_closed_form", "g_series"]
    elif mode == "two-neighbor":
        for ratio in config.get("j2_over_j1_list", [0.0, 0.125, 0.24]):
            rows.append((float(ratio), field_theory.two_neighbor_g(1.0, float(ratio))))
        columns = ["j2_over_j1", "g"]
    else:
        raise ConfigError("mode", "must be power-law, trapped-ion or two-neighbor")
    path = out / "nlsm.csv"
    _write_rows(path, _provenance(config, "nlsm", seed), columns, rows)
    return [path]


def run_entropy(config: dict, out: Path, strict: bool, threads: int, seed: int) -> list[Path]:
    n = config.get("n_sites", 16)
    kind = config.get("couplings", "nearest-neighbor")
    j_tilde = np.zeros(n + 1)
    if kind == "nearest-neighbor":
        j_tilde[1] = 1.0
    elif kind == "trapped-ion-tail":
        lam = config.get("lambda", 0.1)
        xi0 = -1.0 / np.log((1.0 - np.sqrt(1.0 - lam**2)) / abs(lam))
        tail = field_theory.trapped_ion_tail(0.25, lam, xi0)
        for r in range(1, n + 1):
            j_tilde[r] = tail(r)
        j_tilde /= j_tilde[1]
    else:
        raise ConfigError("couplings", "must be nearest-neighbor or trapped-ion-tail")
    energy, psi = spectra_entropy.lrhm_ground_state(j_tilde, n)
    profile = spectra_entropy.entropy_profile(psi)
    window = config.get("window") or spectra_entropy.default_window(n).tolist()
    fitted = spectra_entropy.fit_central_charge(profile, window)
    rows = [
        (int(l), float(y), float(s))
        for l, y, s in zip(profile.block_sizes, profile.y_values, profile.entropies)
    ]
    csv_path = out / "entropy_profile.csv"
    _write_rows(csv_path, _provenance(config, "entropy", seed), ["l", "y_l", "s_l"], rows)
    report = {
        "n_sites": n,
        "couplings": kind,
        "ground_energy": energy,
        "c_eff": fitted.c_eff,
        "intercept": fitted.intercept,
        "residual": fitted.residual,
        "window": list(fitted.window),
    }
    json_path = out / "entropy_fit.json"
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return [csv_path, json_path]


SCENARIOS = {
    "crystal": run_crystal,
    "couplings": run_couplings,
    "evolve": run_evolve,
    "fidelity-scan": run_fidelity_scan,
    "ramp": run_ramp,
    "nlsm": run_nlsm,
    "entropy": run_entropy,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ionsim", description=__doc__)
    parser.add_argument("scenario", choices=sorted(SCENARIOS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--strict", action="store_true", help="regime violations abort")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot parse config: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        paths = SCENARIOS[args.scenario](config, out, args.strict, args.threads, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

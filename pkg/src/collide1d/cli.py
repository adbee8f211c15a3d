"""Configuration ingestion, scenario presets, and machine-readable output.

Configs are flat ``key = value`` text with ``#`` comments.  Every run writes
one CSV with the fixed header ``t,p_e,re_coh,im_coh,entropy_bits,norm,
photon_flux,io_residual`` (absent quantities left empty) plus a sidecar
manifest in the same key-value format; neither file contains timestamps, so
identical configs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from . import analytic, observables
from .core import (MemoryGuardError, SimulationParams, Wavepacket,
                   make_exponential_wavepacket, make_gaussian_wavepacket)
from .engine import (DISPLACED, LAB, DenseJointState, run_dense,
                     run_displaced_sectors, run_single_excitation)

CSV_HEADER = "t,p_e,re_coh,im_coh,entropy_bits,norm,photon_flux,io_residual"

SCENARIOS = ("spont", "coherent", "single-photon", "oracle-compare", "io-check",
             "convergence")
SOLVERS = ("dense", "sectors", "recursion", "analytic")

#: solvers allowed per scenario; empty set = scenario picks its own solvers
COMPATIBLE = {
    "spont": {"analytic", "dense", "sectors"},
    "coherent": {"analytic", "dense", "sectors"},
    "single-photon": {"analytic", "recursion"},
    "oracle-compare": set(),
    "io-check": set(),
    "convergence": set(),
}

DEFAULT_PHI0 = {"spont": "e", "coherent": "g", "single-photon": "g",
                "oracle-compare": "g", "io-check": "g", "convergence": "e"}

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_THRESHOLD = 3


class ConfigError(ValueError):
    """All validation problems of a config, each tagged with a line number."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ScenarioConfig:
    scenario: str
    solver: str | None = None
    gamma: float = 1.0
    omega_q: float = 0.0
    delta: float = 0.0
    omega_rabi: float = 0.0
    dt: float = 0.0
    n_steps: int = 0
    fock_dim: int = 2
    m_max: int = 2
    phi0: str | None = None
    wavepacket: str = "exponential"
    wavepacket_gamma: float | None = None
    wavepacket_sigma: float = 1.0
    wavepacket_t0: float | None = None
    wavepacket_omega: float | None = None
    snapshot_stride: int = 1
    output: str | None = None

    def resolved_phi0(self) -> str:
        return self.phi0 if self.phi0 is not None else DEFAULT_PHI0[self.scenario]

    def params(self, strict: bool = False) -> SimulationParams:
        return SimulationParams(gamma=self.gamma, dt=self.dt, n_steps=self.n_steps,
                                omega_q=self.omega_q, delta=self.delta,
                                omega_rabi=self.omega_rabi, fock_dim=self.fock_dim,
                                strict=strict)

    def build_wavepacket(self, params: SimulationParams) -> Wavepacket:
        omega = self.wavepacket_omega if self.wavepacket_omega is not None else self.omega_q
        if self.wavepacket == "exponential":
            big_gamma = self.wavepacket_gamma if self.wavepacket_gamma is not None else self.gamma
            return make_exponential_wavepacket(big_gamma, omega, params.grid)
        t0 = self.wavepacket_t0 if self.wavepacket_t0 is not None else 5 * self.wavepacket_sigma
        return make_gaussian_wavepacket(self.wavepacket_sigma, t0, omega, params.grid)

    def stem(self) -> str:
        return self.output if self.output else self.scenario


_KNOWN_KEYS = {f.name for f in fields(ScenarioConfig)}
_FLOAT_KEYS = {"gamma", "omega_q", "delta", "omega_rabi", "dt", "wavepacket_gamma",
               "wavepacket_sigma", "wavepacket_t0", "wavepacket_omega"}
_INT_KEYS = {"n_steps", "fock_dim", "m_max", "snapshot_stride"}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate, collecting every violation (not just the first)."""
    problems: list[str] = []
    values: dict[str, object] = {}
    lines_of: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _KNOWN_KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        lines_of[key] = lineno
        if key in _FLOAT_KEYS:
            try:
                values[key] = float(val)
            except ValueError:
                problems.append(f"line {lineno}: {key} expects a number, got {val!r}")
        elif key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                problems.append(f"line {lineno}: {key} expects an integer, got {val!r}")
        else:
            values[key] = val

    def where(key: str) -> str:
        return f"line {lines_of[key]}" if key in lines_of else "config"

    scenario = values.get("scenario")
    if scenario is None:
        problems.append("config: missing required key 'scenario'")
    elif scenario not in SCENARIOS:
        problems.append(f"{where('scenario')}: unknown scenario {scenario!r} "
                        f"(choose from {', '.join(SCENARIOS)})")
    solver = values.get("solver")
    if solver is not None and solver not in SOLVERS:
        problems.append(f"{where('solver')}: unknown solver {solver!r} "
                        f"(choose from {', '.join(SOLVERS)})")
    for key in ("dt", "n_steps"):
        if key not in values:
            problems.append(f"config: missing required key {key!r}")
    positive = {"gamma", "dt", "wavepacket_gamma", "wavepacket_sigma"}
    for key in positive & values.keys():
        if isinstance(values[key], (int, float)) and values[key] <= 0:
            problems.append(f"{where(key)}: {key} must be positive, got {values[key]}")
    if isinstance(values.get("omega_rabi"), float) and values["omega_rabi"] < 0:
        problems.append(f"{where('omega_rabi')}: omega_rabi must be non-negative")
    if isinstance(values.get("n_steps"), int) and values.get("n_steps", 1) < 1:
        problems.append(f"{where('n_steps')}: n_steps must be >= 1")
    if isinstance(values.get("fock_dim"), int) and values.get("fock_dim", 2) < 2:
        problems.append(f"{where('fock_dim')}: fock_dim must be >= 2")
    if isinstance(values.get("m_max"), int) and values.get("m_max", 0) < 0:
        problems.append(f"{where('m_max')}: m_max must be >= 0")
    if isinstance(values.get("snapshot_stride"), int) and values.get("snapshot_stride", 1) < 1:
        problems.append(f"{where('snapshot_stride')}: snapshot_stride must be >= 1")
    if values.get("phi0") not in (None, "g", "e"):
        problems.append(f"{where('phi0')}: phi0 must be 'g' or 'e'")
    if values.get("wavepacket") not in (None, "exponential", "gaussian"):
        problems.append(f"{where('wavepacket')}: wavepacket must be 'exponential' or 'gaussian'")

    if scenario in COMPATIBLE:
        allowed = COMPATIBLE[scenario]
        if allowed:
            if solver is None:
                problems.append(f"config: scenario {scenario!r} needs a solver "
                                f"(one of {', '.join(sorted(allowed))})")
            elif solver in SOLVERS and solver not in allowed:
                problems.append(f"{where('solver')}: solver {solver!r} is incompatible "
                                f"with scenario {scenario!r} "
                                f"(allowed: {', '.join(sorted(allowed))})")
        elif solver is not None:
            problems.append(f"{where('solver')}: scenario {scenario!r} chooses its own "
                            f"solvers; remove the solver key")
    if scenario == "single-photon" and values.get("phi0") == "e":
        problems.append(f"{where('phi0')}: the single-photon recursion starts from the "
                        f"ground state; phi0 = e is not supported")
    if scenario in ("spont", "single-photon", "convergence") and values.get("omega_rabi"):
        problems.append(f"{where('omega_rabi')}: scenario {scenario!r} has no coherent "
                        f"drive; omega_rabi must be 0")

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**values)  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# result table and manifest
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


@dataclass
class ResultTable:
    """Columnar records with the fixed CSV schema; None marks an absent column."""

    t: np.ndarray
    p_e: np.ndarray | None = None
    re_coh: np.ndarray | None = None
    im_coh: np.ndarray | None = None
    entropy_bits: np.ndarray | None = None
    norm: np.ndarray | None = None
    photon_flux: list | None = None      # may contain None entries (edge bins)
    io_residual: list | None = None

    def rows(self):
        n = len(self.t)
        cols = [self.t, self.p_e, self.re_coh, self.im_coh, self.entropy_bits,
                self.norm, self.photon_flux, self.io_residual]
        for i in range(n):
            yield [None if c is None else c[i] for c in cols]

    def write_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in self.rows():
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_manifest(path: str, config: ScenarioConfig, metrics: dict):
    entries = {"version": __version__}
    for f in fields(ScenarioConfig):
        value = getattr(config, f.name)
        if value is not None:
            entries[f"config.{f.name}"] = value
    entries.update(metrics)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(entries):
            value = entries[key]
            if isinstance(value, float):
                value = _fmt(value)
            fh.write(f"{key} = {value}\n")


def _entropy_column(rho_traj: np.ndarray) -> np.ndarray:
    out = np.empty(rho_traj.shape[0])
    for i, rho in enumerate(rho_traj):
        out[i] = observables.entanglement_entropy(rho)
    return out


def _flux_column(flux_bins: np.ndarray, steps: np.ndarray, n_steps: int) -> list:
    """Final-state flux density of the bin starting at each sampled step."""
    return [float(flux_bins[s]) if s < n_steps else None for s in steps]


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------

def _sample_steps(n_steps: int, stride: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, stride)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def _qubit_rows(rho_traj: np.ndarray, steps: np.ndarray):
    rho = rho_traj[steps]
    p_e = rho[:, 1, 1].real
    coh = rho[:, 0, 1]
    norm = np.einsum("naa->n", rho).real
    return p_e, coh.real, coh.imag, _entropy_column(rho), norm


def _run_spont(config: ScenarioConfig, params: SimulationParams):
    grid = params.grid
    steps = _sample_steps(params.n_steps, config.snapshot_stride)
    times = steps * params.dt
    if config.solver == "analytic":
        gamma = params.gamma
        p_e = np.exp(-gamma * times)
        # discrete norm: survival + left-Riemann photon weight over past bins
        past = np.concatenate(([0.0], np.cumsum(
            params.dt * gamma * np.exp(-gamma * np.arange(params.n_steps) * params.dt))))
        norm = p_e + past[steps]
        rho = np.zeros((len(steps), 2, 2), complex)
        rho[:, 1, 1] = p_e
        rho[:, 0, 0] = norm - p_e
        flux = observables.photon_density(
            analytic.spontaneous_emission_state(grid.total_time, params))
        return ResultTable(t=times, p_e=p_e, re_coh=np.zeros(len(steps)),
                           im_coh=np.zeros(len(steps)),
                           entropy_bits=_entropy_column(rho), norm=norm,
                           photon_flux=_flux_column(flux, steps, params.n_steps)), {}
    if config.solver == "dense":
        initial = DenseJointState.product_state(config.resolved_phi0(), params.n_steps,
                                                params.fock_dim)
        traj = run_dense(params, initial, frame=LAB)
        p_e, re_c, im_c, ent, norm = _qubit_rows(traj.qubit_matrices, steps)
        norm = traj.norms[steps] ** 2
        flux = observables.photon_density(traj.snapshot(params.n_steps), dt=params.dt)
        return ResultTable(t=times, p_e=p_e, re_coh=re_c, im_coh=im_c,
                           entropy_bits=ent, norm=norm,
                           photon_flux=_flux_column(flux, steps, params.n_steps)), {}
    # sectors: spontaneous emission is the undriven displaced run from |e>
    run = run_displaced_sectors(params, config.m_max, config.resolved_phi0())
    p_e, re_c, im_c, ent, norm = _qubit_rows(run.qubit_trajectory(), steps)
    flux = run.emission_weights() / params.dt
    return ResultTable(t=times, p_e=p_e, re_coh=re_c, im_coh=im_c, entropy_bits=ent,
                       norm=norm, photon_flux=_flux_column(flux, steps, params.n_steps)), {
        "norm_deficit": run.truncation_deficit()}


def _run_coherent(config: ScenarioConfig, params: SimulationParams):
    steps = _sample_steps(params.n_steps, config.snapshot_stride)
    times = steps * params.dt
    phi0 = config.resolved_phi0()
    if config.solver == "analytic":
        rho_traj, _ = analytic.coherent_qubit_trajectory(params, config.m_max, phi0)
        p_e, re_c, im_c, ent, norm = _qubit_rows(rho_traj, steps)
        return ResultTable(t=times, p_e=p_e, re_coh=re_c, im_coh=im_c,
                           entropy_bits=ent, norm=norm), {
            "norm_deficit": float(1 - norm[-1])}
    if config.solver == "sectors":
        run = run_displaced_sectors(params, config.m_max, phi0)
        p_e, re_c, im_c, ent, norm = _qubit_rows(run.qubit_trajectory(), steps)
        flux = run.emission_weights() / params.dt
        return ResultTable(t=times, p_e=p_e, re_coh=re_c, im_coh=im_c,
                           entropy_bits=ent, norm=norm,
                           photon_flux=_flux_column(flux, steps, params.n_steps)), {
            "norm_deficit": run.truncation_deficit()}
    initial = DenseJointState.product_state(phi0, params.n_steps, params.fock_dim,
                                            frame=DISPLACED)
    traj = run_dense(params, initial, frame=DISPLACED)
    p_e, re_c, im_c, ent, _ = _qubit_rows(traj.qubit_matrices, steps)
    flux = observables.photon_density(traj.snapshot(params.n_steps), dt=params.dt)
    return ResultTable(t=times, p_e=p_e, re_coh=re_c, im_coh=im_c, entropy_bits=ent,
                       norm=traj.norms[steps] ** 2,
                       photon_flux=_flux_column(flux, steps, params.n_steps)), {}


def _run_single_photon(config: ScenarioConfig, params: SimulationParams):
    steps = _sample_steps(params.n_steps, config.snapshot_stride)
    times = steps * params.dt
    packet = config.build_wavepacket(params)
    if config.solver == "analytic":
        pe_all = analytic.single_photon_p_excited(packet, params)
        # photon weight: past bins carry the scattered density, future the input
        xt = analytic.xi_tilde_trajectory(packet, params)
        tp = np.arange(params.n_steps) * params.dt
        scattered = np.abs(packet.samples - params.gamma * xt[:params.n_steps]
                           * np.exp(-1j * params.omega_q * tp)) ** 2 * params.dt
        incoming = np.abs(packet.samples) ** 2 * params.dt
        norm_all = (pe_all
                    + np.concatenate(([0.0], np.cumsum(scattered)))
                    + (np.sum(incoming) - np.concatenate(([0.0], np.cumsum(incoming)))))
        p_e = pe_all[steps]
        norm = norm_all[steps]
        rho = np.zeros((len(steps), 2, 2), complex)
        rho[:, 1, 1] = p_e
        rho[:, 0, 0] = norm - p_e
        flux = observables.photon_density(
            analytic.single_photon_state(packet, params.grid.total_time, params))
        return ResultTable(t=times, p_e=p_e, re_coh=np.zeros(len(steps)),
                           im_coh=np.zeros(len(steps)),
                           entropy_bits=_entropy_column(rho), norm=norm,
                           photon_flux=_flux_column(flux, steps, params.n_steps)), {}
    run = run_single_excitation(params, packet)
    p_e = run.p_excited()[steps]
    norm = run.norm_trajectory[steps]
    rho = np.zeros((len(steps), 2, 2), complex)
    rho[:, 1, 1] = p_e
    rho[:, 0, 0] = norm - p_e
    flux = observables.photon_density(run.final_state())
    return ResultTable(t=times, p_e=p_e, re_coh=np.zeros(len(steps)),
                       im_coh=np.zeros(len(steps)),
                       entropy_bits=_entropy_column(rho), norm=norm,
                       photon_flux=_flux_column(flux, steps, params.n_steps)), {}


def _oracle_compare_single(args) -> float:
    """Max |dense - analytic| amplitude difference for one step size."""
    config_dict, scale = args
    config = ScenarioConfig(**config_dict)
    params = SimulationParams(gamma=config.gamma, dt=config.dt * scale,
                              n_steps=config.n_steps // scale, omega_q=config.omega_q,
                              delta=config.delta, omega_rabi=config.omega_rabi,
                              fock_dim=config.fock_dim)
    phi0 = config.resolved_phi0()
    initial = DenseJointState.product_state(phi0, params.n_steps, params.fock_dim,
                                            frame=DISPLACED)
    traj = run_dense(params, initial, frame=DISPLACED)
    psi = traj.snapshot(params.n_steps).tensor()
    m_max = min(3, config.m_max, params.n_steps)
    coeffs = analytic.assemble_coherent(params, params.grid.total_time, m_max, phi0)
    worst = 0.0
    for m in range(m_max + 1):
        scale = params.dt ** (m / 2)  # compare densities so every sector is O(1)
        for row, modes in enumerate(coeffs.tuples[m]):
            occ = [0] * params.n_steps
            for mode in modes:
                occ[mode] = 1
            for qi in (0, 1):
                dense_amp = psi[(qi,) + tuple(occ)]
                worst = max(worst, abs(dense_amp - coeffs.values[m][qi, row]) / scale)
    return worst


def _run_oracle_compare(config: ScenarioConfig, params: SimulationParams, jobs: int):
    scales = [4, 2, 1]
    if config.n_steps % 4 != 0:
        raise ConfigError(["config: oracle-compare needs n_steps divisible by 4 "
                           "(it compares dt, 2*dt and 4*dt at fixed final time)"])
    config_dict = {f.name: getattr(config, f.name) for f in fields(ScenarioConfig)}
    work = [(config_dict, s) for s in scales]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            errors = list(pool.map(_oracle_compare_single, work))
    else:
        errors = [_oracle_compare_single(w) for w in work]
    dts = [config.dt * s for s in scales]
    exponent = observables.power_law_exponent(dts, errors)
    passed = 0.7 <= exponent <= 1.3
    metrics = {"fit_exponent": exponent, "threshold_ok": passed}
    for dt_v, err in zip(dts, errors):
        metrics[f"max_amp_error_dt_{_fmt(dt_v)}"] = err
    phi0 = config.resolved_phi0()
    initial = DenseJointState.product_state(phi0, params.n_steps, params.fock_dim,
                                            frame=DISPLACED)
    traj = run_dense(params, initial, frame=DISPLACED)
    steps = _sample_steps(params.n_steps, config.snapshot_stride)
    p_e, re_c, im_c, ent, _ = _qubit_rows(traj.qubit_matrices, steps)
    table = ResultTable(t=steps * params.dt, p_e=p_e, re_coh=re_c, im_coh=im_c,
                        entropy_bits=ent, norm=traj.norms[steps] ** 2)
    return table, metrics


def _io_check_single(args) -> float:
    config_dict, scale = args
    config = ScenarioConfig(**config_dict)
    params = SimulationParams(gamma=config.gamma, dt=config.dt / scale,
                              n_steps=config.n_steps, omega_q=config.omega_q,
                              delta=config.delta, omega_rabi=config.omega_rabi,
                              fock_dim=config.fock_dim)
    initial = DenseJointState.product_state(config.resolved_phi0(), params.n_steps,
                                            params.fock_dim, frame=DISPLACED)
    traj = run_dense(params, initial, frame=DISPLACED, snapshot_steps="all")
    return float(observables.io_residual(traj).max())


def _run_io_check(config: ScenarioConfig, params: SimulationParams, jobs: int):
    scales = [1, 2, 4]
    config_dict = {f.name: getattr(config, f.name) for f in fields(ScenarioConfig)}
    work = [(config_dict, s) for s in scales]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            residuals = list(pool.map(_io_check_single, work))
    else:
        residuals = [_io_check_single(w) for w in work]
    dts = [config.dt / s for s in scales]
    exponent = observables.power_law_exponent(dts, residuals)
    bound_ok = all(r <= 5 * dt_v for r, dt_v in zip(residuals, dts))
    passed = bound_ok and 0.8 <= exponent <= 1.2
    metrics = {"fit_exponent": exponent, "threshold_ok": passed}
    for dt_v, r in zip(dts, residuals):
        metrics[f"max_io_residual_dt_{_fmt(dt_v)}"] = r
    initial = DenseJointState.product_state(config.resolved_phi0(), params.n_steps,
                                            params.fock_dim, frame=DISPLACED)
    traj = run_dense(params, initial, frame=DISPLACED, snapshot_steps="all")
    resid = observables.io_residual(traj)
    steps = _sample_steps(params.n_steps, config.snapshot_stride)
    p_e, re_c, im_c, ent, _ = _qubit_rows(traj.qubit_matrices, steps)
    table = ResultTable(t=steps * params.dt, p_e=p_e, re_coh=re_c, im_coh=im_c,
                        entropy_bits=ent, norm=traj.norms[steps] ** 2,
                        io_residual=[float(resid[s - 1]) if s >= 1 else None
                                     for s in steps])
    return table, metrics


def _convergence_single(args) -> float:
    config_dict, scale = args
    config = ScenarioConfig(**config_dict)
    params = SimulationParams(gamma=config.gamma, dt=config.dt / scale,
                              n_steps=config.n_steps * scale, omega_q=config.omega_q,
                              delta=config.delta, fock_dim=config.fock_dim)
    initial = DenseJointState.product_state("e", params.n_steps, params.fock_dim)
    traj = run_dense(params, initial, frame=LAB)
    expected = np.exp(-params.gamma * params.grid.times())
    return float(np.abs(traj.p_excited() - expected).max())


def _run_convergence(config: ScenarioConfig, params: SimulationParams, jobs: int):
    scales = [1, 2, 4]
    config_dict = {f.name: getattr(config, f.name) for f in fields(ScenarioConfig)}
    work = [(config_dict, s) for s in scales]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            errors = list(pool.map(_convergence_single, work))
    else:
        errors = [_convergence_single(w) for w in work]
    dts = [config.dt / s for s in scales]
    exponent = observables.power_law_exponent(dts, errors)
    passed = 0.85 <= exponent <= 1.15 and errors[-1] <= 0.02
    metrics = {"fit_exponent": exponent, "threshold_ok": passed}
    for dt_v, err in zip(dts, errors):
        metrics[f"max_p_e_error_dt_{_fmt(dt_v)}"] = err
    fine = SimulationParams(gamma=config.gamma, dt=config.dt / 4,
                            n_steps=config.n_steps * 4, omega_q=config.omega_q,
                            delta=config.delta, fock_dim=config.fock_dim)
    initial = DenseJointState.product_state("e", fine.n_steps, fine.fock_dim)
    traj = run_dense(fine, initial, frame=LAB)
    steps = _sample_steps(fine.n_steps, config.snapshot_stride)
    p_e, re_c, im_c, ent, _ = _qubit_rows(traj.qubit_matrices, steps)
    flux = observables.photon_density(traj.snapshot(fine.n_steps), dt=fine.dt)
    table = ResultTable(t=steps * fine.dt, p_e=p_e, re_coh=re_c, im_coh=im_c,
                        entropy_bits=ent, norm=traj.norms[steps] ** 2,
                        photon_flux=_flux_column(flux, steps, fine.n_steps))
    return table, metrics


def run_scenario(config: ScenarioConfig, out_dir: str = ".", jobs: int = 1,
                 strict: bool = False):
    """Execute a validated config; returns (table, metrics, csv_path, exit_code)."""
    params = config.params(strict=strict)
    if config.scenario == "spont":
        table, metrics = _run_spont(config, params)
    elif config.scenario == "coherent":
        table, metrics = _run_coherent(config, params)
    elif config.scenario == "single-photon":
        table, metrics = _run_single_photon(config, params)
    elif config.scenario == "oracle-compare":
        table, metrics = _run_oracle_compare(config, params, jobs)
    elif config.scenario == "io-check":
        table, metrics = _run_io_check(config, params, jobs)
    else:
        table, metrics = _run_convergence(config, params, jobs)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, config.stem())
    csv_path = stem + ".csv"
    table.write_csv(csv_path)
    if "norm_deficit" not in metrics and table.norm is not None:
        metrics["norm_deficit"] = float(1.0 - table.norm[-1])
    write_manifest(stem + ".manifest", config, metrics)
    code = EXIT_OK if metrics.get("threshold_ok", True) else EXIT_THRESHOLD
    return table, metrics, csv_path, code


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS = {
    "spont": """\
# spontaneous emission of an initially excited qubit, closed-form solver
scenario = spont
solver = analytic
gamma = 1.0
dt = 1e-3
n_steps = 5000
snapshot_stride = 5
""",
    "rabi-strong": """\
# resonant coherent drive at Omega = 20*gamma, sector propagator
scenario = coherent
solver = sectors
gamma = 1.0
omega_rabi = 20.0
dt = 1e-3
n_steps = 1000
m_max = 3
snapshot_stride = 2
""",
    "single-photon-exp": """\
# resonant exponential single-photon wavepacket (bandwidth-matched)
scenario = single-photon
solver = recursion
gamma = 1.0
dt = 1e-3
n_steps = 15000
wavepacket = exponential
wavepacket_gamma = 1.0
snapshot_stride = 15
""",
    "single-photon-gauss": """\
# gaussian single-photon wavepacket arriving at t0 = 5/gamma
scenario = single-photon
solver = recursion
gamma = 1.0
dt = 1e-3
n_steps = 12000
wavepacket = gaussian
wavepacket_sigma = 1.0
wavepacket_t0 = 5.0
snapshot_stride = 12
""",
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _load_config_text(target: str) -> str:
    if os.path.exists(target):
        with open(target, "r", encoding="utf-8") as fh:
            return fh.read()
    if target in PRESETS:
        return PRESETS[target]
    raise FileNotFoundError(f"no config file or preset named {target!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="collide1d",
                                     description="1D-atom collision-model simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute a config file or preset")
    run_p.add_argument("config", help="path to a config file, or a preset name")
    run_p.add_argument("--jobs", type=int, default=1, metavar="K",
                       help="worker processes for sweep scenarios")
    run_p.add_argument("--strict", action="store_true",
                       help="turn validity-guard warnings into errors")
    run_p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default $COLLIDE1D_OUT or .)")
    pre_p = sub.add_parser("presets", help="list or show shipped presets")
    pre_p.add_argument("action", choices=("list", "show"))
    pre_p.add_argument("name", nargs="?", help="preset name for 'show'")
    sub.add_parser("check", help="run the acceptance suite (exit 0/3)")
    args = parser.parse_args(argv)

    if args.command == "presets":
        if args.action == "list":
            for name in PRESETS:
                print(name)
            return EXIT_OK
        if args.name not in PRESETS:
            print(f"unknown preset {args.name!r}", file=sys.stderr)
            return EXIT_INVALID
        print(PRESETS[args.name], end="")
        return EXIT_OK

    if args.command == "check":
        from . import acceptance
        return acceptance.run_all()

    out_dir = args.out or os.environ.get("COLLIDE1D_OUT") or "."
    try:
        text = _load_config_text(args.config)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    try:
        config = parse_config(text)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_INVALID
    try:
        _, metrics, csv_path, code = run_scenario(config, out_dir=out_dir,
                                                  jobs=args.jobs, strict=args.strict)
    except (ValueError, MemoryGuardError, ConfigError) as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(csv_path)
    for key in sorted(metrics):
        print(f"{key} = {metrics[key]}")
    return code


if __name__ == "__main__":
    sys.exit(main())

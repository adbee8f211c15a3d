"""Reduced states, entanglement, photon statistics, and cross-tier checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import (DenseJointState, DenseTrajectory, SectorState,
                     SinglePhotonState, SIGMA_MINUS, annihilation)


def reduced_qubit(state, renormalize: bool = True) -> np.ndarray:
    """2x2 reduced qubit density matrix of any state representation.

    States with a norm deficit (sector truncation, discretization) are
    renormalized to unit trace by default; a deficit above 0.1 is rejected.
    """
    if isinstance(state, np.ndarray) and state.shape == (2, 2):
        rho = state.astype(complex)
    elif isinstance(state, DenseJointState):
        rho = state.qubit_matrix()
    elif isinstance(state, SectorState):
        rho = state.qubit_matrix()
    elif isinstance(state, SinglePhotonState):
        rho = np.diag([float(np.sum(np.abs(state.g) ** 2)),
                       abs(state.c_e) ** 2]).astype(complex)
    else:
        raise TypeError(f"cannot reduce a {type(state).__name__}")
    trace = float(np.trace(rho).real)
    if abs(trace - 1.0) > 0.1:
        raise ValueError(f"state norm deficit too large to interpret: trace = {trace}")
    return rho / trace if renormalize else rho


def entanglement_entropy(state) -> float:
    """Von Neumann entropy of the reduced qubit, in bits."""
    rho = reduced_qubit(state)
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -1e-10 or evals.max() > 1 + 1e-10:
        raise ValueError(f"reduced state not a density matrix: eigenvalues {evals}")
    evals = np.clip(evals, 0.0, 1.0)
    nz = evals[evals > 0]
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def photon_density(state, dt: float | None = None) -> np.ndarray:
    """Flux density <a_n^dag a_n>/dt per time bin; integrates (x dt) to the
    mean emitted photon number.  Dense states carry no grid, so dt is required
    for them."""
    if isinstance(state, SinglePhotonState):
        return np.abs(state.g) ** 2 / state.grid.dt
    if isinstance(state, SectorState):
        out = np.zeros(state.grid.n_steps)
        for m in range(1, state.m_max + 1):
            if state.tuples[m].size == 0:
                continue
            weight = np.sum(np.abs(state.values[m]) ** 2, axis=0)
            for col in range(m):
                np.add.at(out, state.tuples[m][:, col], weight)
        return out / state.grid.dt
    if isinstance(state, DenseJointState):
        if dt is None:
            raise ValueError("photon_density of a dense state needs the bin duration dt")
        probs = np.abs(state.tensor()) ** 2
        occ = np.arange(state.fock_dim, dtype=float)
        out = np.empty(state.n_modes)
        for n in range(state.n_modes):
            marginal = probs.sum(axis=tuple(ax for ax in range(probs.ndim) if ax != 1 + n))
            out[n] = float(marginal @ occ)
        return out / dt
    raise TypeError(f"cannot compute photon density of a {type(state).__name__}")


@dataclass
class IoRecord:
    """Discrete input/output field averages around each collision (n = 1..N).

    a_out[n-1]   = <a_{n-1}>/sqrt(dt) in the state after collision n-1,
    a_in_prev[n-1] = <a_{n-1}>/sqrt(dt) in the state before it,
    sm_prev[n-1] = interaction-picture <sigma_-(t_{n-1})> before it.
    """

    a_out: np.ndarray = field(repr=False)
    a_in_prev: np.ndarray = field(repr=False)
    sm_prev: np.ndarray = field(repr=False)


def _mode_average(state: DenseJointState, mode: int) -> complex:
    psi = state.tensor()
    lowered = np.tensordot(annihilation(state.fock_dim), psi, axes=[(1,), (1 + mode,)])
    lowered = np.moveaxis(lowered, 0, 1 + mode)
    return complex(np.vdot(psi.reshape(-1), lowered.reshape(-1)))


def _sigma_minus_average(state: DenseJointState) -> complex:
    psi = state.tensor()
    lowered = np.tensordot(SIGMA_MINUS, psi, axes=[(1,), (0,)])
    return complex(np.vdot(psi.reshape(-1), lowered.reshape(-1)))


def io_record(trajectory: DenseTrajectory) -> IoRecord:
    """Field averages entering the discrete input-output relation."""
    params = trajectory.params
    n = params.n_steps
    missing = [s for s in range(n + 1) if s not in trajectory.snapshots]
    if missing:
        raise ValueError(f"io record needs snapshots at every step; missing {missing[:4]}...")
    omega = params.omega_q if trajectory.frame == "lab" else params.omega_p
    root_dt = np.sqrt(params.dt)
    a_out = np.empty(n, dtype=complex)
    a_in_prev = np.empty(n, dtype=complex)
    sm_prev = np.empty(n, dtype=complex)
    for step in range(1, n + 1):
        after = trajectory.snapshot(step)
        before = trajectory.snapshot(step - 1)
        a_out[step - 1] = _mode_average(after, step - 1) / root_dt
        a_in_prev[step - 1] = _mode_average(before, step - 1) / root_dt
        sm_prev[step - 1] = (_sigma_minus_average(before)
                             * np.exp(-1j * omega * (step - 1) * params.dt))
    return IoRecord(a_out=a_out, a_in_prev=a_in_prev, sm_prev=sm_prev)


def io_residual(trajectory: DenseTrajectory) -> np.ndarray:
    """|<a_out(t_n)> - <a_in(t_{n-1})> + sqrt(gamma) <sigma_-(t_{n-1})>| per step.

    Zero to machine precision for vacuum and spontaneous emission; first order
    in dt for driven runs (the remainder of the per-collision expansion).
    """
    rec = io_record(trajectory)
    gamma = trajectory.params.gamma
    return np.abs(rec.a_out - rec.a_in_prev + np.sqrt(gamma) * rec.sm_prev)


def state_fidelity(a, b) -> float:
    """|<a|b>|^2 between two same-representation states, normalized into [0, 1]."""
    if type(a) is not type(b):
        raise TypeError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, SinglePhotonState):
        if a.grid != b.grid or a.frame != b.frame:
            raise ValueError("states live on different grids or frames")
        overlap = np.conj(a.c_e) * b.c_e + np.vdot(a.g, b.g)
        na, nb = a.norm_squared(), b.norm_squared()
    elif isinstance(a, SectorState):
        if a.grid != b.grid or a.frame != b.frame or a.step != b.step:
            raise ValueError("states live on different grids, frames or times")
        shared = min(a.m_max, b.m_max)
        overlap = sum(np.vdot(a.values[m], b.values[m]) for m in range(shared + 1))
        na, nb = a.norm_squared(), b.norm_squared()
    elif isinstance(a, DenseJointState):
        if (a.n_modes, a.fock_dim, a.frame) != (b.n_modes, b.fock_dim, b.frame):
            raise ValueError("states live on different spaces or frames")
        overlap = np.vdot(a.amplitudes, b.amplitudes)
        na, nb = a.norm**2, b.norm**2
    else:
        raise TypeError(f"unsupported state type {type(a).__name__}")
    return float(abs(overlap) ** 2 / (na * nb))


def dominant_angular_frequency(signal: np.ndarray, dt: float) -> float:
    """Angular frequency of the strongest non-DC spectral peak (parabolic refine)."""
    sig = np.asarray(signal, dtype=float)
    sig = sig - sig.mean()
    spec = np.abs(np.fft.rfft(sig * np.hanning(len(sig)))) ** 2
    if len(spec) < 4:
        raise ValueError("signal too short for frequency extraction")
    k = int(np.argmax(spec[1:]) + 1)
    step = 2 * np.pi / (len(sig) * dt)
    if 1 <= k < len(spec) - 1 and spec[k - 1] > 0 and spec[k + 1] > 0:
        la, lb, lc = np.log(spec[k - 1]), np.log(spec[k]), np.log(spec[k + 1])
        denom = la - 2 * lb + lc
        if denom != 0:
            return (k + 0.5 * (la - lc) / denom) * step
    return k * step


def power_law_exponent(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive data")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])

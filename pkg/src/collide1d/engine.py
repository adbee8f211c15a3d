"""Collision-by-collision propagation of the joint qubit-field state.

Three tiers share the same per-collision unitaries:

* a dense brute-force oracle over the full qubit x (d-level)^N tensor,
* an O(N) recursion for a single excitation shared between qubit and field,
* an excitation-sector propagator in the displaced frame, where each temporal
  mode interacts exactly once, so the joint state decomposes into ordered
  emitted-photon tuples carrying qubit 2-vectors.

The qubit basis order is (g, e) everywhere; mode occupation indices run
0..d-1 with the qubit as the slowest tensor axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _conv
from .core import (DENSE_SIZE_BITS, MemoryGuardError, SimulationParams,
                   TimeGrid, Wavepacket, qubit_index, qubit_vector)

# Pauli and ladder operators in the (g, e) ordered basis.  sigma_y carries the
# sign that makes exp{-(i t/2)[(delta - i gamma/2) sigma_z - Omega sigma_y]}
# reproduce the closed-form no-emission amplitudes (f_ge > 0, f_eg < 0 for
# small positive Omega*t); equivalently it fixes the drive amplitude phase.
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
PROJ_E = np.array([[0, 0], [0, 1]], dtype=complex)

LAB = "lab"
DISPLACED = "displaced"

#: refuse sector materializations above this many stored amplitudes
MAX_SECTOR_AMPLITUDES = 1 << 21


def annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


def check_dense_size(n_modes: int, fock_dim: int) -> int:
    """Validate the 2*d^N joint-state size against the memory guard."""
    bits = n_modes * math.log2(fock_dim) + 1
    if bits > DENSE_SIZE_BITS:
        need = 2 * fock_dim**n_modes * 16
        raise MemoryGuardError(
            f"dense state needs {need / 1e6:.0f} MB ({n_modes} modes at fock_dim "
            f"{fock_dim}, 2^{bits:.1f} amplitudes > 2^{DENSE_SIZE_BITS})")
    return 2 * fock_dim**n_modes


@dataclass
class DenseJointState:
    """Full joint state vector over qubit x (d-level)^N.

    Index layout: qubit slowest, then mode 0, ..., mode N-1 fastest.
    """

    amplitudes: np.ndarray = field(repr=False)
    n_modes: int
    fock_dim: int
    frame: str = LAB

    def __post_init__(self):
        expected = check_dense_size(self.n_modes, self.fock_dim)
        if self.amplitudes.shape != (expected,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({expected},)")

    @classmethod
    def product_state(cls, qubit, n_modes: int, fock_dim: int,
                      frame: str = LAB) -> "DenseJointState":
        """|qubit> x |vacuum>, or a qubit superposition over the vacuum field."""
        size = check_dense_size(n_modes, fock_dim)
        amps = np.zeros(size, dtype=complex)
        v = qubit_vector(qubit)
        stride = fock_dim**n_modes
        amps[0] = v[0]
        amps[stride] = v[1]
        return cls(amplitudes=amps, n_modes=n_modes, fock_dim=fock_dim, frame=frame)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) + (self.fock_dim,) * self.n_modes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def qubit_matrix(self) -> np.ndarray:
        """Partial trace over all modes (not renormalized)."""
        m = self.amplitudes.reshape(2, -1)
        # three fused reductions instead of materializing m.conj()
        r00 = np.vdot(m[0], m[0])
        r11 = np.vdot(m[1], m[1])
        r01 = np.vdot(m[1], m[0])  # rho[0,1] = sum m[0] conj(m[1])
        return np.array([[r00, r01], [np.conj(r01), r11]])

    def copy(self) -> "DenseJointState":
        return DenseJointState(self.amplitudes.copy(), self.n_modes, self.fock_dim, self.frame)


@dataclass(frozen=True)
class CollisionUnitary:
    """Unitary on the (qubit x mode-n) factor; index (q, k) -> q*d + k."""

    matrix: np.ndarray = field(repr=False)
    frame: str
    step: int
    fock_dim: int

    def unitarity_defect(self) -> float:
        d2 = self.matrix.shape[0]
        return float(np.abs(self.matrix.conj().T @ self.matrix - np.eye(d2)).max())


def lab_collision_unitary(n: int, params: SimulationParams,
                          fock_dim: int | None = None) -> CollisionUnitary:
    """Exact exponential of the bare qubit-mode coupling at collision n.

    The generator sqrt(gamma*dt)*(e^{i w_q t_n} sigma_+ a - h.c.) splits into
    invariant 2x2 blocks: |g,0> is untouched, each pair {|e,k>, |g,k+1>}
    rotates by sqrt(k+1)*sqrt(gamma*dt), and the truncation-frozen top level
    |e,d-1> is left alone so the matrix stays exactly unitary.
    """
    d = params.fock_dim if fock_dim is None else fock_dim
    if d < 2:
        raise ValueError("fock_dim must be >= 2")
    U = np.eye(2 * d, dtype=complex)
    theta0 = math.sqrt(params.gamma * params.dt)
    phase = np.exp(1j * params.omega_q * n * params.dt)
    for k in range(d - 1):
        theta = math.sqrt(k + 1) * theta0
        ie = d + k        # |e, k>
        ig = k + 1        # |g, k+1>
        c, s = math.cos(theta), math.sin(theta)
        U[ie, ie] = c
        U[ig, ig] = c
        U[ie, ig] = phase * s
        U[ig, ie] = -np.conj(phase) * s
    return CollisionUnitary(matrix=U, frame=LAB, step=n, fock_dim=d)


def displaced_hamiltonian(n: int, params: SimulationParams, fock_dim: int) -> np.ndarray:
    """Collision generator in the displaced frame (drive as a classical term)."""
    d = fock_dim
    a = annihilation(d)
    eye_d = np.eye(d)
    phase = np.exp(1j * params.omega_p * n * params.dt)
    H = (params.delta * np.kron(PROJ_E, eye_d)
         - 0.5 * params.omega_rabi * np.kron(SIGMA_Y, eye_d)
         + 1j * math.sqrt(params.gamma / params.dt)
         * (phase * np.kron(SIGMA_PLUS, a) - np.conj(phase) * np.kron(SIGMA_MINUS, a.conj().T)))
    return H


def displaced_collision_unitary(n: int, params: SimulationParams,
                                fock_dim: int | None = None) -> CollisionUnitary:
    """exp(-i*dt*H_n) with the drive and detuning included, via eigendecomposition."""
    d = params.fock_dim if fock_dim is None else fock_dim
    if d < 2:
        raise ValueError("fock_dim must be >= 2")
    H = displaced_hamiltonian(n, params, d)
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(-1j * params.dt * w)) @ V.conj().T
    return CollisionUnitary(matrix=U, frame=DISPLACED, step=n, fock_dim=d)


def _collide_in_place(amplitudes: np.ndarray, unitary: CollisionUnitary, n: int,
                      n_modes: int, work: np.ndarray | None = None) -> None:
    """Contract the collision unitary over the (qubit, mode n) axes, in place.

    Rows of U that are exactly identity are skipped: for a unitary, an identity
    row implies an identity column, so the remaining rows mix only among
    themselves.  This collapses the lab-frame update to the one excitation
    exchange block instead of a full-state contraction.  ``work`` is an
    optional (2, 2d, d^(N-1)) scratch buffer so long runs avoid reallocating.
    """
    d = unitary.fock_dim
    U = unitary.matrix
    active = np.flatnonzero(np.abs(U - np.eye(2 * d)).sum(axis=1) != 0)
    if active.size == 0:
        return
    lead = d**n
    trail = d ** (n_modes - 1 - n)
    view = amplitudes.reshape(2, lead, d, trail)
    if work is None:
        work = np.empty((2, 2 * d, d ** (n_modes - 1)), dtype=complex)
    old = work[0, :active.size].reshape(active.size, lead, trail)
    new = work[1, :active.size]
    for i, r in enumerate(active):
        q, k = divmod(int(r), d)
        old[i] = view[q, :, k, :]
    np.matmul(U[np.ix_(active, active)], old.reshape(active.size, -1), out=new)
    for i, r in enumerate(active):
        q, k = divmod(int(r), d)
        view[q, :, k, :] = new[i].reshape(lead, trail)


def apply_collision(state: DenseJointState, n: int,
                    unitary: CollisionUnitary) -> DenseJointState:
    """Contract the collision unitary over the (qubit, mode n) axes.

    All other mode axes are untouched; the input state is not modified.
    """
    if unitary.step != n:
        raise ValueError(f"unitary built for step {unitary.step}, applied at step {n}")
    if unitary.fock_dim != state.fock_dim:
        raise ValueError("fock dimension mismatch between state and unitary")
    if not 0 <= n < state.n_modes:
        raise ValueError(f"mode index {n} outside 0..{state.n_modes - 1}")
    out = state.amplitudes.copy()
    _collide_in_place(out, unitary, n, state.n_modes)
    return DenseJointState(out, state.n_modes, state.fock_dim, state.frame)


@dataclass
class DenseTrajectory:
    """Per-step qubit matrices and norms, plus full snapshots at chosen steps."""

    params: SimulationParams
    frame: str
    qubit_matrices: np.ndarray = field(repr=False)   # (N+1, 2, 2)
    norms: np.ndarray = field(repr=False)            # (N+1,)
    snapshots: dict[int, DenseJointState] = field(repr=False)

    def p_excited(self) -> np.ndarray:
        return self.qubit_matrices[:, 1, 1].real

    def snapshot(self, step: int) -> DenseJointState:
        try:
            return self.snapshots[step]
        except KeyError:
            raise KeyError(f"no snapshot stored for step {step}") from None


def run_dense(params: SimulationParams, initial: DenseJointState,
              frame: str = LAB, snapshot_steps=None) -> DenseTrajectory:
    """Apply collisions n = 0..N-1 in order to the full joint state.

    snapshot_steps: iterable of steps to keep full copies of, or "all"; by
    default only the initial and final states are retained (per-step reduced
    qubit matrices and norms are always recorded).
    """
    n = params.n_steps
    if initial.n_modes != n:
        raise ValueError(f"initial state has {initial.n_modes} modes, params want {n}")
    if abs(initial.norm - 1.0) > 1e-9:
        raise ValueError(f"initial state not normalized: |psi| = {initial.norm}")
    if frame not in (LAB, DISPLACED):
        raise ValueError(f"frame must be 'lab' or 'displaced', got {frame!r}")
    if snapshot_steps == "all":
        wanted = set(range(n + 1))
    elif snapshot_steps is None:
        wanted = {0, n}
    else:
        wanted = set(int(s) for s in snapshot_steps)

    build = lab_collision_unitary if frame == LAB else displaced_collision_unitary
    state = initial.copy()
    state.frame = frame
    d = state.fock_dim
    work = np.empty((2, 2 * d, d ** (n - 1)), dtype=complex)
    qubit = np.empty((n + 1, 2, 2), dtype=complex)
    norms = np.empty(n + 1)
    snaps: dict[int, DenseJointState] = {}
    qubit[0] = state.qubit_matrix()
    norms[0] = math.sqrt(np.trace(qubit[0]).real)
    if 0 in wanted:
        snaps[0] = state.copy()
    for step in range(n):
        _collide_in_place(state.amplitudes, build(step, params, d), step, n, work)
        qubit[step + 1] = state.qubit_matrix()
        norms[step + 1] = math.sqrt(np.trace(qubit[step + 1]).real)
        if step + 1 in wanted:
            snaps[step + 1] = state.copy()
    return DenseTrajectory(params=params, frame=frame, qubit_matrices=qubit,
                           norms=norms, snapshots=snaps)


# ---------------------------------------------------------------------------
# single-excitation recursion
# ---------------------------------------------------------------------------

@dataclass
class SinglePhotonState:
    """One shared excitation: qubit-excited amplitude plus one-photon amplitudes.

    g[n] is the discrete amplitude of a photon in mode n with the qubit in the
    ground state (sqrt(dt) times the envelope density).
    """

    c_e: complex
    g: np.ndarray = field(repr=False)
    grid: TimeGrid
    frame: str = LAB

    def norm_squared(self) -> float:
        return abs(self.c_e) ** 2 + float(np.sum(np.abs(self.g) ** 2))

    def p_excited(self) -> float:
        return abs(self.c_e) ** 2


class SinglePhotonRun:
    """Trajectory of the single-excitation collision recursion.

    Mode n is touched only at collision n, so any intermediate state is the
    final amplitudes for past modes glued to the input for future ones; only
    the O(N) qubit amplitude history needs storing.
    """

    def __init__(self, params: SimulationParams, wavepacket: Wavepacket | None,
                 c_e_trajectory: np.ndarray, b_initial: np.ndarray,
                 b_final: np.ndarray, norm_trajectory: np.ndarray):
        self.params = params
        self.grid = params.grid
        self.wavepacket = wavepacket
        self.c_e_trajectory = c_e_trajectory
        self.norm_trajectory = norm_trajectory
        self._b_initial = b_initial
        self._b_final = b_final

    def p_excited(self) -> np.ndarray:
        return np.abs(self.c_e_trajectory) ** 2

    def state_at(self, step: int) -> SinglePhotonState:
        if not 0 <= step <= self.params.n_steps:
            raise ValueError(f"step {step} outside 0..{self.params.n_steps}")
        g = np.concatenate((self._b_final[:step], self._b_initial[step:]))
        return SinglePhotonState(c_e=complex(self.c_e_trajectory[step]), g=g,
                                 grid=self.grid)

    def final_state(self) -> SinglePhotonState:
        return self.state_at(self.params.n_steps)


def run_single_excitation(params: SimulationParams,
                          wavepacket: Wavepacket | None,
                          excited_amplitude: complex = 0.0) -> SinglePhotonRun:
    """Propagate a shared single excitation with the effective per-collision map.

    Each collision applies the exactly unitary 2x2 map on (c_e, b_n):

        c_e  <-  e^{-gamma dt/2} c_e + sqrt(1 - e^{-gamma dt}) e^{+i w_q t_n} b_n
        b_n  <-  e^{-gamma dt/2} b_n - sqrt(1 - e^{-gamma dt}) e^{-i w_q t_n} c_e

    touching only mode n, so the whole run costs O(N).  The standard input is
    the ground-state qubit with a single-photon wavepacket; passing
    ``wavepacket=None`` with a unit ``excited_amplitude`` instead starts from
    the excited qubit over vacuum (the same map then reproduces spontaneous
    emission).
    """
    n = params.n_steps
    if wavepacket is None:
        if abs(abs(excited_amplitude) - 1.0) > 1e-9:
            raise ValueError("vacuum input requires |excited_amplitude| = 1")
        b0 = np.zeros(n, dtype=complex)
    else:
        if excited_amplitude != 0.0:
            raise ValueError("a single-photon input starts from the ground state")
        if wavepacket.grid.n_steps < n:
            raise ValueError(
                f"wavepacket grid has {wavepacket.grid.n_steps} bins, run needs {n}")
        if abs(wavepacket.grid.dt - params.dt) > 1e-12 * params.dt:
            raise ValueError("wavepacket and params use different dt")
        b0 = wavepacket.mode_amplitudes()[:n].astype(complex)
    b = b0.copy()
    damp = math.exp(-0.5 * params.gamma * params.dt)
    kick = math.sqrt(1.0 - math.exp(-params.gamma * params.dt))
    omega_q = params.omega_q
    dt = params.dt
    ce = complex(excited_amplitude)
    ce_traj = np.zeros(n + 1, dtype=complex)
    ce_traj[0] = ce
    norm_traj = np.empty(n + 1)
    total = float(np.sum(np.abs(b) ** 2)) + abs(ce) ** 2
    norm_traj[0] = total
    for step in range(n):
        bn = b[step]
        phase = complex(math.cos(omega_q * step * dt), math.sin(omega_q * step * dt))
        ce_new = damp * ce + kick * phase * bn
        bn_new = damp * bn - kick * phase.conjugate() * ce
        total += (abs(ce_new) ** 2 + abs(bn_new) ** 2) - (abs(ce) ** 2 + abs(bn) ** 2)
        b[step] = bn_new
        ce = ce_new
        ce_traj[step + 1] = ce
        norm_traj[step + 1] = total
    return SinglePhotonRun(params, wavepacket, ce_traj, b0, b, norm_traj)


# ---------------------------------------------------------------------------
# displaced-frame sector propagator
# ---------------------------------------------------------------------------

@dataclass
class SectorState:
    """Joint state restricted to photon sectors m = 0..m_max.

    values[m] has shape (2, K_m) over the lexicographically ordered strictly
    increasing mode tuples tuples[m] (shape (K_m, m)); row 0/1 is the qubit
    g/e amplitude.  Only past modes carry photons.
    """

    step: int
    m_max: int
    grid: TimeGrid
    frame: str
    tuples: list = field(repr=False)
    values: list = field(repr=False)

    def norm_squared(self) -> float:
        return float(sum(np.sum(np.abs(v) ** 2) for v in self.values))

    def truncation_deficit(self) -> float:
        """Estimated weight of the sectors beyond m_max (one minus the norm)."""
        return 1.0 - self.norm_squared()

    def sector_weights(self) -> np.ndarray:
        """(m_max+1, 2) weights per photon count and qubit label."""
        return np.array([np.sum(np.abs(v) ** 2, axis=1) for v in self.values])

    def qubit_matrix(self) -> np.ndarray:
        rho = np.zeros((2, 2), dtype=complex)
        for v in self.values:
            rho += v @ v.conj().T
        return rho

    def amplitude(self, eps: str, modes=()) -> complex:
        """Amplitude of qubit label eps with photons exactly in `modes` (sorted)."""
        m = len(modes)
        if m > self.m_max:
            raise ValueError(f"state only tracks up to {self.m_max} photons")
        if m == 0:
            return complex(self.values[0][qubit_index(eps), 0])
        key = np.asarray(modes, dtype=int)
        hits = np.flatnonzero((self.tuples[m] == key).all(axis=1))
        if hits.size != 1:
            raise KeyError(f"tuple {tuple(modes)} not found in sector {m}")
        return complex(self.values[m][qubit_index(eps), hits[0]])


class SectorRun:
    """Displaced-frame propagation organized by emitted-photon tuples.

    In the displaced frame every temporal mode starts in vacuum and interacts
    exactly once, so the collision unitary contributes one no-emission block
    K = <0|U|0> and one emission block E = <1|U|0> per step; the step index
    enters only through the phase e^{-i w_p t_n} attached at emission.  Tuple
    amplitudes are products of K powers and E blocks, evaluated lazily from a
    precomputed power table, so norms and reduced states stay cheap at large N
    while materialization remains available (and memory-guarded) at small N.
    """

    def __init__(self, params: SimulationParams, m_max: int, phi0="g"):
        if m_max < 0:
            raise ValueError("m_max must be >= 0")
        self.params = params
        self.grid = params.grid
        self.m_max = m_max
        self.phi0 = qubit_vector(phi0)
        unit = displaced_collision_unitary(0, params, 2).matrix  # t_0 = 0: phase-free
        # index (q, k) = 2q + k
        self.no_jump_block = unit[np.ix_([0, 2], [0, 2])]
        self.emission_block = unit[np.ix_([1, 3], [0, 2])]
        n = params.n_steps
        powers = np.empty((n + 1, 2, 2), dtype=complex)
        powers[0] = np.eye(2)
        for j in range(n):
            powers[j + 1] = self.no_jump_block @ powers[j]
        self.powers = powers
        self.emission_phases = np.exp(-1j * params.omega_p * params.dt * np.arange(n))
        self._chain = None

    # -- aggregate trajectories ------------------------------------------------

    def _moments(self):
        if self._chain is None:
            self._chain = _conv.moment_chain(self.powers, self.emission_block,
                                             self.phi0, self.m_max, offset=1)
        return self._chain

    def qubit_trajectory(self) -> np.ndarray:
        """(N+1, 2, 2) reduced qubit matrices (trace < 1 by the truncated weight)."""
        q, sectors, _ = self._moments()
        return _conv.reduced_qubit_trajectory(q, sectors)

    def p_excited(self) -> np.ndarray:
        return self.qubit_trajectory()[:, 1, 1].real

    def norm_trajectory(self) -> np.ndarray:
        return np.einsum("naa->n", self.qubit_trajectory()).real

    def sector_weight_trajectories(self) -> np.ndarray:
        """(m_max+1, N+1, 2) sector weights per qubit label over the run."""
        q, sectors, _ = self._moments()
        out = np.empty((self.m_max + 1, q.shape[0], 2))
        out[0] = np.abs(q) ** 2
        for m, S in enumerate(sectors, start=1):
            out[m, :, 0] = S[:, 0, 0].real
            out[m, :, 1] = S[:, 1, 1].real
        return out

    def truncation_deficit(self, step: int | None = None) -> float:
        norms = self.norm_trajectory()
        return float(1.0 - (norms[-1] if step is None else norms[step]))

    def emission_weights(self) -> np.ndarray:
        """Weight emitted into each time bin, summed over tracked sectors.

        Within the tracked bookkeeping this equals the mode-marginal photon
        weight at any later time: K and E together preserve the norm of every
        tuple's qubit vector, and children keep their parent's indices.
        """
        _, _, births = self._moments()
        w = np.zeros(self.params.n_steps)
        for D in births:
            w += np.einsum("naa->n", D).real
        return w

    # -- amplitudes --------------------------------------------------------------

    def amplitude(self, eps: str, modes, step: int) -> complex:
        """Amplitude of (eps, photons in `modes`) after `step` collisions."""
        modes = tuple(int(m) for m in modes)
        if any(b <= a for a, b in zip(modes, modes[1:])):
            raise ValueError("mode tuple must be strictly increasing")
        if modes and modes[-1] >= step:
            raise ValueError("only past modes carry photons")
        v = self.phi0
        prev = None
        for n in modes:
            lag = n if prev is None else n - prev - 1
            v = self.emission_phases[n] * (self.emission_block @ (self.powers[lag] @ v))
            prev = n
        lag = step if prev is None else step - prev - 1
        v = self.powers[lag] @ v
        return complex(v[qubit_index(eps)])

    def state_at(self, step: int, max_amplitudes: int = MAX_SECTOR_AMPLITUDES) -> SectorState:
        """Materialize every tracked tuple amplitude after `step` collisions."""
        if not 0 <= step <= self.params.n_steps:
            raise ValueError(f"step {step} outside grid")
        total = sum(math.comb(step, m) for m in range(self.m_max + 1))
        if total > max_amplitudes:
            raise MemoryGuardError(
                f"materializing {total} tuple amplitudes exceeds the guard "
                f"({max_amplitudes}); lower m_max or use the lazy accessors")
        tuples: list[np.ndarray] = [np.zeros((1, 0), dtype=int)]
        values: list[np.ndarray] = [(self.powers[step] @ self.phi0).reshape(2, 1)]
        # birth vectors of the previous sector, indexed like tuples[m-1]
        births = self.phi0.reshape(2, 1)
        prev_last = np.full(1, -1, dtype=int)  # "last emission" step; -1 for vacuum
        prev_tuples = tuples[0]
        for m in range(1, self.m_max + 1):
            combos = np.array(list(itertools.combinations(range(step), m)), dtype=int)
            if combos.size == 0:
                tuples.append(combos.reshape(0, m))
                values.append(np.zeros((2, 0), dtype=complex))
                births = np.zeros((2, 0), dtype=complex)
                prev_last = np.zeros(0, dtype=int)
                prev_tuples = tuples[-1]
                continue
            # locate each combo's parent (its prefix) in the previous sector
            if m == 1:
                parent_idx = np.zeros(len(combos), dtype=int)
            else:
                order = {tuple(t): i for i, t in enumerate(prev_tuples.tolist())}
                parent_idx = np.fromiter(
                    (order[tuple(c[:-1])] for c in combos.tolist()), dtype=int,
                    count=len(combos))
            last = combos[:, -1]
            lag = last - prev_last[parent_idx] - 1
            parent_now = np.einsum("kab,bk->ak", self.powers[lag], births[:, parent_idx])
            new_births = self.emission_phases[last] * (self.emission_block @ parent_now)
            vals = np.einsum("kab,bk->ak", self.powers[step - 1 - last], new_births)
            tuples.append(combos)
            values.append(vals)
            births = new_births
            prev_last = last
            prev_tuples = combos
        return SectorState(step=step, m_max=self.m_max, grid=self.grid,
                           frame=DISPLACED, tuples=tuples, values=values)


def run_displaced_sectors(params: SimulationParams, m_max: int,
                          phi0="g") -> SectorRun:
    """Sector-restricted displaced-frame propagation (see SectorRun)."""
    return SectorRun(params, m_max, phi0)

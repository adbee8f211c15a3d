"""Time grids, simulation parameters, and wavepacket construction.

Everything downstream works on a uniform grid t_n = n*dt, with one bosonic
temporal mode per bin [t_n, t_{n+1}).  Discrete norms use the left-Riemann
convention sum_n dt*|xi(t_n)|^2, matching the collision model's own
discretization, so discrete-vs-continuum comparisons converge at one rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

GROUND = "g"
EXCITED = "e"
QUBIT_INDEX = {GROUND: 0, EXCITED: 1}

#: largest joint-state exponent the dense oracle will allocate: 2 * d^N <= 2^24
DENSE_SIZE_BITS = 24

#: dimensionless first-order validity bound for gamma*dt, Omega*dt, |delta|*dt
VALIDITY_BOUND = 0.1


class ValidityWarning(UserWarning):
    """A rate times dt is too large for the first-order collision picture."""


class MemoryGuardError(RuntimeError):
    """A requested state or tensor would exceed the configured memory budget."""


def qubit_index(label: str) -> int:
    try:
        return QUBIT_INDEX[label]
    except KeyError:
        raise ValueError(f"qubit label must be 'g' or 'e', got {label!r}") from None


def qubit_vector(phi0) -> np.ndarray:
    """Normalize a qubit specification ('g', 'e', or a length-2 vector) to a vector."""
    if isinstance(phi0, str):
        v = np.zeros(2, dtype=complex)
        v[qubit_index(phi0)] = 1.0
        return v
    v = np.asarray(phi0, dtype=complex)
    if v.shape != (2,):
        raise ValueError("qubit state must be 'g', 'e', or a length-2 amplitude vector")
    n = np.linalg.norm(v)
    if not math.isclose(n, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"qubit state vector must be normalized, |v| = {n}")
    return v


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_n = n*dt for n = 0..n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1 or int(self.n_steps) != self.n_steps:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        """All grid times, including both endpoints (length n_steps + 1)."""
        return np.arange(self.n_steps + 1) * self.dt

    def time_at(self, n: int) -> float:
        if not 0 <= n <= self.n_steps:
            raise ValueError(f"step {n} outside grid 0..{self.n_steps}")
        return n * self.dt

    def index_of(self, t: float) -> int:
        """Grid index of a time that lies on the grid (within 1e-9 * dt)."""
        n = int(round(t / self.dt))
        if not 0 <= n <= self.n_steps or abs(n * self.dt - t) > 1e-9 * self.dt:
            raise ValueError(f"t = {t} is not on the grid (dt = {self.dt}, T = {self.total_time})")
        return n


@dataclass(frozen=True)
class SimulationParams:
    """Physical and numerical knobs for one run.

    gamma      : qubit decay rate into the waveguide (> 0)
    omega_q    : qubit angular frequency (>= 0)
    delta      : drive detuning omega_q - omega_p
    omega_rabi : classical Rabi frequency of the displaced-frame drive (>= 0)
    dt         : collision duration
    n_steps    : number of collisions
    fock_dim   : per-mode Fock truncation of the dense oracle (>= 2)
    strict     : turn first-order validity warnings into errors
    """

    gamma: float
    dt: float
    n_steps: int
    omega_q: float = 0.0
    delta: float = 0.0
    omega_rabi: float = 0.0
    fock_dim: int = 2
    strict: bool = False

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.omega_q < 0:
            raise ValueError(f"omega_q must be non-negative, got {self.omega_q}")
        if self.omega_rabi < 0:
            # The drive amplitude is treated as real and non-negative; a complex
            # or negative amplitude is not covered by the closed forms.
            raise ValueError(f"omega_rabi must be non-negative, got {self.omega_rabi}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1 or int(self.n_steps) != self.n_steps:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if self.fock_dim < 2 or int(self.fock_dim) != self.fock_dim:
            raise ValueError(f"fock_dim must be an integer >= 2, got {self.fock_dim}")
        self._check_validity()

    def _check_validity(self):
        checks = [
            ("gamma*dt", self.gamma * self.dt),
            ("omega_rabi*dt", self.omega_rabi * self.dt),
            ("|delta|*dt", abs(self.delta) * self.dt),
        ]
        for name, value in checks:
            if value >= VALIDITY_BOUND:
                msg = (f"{name} = {value:.3g} >= {VALIDITY_BOUND}; the collision picture "
                       f"is only first order in dt")
                if self.strict:
                    raise ValueError(msg)
                warnings.warn(msg, ValidityWarning, stacklevel=3)

    @property
    def omega_p(self) -> float:
        """Drive frequency, always derived as omega_q - delta."""
        return self.omega_q - self.delta

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(dt=self.dt, n_steps=self.n_steps)


def rabi_from_amplitude(beta_p: float, gamma: float) -> float:
    """Rabi frequency 2*sqrt(gamma)*beta_p of a coherent drive of amplitude beta_p."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return 2.0 * math.sqrt(gamma) * beta_p


def complex_rabi(params: SimulationParams) -> complex:
    """Complex Rabi frequency sqrt(Omega^2 + (delta - i*gamma/2)^2), principal branch.

    Downstream no-emission amplitudes are even in this quantity, so the branch
    choice is observationally irrelevant.
    """
    return complex(np.sqrt(params.omega_rabi**2 + (params.delta - 0.5j * params.gamma) ** 2 + 0j))


@dataclass(frozen=True)
class Wavepacket:
    """Sampled complex envelope xi(t_n), one sample per temporal mode.

    samples[n] is the envelope at the left endpoint of bin n, n = 0..n_steps-1,
    normalized so that sum_n dt*|samples[n]|^2 = 1.  renorm_factor records the
    scale applied to the raw closed-form envelope to reach unit discrete norm.
    """

    samples: np.ndarray = field(repr=False)
    grid: TimeGrid
    renorm_factor: float = 1.0

    def __post_init__(self):
        if len(self.samples) != self.grid.n_steps:
            raise ValueError(
                f"wavepacket has {len(self.samples)} samples for a grid of "
                f"{self.grid.n_steps} bins")

    def discrete_norm(self) -> float:
        return float(self.grid.dt * np.sum(np.abs(self.samples) ** 2))

    def mode_amplitudes(self) -> np.ndarray:
        """Discrete one-photon amplitudes sqrt(dt)*xi(t_n) (unit l2 norm)."""
        return np.sqrt(self.grid.dt) * self.samples


def _normalized(raw: np.ndarray, grid: TimeGrid) -> Wavepacket:
    norm = math.sqrt(grid.dt * float(np.sum(np.abs(raw) ** 2)))
    if norm == 0:
        raise ValueError("wavepacket envelope is identically zero")
    factor = 1.0 / norm
    pkt = Wavepacket(samples=raw * factor, grid=grid, renorm_factor=factor)
    assert abs(pkt.discrete_norm() - 1.0) < 1e-9
    return pkt


def make_exponential_wavepacket(big_gamma: float, omega: float, grid: TimeGrid,
                                renormalize: bool = False) -> Wavepacket:
    """Decaying exponential envelope sqrt(G)*exp(-G*t/2)*exp(-i*omega*t).

    The grid must hold essentially all of the packet (exp(-G*T) < 1e-6) unless
    ``renormalize`` is set, in which case the truncated tail is absorbed into
    the recorded renormalization factor.
    """
    if big_gamma <= 0:
        raise ValueError(f"envelope decay rate must be positive, got {big_gamma}")
    tail = math.exp(-big_gamma * grid.total_time)
    if tail >= 1e-6 and not renormalize:
        raise ValueError(
            f"grid too short for the exponential packet: exp(-G*T) = {tail:.3g} >= 1e-6; "
            f"extend the grid or pass renormalize=True")
    t = np.arange(grid.n_steps) * grid.dt
    raw = math.sqrt(big_gamma) * np.exp(-0.5 * big_gamma * t) * np.exp(-1j * omega * t)
    return _normalized(raw, grid)


def make_gaussian_wavepacket(sigma: float, t0: float, omega: float,
                             grid: TimeGrid) -> Wavepacket:
    """Gaussian envelope peaked at t0 with intensity width sigma.

    Requires 5-sigma support inside the grid so the sampled packet is whole.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if t0 - 5 * sigma < 0 or t0 + 5 * sigma > grid.total_time:
        raise ValueError(
            f"gaussian support [t0 - 5s, t0 + 5s] = [{t0 - 5 * sigma:.3g}, "
            f"{t0 + 5 * sigma:.3g}] must lie inside [0, {grid.total_time:.3g}]")
    t = np.arange(grid.n_steps) * grid.dt
    raw = ((2 * math.pi * sigma**2) ** -0.25
           * np.exp(-((t - t0) ** 2) / (4 * sigma**2))
           * np.exp(-1j * omega * t))
    return _normalized(raw, grid)

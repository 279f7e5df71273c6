"""State-vector simulation of linear-schedule quantum annealing.

The interpolating Hamiltonian is H(t) = s(t) H_0 - (1 - s(t)) sum_i sigma_i^x
with s(t) = t / tau. Integration uses second-order Strang splitting: both
split terms have exact propagators (a diagonal phase for H_0 and n
independent single-qubit x-rotations for the driver), so the evolution is
unitary to machine precision at any step size. Schedule coefficients are
evaluated at each step midpoint to keep second-order accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .instances import SKInstance, all_energies

DEFAULT_PROB_FLOOR = 1e-300
STABILITY_BUDGET = 0.1  # max phase advance per step, as dt * Hamiltonian scale


class IntegratorError(RuntimeError):
    """Raised when the evolution produces non-finite amplitudes."""


@dataclass(frozen=True)
class AnnealSpec:
    """Annealing run parameters: total time tau and a step-size ceiling."""

    tau: float
    dt_max: float = 0.1

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray
    norm_drift: float = 0.0

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    @property
    def n(self) -> int:
        return int(np.log2(len(self.amplitudes)) + 0.5)


@dataclass(frozen=True)
class ProposalDistribution:
    """State-independent proposal Q(sigma), used for both Q_QA and Q_uniform."""

    probs: np.ndarray
    floor_applied: bool = False
    _cumulative: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("proposal probabilities must be nonnegative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "_cumulative", cum)

    @property
    def log_probs(self) -> np.ndarray:
        return np.log(self.probs)


def initial_state(n: int) -> QuantumState:
    """Uniform superposition: ground state of the driver at s = 0."""
    dim = 1 << n
    amp = np.full(dim, dim ** -0.5, dtype=np.complex128)
    return QuantumState(amplitudes=amp)


def step_plan(tau: float, dt_max: float, hamiltonian_scale: float) -> tuple[int, float]:
    """Number of Strang steps and the resulting dt.

    dt = min(dt_max, tau/1000, budget/scale): the last term bounds the local
    phase advance per step; tau spans five decades so no fixed dt works at
    both ends.
    """
    if tau == 0:
        return 0, 0.0
    dt = min(dt_max, tau / 1000.0, STABILITY_BUDGET / hamiltonian_scale)
    nsteps = max(1, int(np.ceil(tau / dt - 1e-12)))
    return nsteps, tau / nsteps


@njit(cache=True)
def _strang_evolve(psi, energies, n, tau, nsteps):
    # Half diagonal steps of adjacent steps are merged into one phase.
    dt = tau / nsteps
    dim = psi.shape[0]
    s0 = 0.5 * dt / tau
    for k in range(dim):
        psi[k] *= np.exp(-0.5j * dt * s0 * energies[k])
    for step in range(nsteps):
        s_mid = (step + 0.5) * dt / tau
        theta = dt * (1.0 - s_mid)
        c = np.cos(theta)
        s = np.sin(theta)
        for q in range(n):
            stride = 1 << q
            block = stride << 1
            for base in range(0, dim, block):
                for off in range(base, base + stride):
                    a = psi[off]
                    b = psi[off + stride]
                    psi[off] = c * a + 1j * s * b
                    psi[off + stride] = 1j * s * a + c * b
        if step < nsteps - 1:
            s_next = (step + 1.5) * dt / tau
            coeff = 0.5 * dt * (s_mid + s_next)
        else:
            coeff = 0.5 * dt * s_mid
        for k in range(dim):
            psi[k] *= np.exp(-1j * coeff * energies[k])
    return psi


@njit(cache=True)
def _strang_evolve_frozen(psi, energies, n, s, total, nsteps):
    dt = total / nsteps
    dim = psi.shape[0]
    theta = dt * (1.0 - s)
    c = np.cos(theta)
    sn = np.sin(theta)
    for k in range(dim):
        psi[k] *= np.exp(-0.5j * dt * s * energies[k])
    for step in range(nsteps):
        for q in range(n):
            stride = 1 << q
            block = stride << 1
            for base in range(0, dim, block):
                for off in range(base, base + stride):
                    a = psi[off]
                    b = psi[off + stride]
                    psi[off] = c * a + 1j * sn * b
                    psi[off + stride] = 1j * sn * a + c * b
        coeff = dt * s if step < nsteps - 1 else 0.5 * dt * s
        for k in range(dim):
            psi[k] *= np.exp(-1j * coeff * energies[k])
    return psi


def evolve_frozen(
    inst: SKInstance,
    s: float,
    total_time: float,
    nsteps: int,
    energies: np.ndarray | None = None,
) -> QuantumState:
    """Strang evolution under the schedule frozen at a fixed s.

    The Hamiltonian is then time-independent, so the result can be checked
    against a single dense matrix exponential; halving dt must shrink the
    error by the second-order factor.
    """
    if energies is None:
        energies = all_energies(inst)
    psi = initial_state(inst.n).amplitudes.copy()
    psi = _strang_evolve_frozen(psi, np.asarray(energies, dtype=np.float64), inst.n, s, total_time, nsteps)
    return QuantumState(amplitudes=psi, norm_drift=abs(float(np.sqrt(np.sum(np.abs(psi) ** 2))) - 1.0))


def evolve(inst: SKInstance, spec: AnnealSpec, energies: np.ndarray | None = None) -> QuantumState:
    """Integrate the Schroedinger equation from t=0 to t=tau.

    Renormalizes only if the norm drifted by more than 1e-9 (the drift is
    recorded on the returned state either way).
    """
    if energies is None:
        energies = all_energies(inst)
    energies = np.asarray(energies, dtype=np.float64)
    scale = max(float(energies.max() - energies.min()), float(inst.n))
    nsteps, dt = step_plan(spec.tau, spec.dt_max, scale)
    psi = initial_state(inst.n).amplitudes.copy()
    if nsteps > 0:
        psi = _strang_evolve(psi, energies, inst.n, spec.tau, nsteps)
    if not np.all(np.isfinite(psi.view(np.float64))):
        raise IntegratorError(f"non-finite amplitudes after evolution: tau={spec.tau}, dt={dt}")
    norm = float(np.sqrt(np.sum(np.abs(psi) ** 2)))
    drift = abs(norm - 1.0)
    if drift > 1e-9:
        psi = psi / norm
    return QuantumState(amplitudes=psi, norm_drift=drift)


def born_distribution(state: QuantumState, floor: float = DEFAULT_PROB_FLOOR) -> ProposalDistribution:
    """Q(sigma) = |<sigma|psi>|^2 with a tiny floor guarding log-domain consumers."""
    probs = np.abs(state.amplitudes) ** 2
    floored = probs < floor
    if floored.any():
        probs = np.maximum(probs, floor)
    probs = probs / probs.sum()
    return ProposalDistribution(probs=probs, floor_applied=bool(floored.any()))


def uniform_proposal(n: int) -> ProposalDistribution:
    probs = np.full(1 << n, 2.0 ** -n)
    return ProposalDistribution(probs=probs)


def sample(prop: ProposalDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from the stored probability vector."""
    return int(np.searchsorted(prop._cumulative, rng.random(), side="right"))

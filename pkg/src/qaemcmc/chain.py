"""Metropolis-Hastings chain driver and trajectory-level observables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .gibbs import TargetDistribution
from .instances import SKInstance
from .kernels import KernelSpec, kernel_log_q


@dataclass(frozen=True)
class ChainTrace:
    """Visited states sigma^(1..steps) plus every proposal and its outcome."""

    init: int
    states: np.ndarray
    proposals: np.ndarray
    accepted: np.ndarray
    seed: str

    def __post_init__(self):
        for arr in (self.states, self.proposals, self.accepted):
            arr.setflags(write=False)
        if not (len(self.states) == len(self.proposals) == len(self.accepted)):
            raise ValueError("trace arrays must have equal length")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def currents(self) -> np.ndarray:
        """State occupied when each proposal was made."""
        return np.concatenate(([self.init], self.states[:-1]))

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())


@dataclass(frozen=True)
class ObservableSeries:
    running_mean_energy: np.ndarray
    abs_error: np.ndarray
    checkpoints: np.ndarray
    tv_to_target: np.ndarray
    acceptance_rate: float


@njit(cache=True)
def _mh_loop(init, flip_bits, indep_proposals, u_accept, log_mu, log_q, local):
    steps = u_accept.shape[0]
    states = np.empty(steps, dtype=np.int64)
    proposals = np.empty(steps, dtype=np.int64)
    accepted = np.empty(steps, dtype=np.bool_)
    cur = init
    for t in range(steps):
        if local:
            prop = cur ^ (1 << flip_bits[t])
            log_a = log_mu[prop] - log_mu[cur]
        else:
            prop = indep_proposals[t]
            log_a = (log_mu[prop] - log_mu[cur]) + (log_q[cur] - log_q[prop])
        if log_a > 0.0:
            log_a = 0.0
        acc = u_accept[t] < np.exp(log_a)
        if acc:
            cur = prop
        states[t] = cur
        proposals[t] = prop
        accepted[t] = acc
    return states, proposals, accepted


def make_rng(*seed_parts) -> np.random.Generator:
    """Deterministic counter-based stream from a tuple of integer seed parts."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(seed_parts))))


def run_chain(
    inst: SKInstance,
    target: TargetDistribution,
    kernel: KernelSpec,
    steps: int,
    init: int,
    rng: np.random.Generator,
    seed_label: str = "",
) -> ChainTrace:
    """Standard propose / accept loop, fully deterministic given the stream.

    Per-step randomness is pre-drawn in bulk from `rng` (proposal draws
    first, then acceptance uniforms) and consumed by a compiled loop.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = inst.n
    if not 0 <= init < (1 << n):
        raise ValueError(f"init state {init} out of range for n={n}")
    local = kernel.kind == "local"
    if local:
        flip_bits = rng.integers(0, n, size=steps)
        indep = np.empty(0, dtype=np.int64)
        log_q = np.zeros(1)
    elif kernel.kind == "uniform":
        flip_bits = np.empty(0, dtype=np.int64)
        indep = rng.integers(0, 1 << n, size=steps)
        log_q = kernel_log_q(kernel, n)
    else:
        flip_bits = np.empty(0, dtype=np.int64)
        cum = np.cumsum(kernel.qa_proposal.probs)
        cum[-1] = 1.0
        indep = np.searchsorted(cum, rng.random(steps), side="right").astype(np.int64)
        log_q = kernel_log_q(kernel, n)
    u_accept = rng.random(steps)
    states, proposals, accepted = _mh_loop(
        int(init),
        flip_bits.astype(np.int64),
        indep.astype(np.int64),
        u_accept,
        np.ascontiguousarray(target.log_probs),
        np.ascontiguousarray(log_q),
        local,
    )
    return ChainTrace(init=int(init), states=states, proposals=proposals, accepted=accepted, seed=seed_label)


def empirical_distribution(trace: ChainTrace, num_states: int, burn_in: int = 0) -> np.ndarray:
    """Normalized histogram of visited states after burn_in."""
    if burn_in >= len(trace):
        raise ValueError("burn_in must be smaller than the trace length")
    kept = trace.states[burn_in:]
    return np.bincount(kept, minlength=num_states) / len(kept)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance between two normalized probability vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal length")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not normalized (sum={v.sum()!r})")
    return 0.5 * float(np.abs(p - q).sum())


def log_checkpoints(steps: int) -> np.ndarray:
    """Powers of two up to `steps`, with `steps` itself always included."""
    cps = 2 ** np.arange(0, int(np.log2(steps)) + 1) if steps >= 1 else np.array([], dtype=int)
    cps = cps[cps <= steps]
    if len(cps) == 0 or cps[-1] != steps:
        cps = np.append(cps, steps)
    return cps.astype(np.int64)


def observable_series(
    trace: ChainTrace,
    energies: np.ndarray,
    target: TargetDistribution,
    exact_energy: float,
    checkpoints: np.ndarray | None = None,
) -> ObservableSeries:
    """Running-mean energy, its absolute error, and TV to target at checkpoints."""
    if checkpoints is None:
        checkpoints = log_checkpoints(len(trace))
    e_path = energies[trace.states]
    running_mean = np.cumsum(e_path) / np.arange(1, len(trace) + 1)
    abs_error = np.abs(running_mean - exact_energy)
    tv = np.empty(len(checkpoints))
    for i, t in enumerate(checkpoints):
        emp = np.bincount(trace.states[:t], minlength=target.num_states) / t
        tv[i] = tv_distance(emp, target.probs)
    return ObservableSeries(
        running_mean_energy=running_mean,
        abs_error=abs_error,
        checkpoints=np.asarray(checkpoints),
        tv_to_target=tv,
        acceptance_rate=trace.acceptance_rate,
    )


def first_crossing_step(abs_error: np.ndarray, threshold: float = 0.1) -> int | None:
    """First Monte Carlo step (1-based) where |running mean - exact| drops below threshold."""
    below = np.flatnonzero(abs_error < threshold)
    return int(below[0]) + 1 if len(below) else None


def hamming_cumulative(trace: ChainTrace, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative distribution of the proposal flip-count distance, d in [0, n]."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    d = np.bitwise_count((trace.currents ^ trace.proposals).astype(np.uint64)).astype(np.int64)
    hist = np.bincount(d, minlength=n + 1) / len(d)
    return np.arange(n + 1), np.cumsum(hist)


def energy_gap_cumulative(trace: ChainTrace, energies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact empirical CDF of |E(current) - E(proposed)| over proposal events."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    gaps = np.abs(energies[trace.currents] - energies[trace.proposals])
    support = np.sort(gaps)
    cdf = np.arange(1, len(support) + 1) / len(support)
    return support, cdf

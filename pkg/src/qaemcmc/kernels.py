"""Proposal kernels (local, uniform, QA) and Metropolis-Hastings acceptance.

The local kernel flips one uniformly chosen spin and is symmetric, so its
acceptance is the plain Metropolis ratio. The uniform and QA kernels are
state-independent (Metropolized independence sampling); their acceptance
carries the proposal-ratio correction Q(sigma)/Q(sigma'). Everything is
computed in log domain; the uniform variate is compared against exp(log_a)
only at the final step, with underflow rounding to rejection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import annealing
from .annealing import ProposalDistribution
from .gibbs import TargetDistribution

KINDS = ("local", "uniform", "qa")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    qa_proposal: ProposalDistribution | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "qa" and self.qa_proposal is None:
            raise ValueError("qa kernel requires a ProposalDistribution")

    @property
    def state_independent(self) -> bool:
        return self.kind in ("uniform", "qa")


def local_kernel() -> KernelSpec:
    return KernelSpec(kind="local")


def uniform_kernel() -> KernelSpec:
    return KernelSpec(kind="uniform")


def qa_kernel(proposal: ProposalDistribution) -> KernelSpec:
    return KernelSpec(kind="qa", qa_proposal=proposal)


def kernel_log_q(kernel: KernelSpec, n: int) -> np.ndarray | None:
    """log Q(sigma) for state-independent kernels; None for the local kernel."""
    if kernel.kind == "uniform":
        return np.full(1 << n, -n * np.log(2.0))
    if kernel.kind == "qa":
        return kernel.qa_proposal.log_probs
    return None


def propose(kernel: KernelSpec, current: int, n: int, rng: np.random.Generator) -> int:
    """Draw a proposal; the local kernel is the only one that reads `current`."""
    if kernel.kind == "local":
        bit = int(rng.integers(n))
        return current ^ (1 << bit)
    if kernel.kind == "uniform":
        return int(rng.integers(1 << n))
    return annealing.sample(kernel.qa_proposal, rng)


def log_acceptance(kernel: KernelSpec, target: TargetDistribution, current: int, proposal: int) -> float:
    """log A(sigma'|sigma), always <= 0."""
    lp = target.log_probs
    delta = lp[proposal] - lp[current]
    if kernel.state_independent:
        lq = kernel_log_q(kernel, _n_from_dim(target.num_states))
        delta += lq[current] - lq[proposal]
    return min(0.0, float(delta))


def accept_step(log_a: float, rng: np.random.Generator) -> bool:
    """True with probability exp(log_a); one uniform draw from the stream."""
    if log_a > 0:
        raise ValueError(f"log acceptance must be <= 0, got {log_a}")
    return rng.random() < np.exp(log_a)


def spin_distance(a: int, b: int) -> int:
    """Number of differing spins (flip count) between two configurations."""
    return int(np.bitwise_count(np.uint64(a ^ b)))


def _n_from_dim(dim: int) -> int:
    return int(dim).bit_length() - 1

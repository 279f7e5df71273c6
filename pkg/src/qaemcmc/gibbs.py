"""Exact Gibbs-Boltzmann target distribution over all 2^n states, in log domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .instances import SKInstance, all_energies


@dataclass(frozen=True)
class TargetDistribution:
    """Target mu(sigma) = exp(-beta E(sigma)) / Z with log-domain bookkeeping.

    log_probs (= log_weights - log_z) is the quantity other modules consume;
    acceptance ratios at T = 0.1 involve exp of hundreds, so raw probability
    ratios are never exposed.
    """

    beta: float
    log_weights: np.ndarray
    log_z: float
    probs: np.ndarray

    def __post_init__(self):
        self.log_weights.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def log_probs(self) -> np.ndarray:
        return self.log_weights - self.log_z

    @property
    def num_states(self) -> int:
        return len(self.probs)


def build_target(inst: SKInstance, temperature: float, energies: np.ndarray | None = None) -> TargetDistribution:
    """Exact target at T = 1/beta via max-shifted log-sum-exp.

    `energies` may be passed to reuse a precomputed all_energies vector.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if energies is None:
        energies = all_energies(inst)
    beta = 1.0 / temperature
    log_weights = -beta * np.asarray(energies, dtype=np.float64)
    log_z = float(logsumexp(log_weights))
    probs = np.exp(log_weights - log_z)
    probs /= probs.sum()
    return TargetDistribution(beta=beta, log_weights=log_weights, log_z=log_z, probs=probs)


def exact_mean_energy(target: TargetDistribution, energies: np.ndarray) -> float:
    """Equilibrium energy sum_sigma mu(sigma) E(sigma)."""
    energies = np.asarray(energies)
    if len(energies) != target.num_states:
        raise ValueError("energies length does not match target dimension")
    return float(target.probs @ energies)


def min_probability(target: TargetDistribution) -> float:
    """min_sigma mu(sigma); feeds the mixing-time upper bound."""
    return float(target.probs.min())


def ground_states(energies: np.ndarray) -> np.ndarray:
    """Indices attaining the minimum energy (ties reported, never silently broken)."""
    energies = np.asarray(energies)
    return np.flatnonzero(energies == energies.min())

"""Exact desk-scale benchmark for quantum-annealing-enhanced MCMC on the SK model."""

__version__ = "0.1.0"

from .annealing import (
    AnnealSpec,
    ProposalDistribution,
    QuantumState,
    born_distribution,
    evolve,
    initial_state,
    uniform_proposal,
)
from .chain import (
    ChainTrace,
    ObservableSeries,
    empirical_distribution,
    energy_gap_cumulative,
    hamming_cumulative,
    make_rng,
    observable_series,
    run_chain,
    tv_distance,
)
from .gibbs import TargetDistribution, build_target, exact_mean_energy, ground_states, min_probability
from .harness import EnsembleConfig, FitResult, aggregate, fit_power_law, run_convergence_sweep, run_gap_sweep
from .instances import (
    SKInstance,
    all_energies,
    energy,
    generate_instance,
    index_from_spins,
    load_instance,
    save_instance,
    spins_from_index,
)
from .kernels import KernelSpec, accept_step, local_kernel, log_acceptance, propose, qa_kernel, uniform_kernel
from .spectral import (
    SpectralReport,
    TransitionMatrix,
    build_transition_matrix,
    independence_gap,
    independence_spectrum,
    mixing_bounds,
    optimize_tau,
    spectral_gap,
)

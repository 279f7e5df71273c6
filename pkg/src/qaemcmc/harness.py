"""Ensemble orchestration: gap sweeps, convergence sweeps, and power-law fits.

Per-instance results are memoized on disk when the QAEMCMC_CACHE environment
variable points at a directory, so long sweeps resume instead of restarting.
All derived seeds come from counter-based streams keyed on (master_seed, n,
instance index, ...), which makes every result independent of processing
order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from joblib import Memory
from scipy import stats

from .annealing import AnnealSpec, born_distribution, evolve
from .chain import (
    ChainTrace,
    first_crossing_step,
    log_checkpoints,
    make_rng,
    run_chain,
    tv_distance,
)
from .gibbs import build_target, exact_mean_energy
from .instances import all_energies, generate_instance
from .kernels import local_kernel, qa_kernel, uniform_kernel
from .spectral import build_transition_matrix, optimize_tau, spectral_gap

_memory = Memory(location=os.environ.get("QAEMCMC_CACHE"), verbose=0)

FIT_MODELS = ("gap_vs_n", "tv_vs_steps", "tv_vs_n")


@dataclass(frozen=True)
class EnsembleConfig:
    n_values: tuple = (10,)
    temperatures: tuple = (1.0,)
    instances_per_point: int = 20
    kernels: tuple = ("local", "uniform", "qa")
    chain_steps: int = 100_000
    chain_replicas: int = 32
    master_seed: int = 20240
    # tau policy: fixed small tau in the high-T regime, gap-maximizing scan below
    high_t_threshold: float = 10.0
    tau_fixed_high_t: float = 0.01
    tau_min: float = 1e-2
    tau_max_low_t: float = 1e3
    tau_max_mid_t: float = 1e2
    tau_points_per_decade: int = 4
    tau_budget: int = 40
    dt_max: float = 0.1

    def tau_spec(self, temperature: float) -> tuple:
        if temperature >= self.high_t_threshold:
            return ("fixed", self.tau_fixed_high_t)
        tau_max = self.tau_max_low_t if temperature < 1.0 else self.tau_max_mid_t
        return ("optimize", self.tau_min, tau_max, self.tau_points_per_decade, self.tau_budget)


@dataclass(frozen=True)
class FitResult:
    exponent: float
    std_error: float
    model: str


def instance_seeds(master_seed: int, n: int, count: int) -> np.ndarray:
    """Distinct 64-bit instance seeds, a pure function of (master_seed, n)."""
    ss = np.random.SeedSequence([master_seed & (2**64 - 1), n, 0x5EED])
    return ss.generate_state(count, dtype=np.uint64)


@_memory.cache
def _qa_proposal_point(n, seed, temperature, tau_spec, dt_max):
    """(tau_star, gap_star or nan, Q_QA probs) for one instance; disk-memoized."""
    inst = generate_instance(int(n), int(seed))
    energies = all_energies(inst)
    target = build_target(inst, temperature, energies)
    if tau_spec[0] == "fixed":
        tau_star = float(tau_spec[1])
        gap_star = np.nan
    else:
        _, lo, hi, ppd, budget = tau_spec
        scan = optimize_tau(
            inst, target, tau_range=(lo, hi), budget=budget,
            points_per_decade=ppd, dt_max=dt_max, energies=energies,
        )
        tau_star, gap_star = scan.tau_star, scan.gap_star
    state = evolve(inst, AnnealSpec(tau=tau_star, dt_max=dt_max), energies=energies)
    return tau_star, gap_star, born_distribution(state).probs


def _kernel_for(kind, n, seed, temperature, config):
    if kind == "local":
        return local_kernel(), np.nan
    if kind == "uniform":
        return uniform_kernel(), np.nan
    tau_star, _, probs = _qa_proposal_point(n, seed, temperature, config.tau_spec(temperature), config.dt_max)
    return qa_kernel(probs_to_proposal(probs)), tau_star


def probs_to_proposal(probs):
    from .annealing import ProposalDistribution

    return ProposalDistribution(probs=np.asarray(probs))


@_memory.cache
def _gap_point(n, seed, temperature, kind, tau_spec, dt_max):
    """(tau_star, gap) of one (instance, kernel) pair; disk-memoized."""
    inst = generate_instance(int(n), int(seed))
    energies = all_energies(inst)
    target = build_target(inst, temperature, energies)
    tau_star = np.nan
    if kind == "qa":
        tau_star, gap_star, probs = _qa_proposal_point(n, seed, temperature, tau_spec, dt_max)
        if np.isfinite(gap_star):
            return tau_star, gap_star
        kernel = qa_kernel(probs_to_proposal(probs))
    elif kind == "local":
        kernel = local_kernel()
    else:
        kernel = uniform_kernel()
    tm = build_transition_matrix(target, kernel)
    return tau_star, spectral_gap(tm, target).gap


def run_gap_sweep(config: EnsembleConfig) -> list[dict]:
    """Per-(n, T, kernel, instance) spectral gaps; rows carry tau_star for the QA kernel."""
    rows = []
    for n in config.n_values:
        seeds = instance_seeds(config.master_seed, n, config.instances_per_point)
        for temperature in config.temperatures:
            tau_spec = config.tau_spec(temperature)
            for kind in config.kernels:
                for idx, seed in enumerate(seeds):
                    tau_star, gap = _gap_point(int(n), int(seed), float(temperature), kind, tau_spec, config.dt_max)
                    rows.append(
                        dict(n=int(n), T=float(temperature), kernel=kind, instance=idx,
                             seed=int(seed), tau_star=float(tau_star), gap=float(gap))
                    )
    return rows


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    temperature: float
    seed: int
    kernel: str
    checkpoints: np.ndarray
    abs_err: np.ndarray          # (replicas, checkpoints)
    tv: np.ndarray               # (replicas, checkpoints)
    acceptance: np.ndarray       # (replicas,)
    de_median: np.ndarray        # (replicas,) median |E(cur) - E(prop)|
    hamming_hist: np.ndarray     # pooled proposal flip-count histogram, length n+1
    mean_abs_err: np.ndarray     # ensemble-mean |running mean - exact| at every step
    crossing_step: float         # first step where mean_abs_err < 0.1, nan if never


_KERNEL_CODE = {"local": 1, "uniform": 2, "qa": 3}


@_memory.cache
def _convergence_point(n, seed, temperature, kind, steps, replicas, master_seed, tau_spec, dt_max):
    inst = generate_instance(int(n), int(seed))
    energies = all_energies(inst)
    target = build_target(inst, temperature, energies)
    e_exact = exact_mean_energy(target, energies)
    if kind == "qa":
        _, _, probs = _qa_proposal_point(n, seed, temperature, tau_spec, dt_max)
        kernel = qa_kernel(probs_to_proposal(probs))
    elif kind == "local":
        kernel = local_kernel()
    else:
        kernel = uniform_kernel()
    checkpoints = log_checkpoints(int(steps))
    ncp = len(checkpoints)
    abs_err = np.empty((replicas, ncp))
    tv = np.empty((replicas, ncp))
    acceptance = np.empty(replicas)
    de_median = np.empty(replicas)
    hamming = np.zeros(int(n) + 1)
    err_sum = np.zeros(int(steps))
    for r in range(replicas):
        rng = make_rng(master_seed, n, int(seed) & (2**63 - 1), _KERNEL_CODE[kind], r)
        init = int(rng.integers(1 << int(n)))
        trace = run_chain(inst, target, kernel, int(steps), init, rng, seed_label=f"r{r}")
        e_path = energies[trace.states]
        running = np.cumsum(e_path) / np.arange(1, steps + 1)
        err = np.abs(running - e_exact)
        err_sum += err
        for i, t in enumerate(checkpoints):
            abs_err[r, i] = err[t - 1]
            emp = np.bincount(trace.states[:t], minlength=target.num_states) / t
            tv[r, i] = tv_distance(emp, target.probs)
        acceptance[r] = trace.acceptance_rate
        de = np.abs(energies[trace.currents] - energies[trace.proposals])
        de_median[r] = np.median(de)
        d = np.bitwise_count((trace.currents ^ trace.proposals).astype(np.uint64))
        hamming += np.bincount(d.astype(np.int64), minlength=int(n) + 1)
    mean_err = err_sum / replicas
    crossing = first_crossing_step(mean_err, 0.1)
    return checkpoints, abs_err, tv, acceptance, de_median, hamming, mean_err, (np.nan if crossing is None else float(crossing))


def run_convergence_sweep(config: EnsembleConfig, seeds_by_n: dict | None = None) -> list[ConvergencePoint]:
    """Independent M-H chains per (n, T, instance, kernel) with pooled diagnostics.

    `seeds_by_n` overrides the derived instance seeds (used for the
    hard-instance ensembles, whose seeds come from a selection scan).
    """
    points = []
    for n in config.n_values:
        if seeds_by_n is not None:
            seeds = seeds_by_n[n]
        else:
            seeds = instance_seeds(config.master_seed, n, config.instances_per_point)
        for temperature in config.temperatures:
            tau_spec = config.tau_spec(temperature)
            for kind in config.kernels:
                for seed in seeds:
                    cps, abs_err, tv, acc, de_med, ham, mean_err, crossing = _convergence_point(
                        int(n), int(seed), float(temperature), kind,
                        int(config.chain_steps), int(config.chain_replicas),
                        int(config.master_seed), tau_spec, config.dt_max,
                    )
                    points.append(
                        ConvergencePoint(
                            n=int(n), temperature=float(temperature), seed=int(seed), kernel=kind,
                            checkpoints=cps, abs_err=abs_err, tv=tv, acceptance=acc,
                            de_median=de_med, hamming_hist=ham, mean_abs_err=mean_err,
                            crossing_step=crossing,
                        )
                    )
    return points


def find_hard_instances(
    n: int,
    temperature: float,
    master_seed: int,
    count: int,
    prob_threshold: float = 0.1,
    min_dominant_states: int = 5,
    max_scan: int = 20000,
) -> list[int]:
    """Seeds of instances whose target has >= min_dominant_states states with mu > threshold."""
    ss = np.random.SeedSequence([master_seed & (2**64 - 1), n, 0xA4D])
    candidates = ss.generate_state(max_scan, dtype=np.uint64)
    found = []
    for seed in candidates:
        inst = generate_instance(n, int(seed))
        target = build_target(inst, temperature)
        if int((target.probs > prob_threshold).sum()) >= min_dominant_states:
            found.append(int(seed))
            if len(found) == count:
                break
    return found


def aggregate(values) -> tuple[float, float]:
    """Mean and population standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot aggregate an empty collection")
    return float(values.mean()), float(values.std())


def fit_power_law(points, model: str) -> FitResult:
    """OLS on the linearized model; exponent sign follows the model convention.

    gap_vs_n:    y ~ 2^(-alpha n)      -> alpha = -slope of log2 y vs n
    tv_vs_steps: y ~ steps^(-alpha)    -> alpha = -slope of ln y vs ln steps
    tv_vs_n:     y ~ 2^(gamma n)       -> gamma = +slope of log2 y vs n
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {FIT_MODELS}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0):
        raise ValueError("all y values must be positive for a power-law fit")
    if model == "tv_vs_steps":
        lx, ly = np.log(x), np.log(y)
    else:
        lx, ly = x, np.log2(y)
    res = stats.linregress(lx, ly)
    slope, err = res.slope, res.stderr
    exponent = slope if model == "tv_vs_n" else -slope
    return FitResult(exponent=float(exponent), std_error=float(err), model=model)


# ---------------------------------------------------------------------------
# CSV emission (canonical sweep artifacts)

def write_gap_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("n,T,kernel,instance,tau_star,gap\n")
        for r in rows:
            fh.write(f"{r['n']},{r['T']!r},{r['kernel']},{r['instance']},{r['tau_star']!r},{r['gap']!r}\n")


def write_tau_hist_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("n,T,instance,tau_star\n")
        for r in rows:
            if r["kernel"] == "qa" and np.isfinite(r["tau_star"]):
                fh.write(f"{r['n']},{r['T']!r},{r['instance']},{r['tau_star']!r}\n")


def write_convergence_csv(points, path) -> None:
    with open(path, "w") as fh:
        fh.write("instance,kernel,replica,checkpoint,abs_err,tv\n")
        for p in points:
            for r in range(p.abs_err.shape[0]):
                for i, t in enumerate(p.checkpoints):
                    fh.write(f"{p.seed},{p.kernel},{r},{t},{p.abs_err[r, i]!r},{p.tv[r, i]!r}\n")


def write_fits_csv(fits, path) -> None:
    """fits: iterable of (kernel, FitResult)."""
    with open(path, "w") as fh:
        fh.write("model,kernel,exponent,std_error\n")
        for kernel, fit in fits:
            fh.write(f"{fit.model},{kernel},{fit.exponent!r},{fit.std_error!r}\n")

"""Exact transition matrices, absolute spectral gap, mixing-time bounds, tau tuning.

The M-H kernel P is symmetrized as S = D^{1/2} P D^{-1/2} with D = diag(mu),
which is symmetric exactly when P is reversible w.r.t. mu; a dense (or, for
the largest sizes, iterative) symmetric eigensolve then yields the spectrum.
The unit eigenvalue is removed by deflating its analytically known
eigenvector sqrt(mu) rather than by discarding the eigenvalue closest to 1:
at low temperature the top of the spectrum is nearly degenerate
(metastability), so value-based identification picks an arbitrary vector in
the near-degenerate subspace, whereas the deflation is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .annealing import AnnealSpec, born_distribution, evolve
from .gibbs import TargetDistribution, min_probability
from .instances import SKInstance
from .kernels import KernelSpec, kernel_log_q

DENSE_EIG_MAX_N = 10  # above this, fall back to an iterative extremal solve


class ReversibilityError(RuntimeError):
    """Symmetrized kernel is measurably asymmetric: detailed balance is broken."""


class NonMixingChainError(RuntimeError):
    """Spectral gap is zero; mixing-time bounds are unbounded."""


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray
    kernel_kind: str

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralReport:
    gap: float
    second_eigenvalue_magnitude: float
    mixing_lower: float | None = None
    mixing_upper: float | None = None
    epsilon: float | None = None


@dataclass(frozen=True)
class TauScanResult:
    tau_star: float
    gap_star: float
    table: np.ndarray  # columns (tau, gap), in evaluation order


def build_transition_matrix(target: TargetDistribution, kernel: KernelSpec) -> TransitionMatrix:
    """Row-stochastic P with off-diagonals Q(sigma'|sigma) A(sigma'|sigma).

    Entries are assembled from log-domain quantities; the diagonal absorbs
    the rejection mass plus any self-proposal mass.
    """
    dim = target.num_states
    n = dim.bit_length() - 1
    lp = target.log_probs
    if kernel.state_independent:
        lq = kernel_log_q(kernel, n)
        w = lp - lq
        log_a = np.minimum(0.0, w[None, :] - w[:, None])
        P = np.exp(log_a + lq[None, :])
        np.fill_diagonal(P, 0.0)
    else:
        P = np.zeros((dim, dim))
        idx = np.arange(dim)
        for q in range(n):
            nb = idx ^ (1 << q)
            P[idx, nb] = np.exp(np.minimum(0.0, lp[nb] - lp[idx])) / n
    diag = 1.0 - P.sum(axis=1)
    if diag.min() < -1e-12:
        raise RuntimeError(f"negative diagonal mass {diag.min():.3e}: accumulated rounding exceeds budget")
    np.fill_diagonal(P, np.maximum(diag, 0.0))
    return TransitionMatrix(entries=P, kernel_kind=kernel.kind)


def _symmetrize(tm: TransitionMatrix, target: TargetDistribution) -> np.ndarray:
    lp = target.log_probs
    S = tm.entries * np.exp(0.5 * (lp[:, None] - lp[None, :]))
    asym = np.abs(S - S.T).max()
    if asym > 1e-10:
        raise ReversibilityError(f"symmetrized kernel asymmetry {asym:.3e} exceeds 1e-10")
    return 0.5 * (S + S.T)


def spectral_gap(tm: TransitionMatrix, target: TargetDistribution, method: str = "auto") -> SpectralReport:
    """Absolute spectral gap delta = 1 - max_{lambda != 1} |lambda|.

    method: 'dense' (full spectrum), 'iterative' (extremal eigenpairs only),
    or 'auto' (dense up to n=10, iterative above).
    """
    n = tm.dim.bit_length() - 1
    if method == "auto":
        method = "dense" if n <= DENSE_EIG_MAX_N else "iterative"
    S = _symmetrize(tm, target)
    sqrt_mu = np.exp(0.5 * target.log_probs)
    v1 = sqrt_mu / np.linalg.norm(sqrt_mu)
    resid = float(np.linalg.norm(S @ v1 - v1))
    if resid > 1e-8:
        raise ReversibilityError(
            f"sqrt(mu) is not a unit eigenvector (residual {resid:.3e}): stationary distribution is not the target"
        )
    if method == "dense":
        B = S - np.outer(v1, v1)
        vals = scipy.linalg.eigh(B, eigvals_only=True)
    elif method == "iterative":
        op = scipy.sparse.linalg.LinearOperator(
            S.shape, matvec=lambda x: S @ x - v1 * (v1 @ x), dtype=np.float64
        )
        k = min(6, tm.dim - 2)
        vals = scipy.sparse.linalg.eigsh(op, k=k, which="LM", return_eigenvectors=False)
    else:
        raise ValueError(f"unknown method {method!r}")
    lam2 = min(float(np.abs(vals).max()), 1.0) if len(vals) else 0.0
    return SpectralReport(gap=1.0 - lam2, second_eigenvalue_magnitude=lam2)


def independence_spectrum(target: TargetDistribution, log_q: np.ndarray) -> np.ndarray:
    """Exact eigenvalues of a Metropolized independence sampler, O(N log N).

    With states ordered by decreasing importance weight w = mu/Q, the non-unit
    eigenvalues are lambda_k = sum_{j>=k} Q_j - (sum_{j>=k} mu_j) / w_k for
    k = 1..N-1; every term Q_j (1 - w_j/w_k) is nonnegative, so the whole
    spectrum lies in [0, 1] and the absolute gap needs no magnitude handling.
    Returns the eigenvalues in descending order, unit eigenvalue first.
    """
    lam = 1.0 - _independence_one_minus_lambda(target, log_q)
    return np.concatenate(([1.0], np.sort(lam)[::-1]))


def independence_gap(target: TargetDistribution, log_q: np.ndarray) -> float:
    """Absolute spectral gap of a Metropolized independence sampler.

    Computed as min_k (1 - lambda_k) directly from the sum-of-positive-terms
    form 1 - lambda_k = sum_{j<k} Q_j + (sum_{j>=k} mu_j)/w_k, so tiny gaps
    keep full relative precision.
    """
    return float(min(_independence_one_minus_lambda(target, log_q).min(), 1.0))


def _independence_one_minus_lambda(target: TargetDistribution, log_q: np.ndarray) -> np.ndarray:
    lw = target.log_probs - log_q
    order = np.argsort(-lw)
    lw, lp, lq = lw[order], target.log_probs[order], log_q[order]
    q_prefix = np.concatenate(([0.0], np.cumsum(np.exp(lq))))[:-1]
    # suffix logsumexp of log mu, accumulated right-to-left for stability
    lse_suffix = np.logaddexp.accumulate(lp[::-1])[::-1]
    # the last entry (k = N-1) is identically 1 - lambda = 1 and is spurious
    return (q_prefix + np.exp(lse_suffix - lw))[:-1]


def mixing_bounds(gap: float, epsilon: float, min_mu: float) -> tuple[float, float]:
    """Bounds on the epsilon-mixing time from the absolute spectral gap."""
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if not min_mu > 0:
        raise ValueError("min_mu must be positive")
    if not 0 <= gap <= 1:
        raise ValueError(f"gap must lie in [0, 1], got {gap}")
    if gap == 0:
        raise NonMixingChainError("zero spectral gap: mixing time is unbounded")
    lower = max(0.0, (1.0 - 1.0 / gap) * np.log(2.0 * epsilon))
    upper = -np.log(epsilon * min_mu) / gap
    return float(lower), float(upper)


def report_with_bounds(report: SpectralReport, target: TargetDistribution, epsilon: float = 0.01) -> SpectralReport:
    lower, upper = mixing_bounds(report.gap, epsilon, min_probability(target))
    return replace(report, mixing_lower=lower, mixing_upper=upper, epsilon=epsilon)


def qa_gap_at_tau(
    inst: SKInstance,
    target: TargetDistribution,
    tau: float,
    dt_max: float = 0.1,
    energies: np.ndarray | None = None,
    method: str = "auto",
) -> float:
    """Gap of the QA kernel at annealing time tau.

    Uses the exact closed-form independence-sampler spectrum, which is both
    faster (O(N log N) after the evolution) and immune to the eigensolver
    stagnation that clustered low-gap spectra cause. The `method` argument is
    kept for signature compatibility and ignored.
    """
    state = evolve(inst, AnnealSpec(tau=tau, dt_max=dt_max), energies=energies)
    q = born_distribution(state)
    return independence_gap(target, q.log_probs)


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def optimize_tau(
    inst: SKInstance,
    target: TargetDistribution,
    tau_range: tuple[float, float] = (1e-2, 1e3),
    budget: int = 60,
    points_per_decade: int = 8,
    dt_max: float = 0.1,
    energies: np.ndarray | None = None,
    gap_method: str = "auto",
    gap_fn=None,
) -> TauScanResult:
    """Deterministic gap-maximizing tau search: log grid, then golden section.

    Refinement runs on log10(tau) around the best grid point until the
    bracketing interval shrinks below 5% relative width or the evaluation
    budget is exhausted.
    """
    lo, hi = tau_range
    if not (0 < lo < hi):
        raise ValueError(f"invalid tau_range {tau_range}")
    n_grid = max(2, int(np.ceil(np.log10(hi / lo) * points_per_decade)) + 1)
    if budget < max(10, n_grid):
        raise ValueError(f"budget {budget} too small for one grid pass of {n_grid} points")
    grid = np.logspace(np.log10(lo), np.log10(hi), n_grid)
    table = []
    evals = 0

    def gap_at(tau: float) -> float:
        nonlocal evals
        if gap_fn is not None:
            g = gap_fn(tau)
        else:
            g = qa_gap_at_tau(inst, target, tau, dt_max=dt_max, energies=energies, method=gap_method)
        table.append((tau, g))
        evals += 1
        return g

    gaps = np.array([gap_at(t) for t in grid])
    best = int(np.argmax(gaps))
    # Bracket in log space around the best grid point.
    a = np.log10(grid[max(best - 1, 0)])
    b = np.log10(grid[min(best + 1, n_grid - 1)])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = gap_at(10**x1) if evals < budget else None
    f2 = gap_at(10**x2) if evals < budget else None
    while f1 is not None and f2 is not None and evals < budget and (10**b - 10**a) > 0.05 * 10**a:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = gap_at(10**x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = gap_at(10**x1)
    tbl = np.array(table)
    best_row = int(np.argmax(tbl[:, 1]))
    return TauScanResult(tau_star=float(tbl[best_row, 0]), gap_star=float(tbl[best_row, 1]), table=tbl)

"""Populate the on-disk sweep cache for the acceptance suite, with progress logs.

Runs the same harness entry points (and therefore the same memoized cache
keys) as tests/test_acceptance.py, so a subsequent pytest run is fast.
"""
import sys
import time

from qaemcmc.harness import (
    EnsembleConfig,
    find_hard_instances,
    run_convergence_sweep,
    run_gap_sweep,
)

T0 = time.time()


def log(msg):
    print(f"[{time.time() - T0:8.0f}s] {msg}", flush=True)


def gap_phase(tag, cfg):
    for n in cfg.n_values:
        for kind in cfg.kernels:
            sub = EnsembleConfig(**{**cfg.__dict__, "n_values": (n,), "kernels": (kind,)})
            rows = run_gap_sweep(sub)
            gaps = [r["gap"] for r in rows]
            log(f"{tag}: n={n} kernel={kind} mean gap={sum(gaps)/len(gaps):.4f} "
                f"gaps={[round(g, 4) for g in gaps]}")


# --- low-temperature gaps (optimized tau), 20 instances -----------------
cfg_low = EnsembleConfig(n_values=(10,), temperatures=(0.1,), instances_per_point=20,
                         kernels=("qa", "uniform", "local"), master_seed=20240)
gap_phase("low-T", cfg_low)

# --- high-temperature gaps (fixed tau), 20 instances --------------------
cfg_high = EnsembleConfig(n_values=(10,), temperatures=(100.0,), instances_per_point=20,
                          kernels=("uniform", "qa"), master_seed=20240)
gap_phase("high-T", cfg_high)

# --- gap scaling in n at T=1, 20 instances ------------------------------
cfg_scale = EnsembleConfig(n_values=(4, 6, 8, 10, 12), temperatures=(1.0,),
                           instances_per_point=20, master_seed=20240)
gap_phase("scaling", cfg_scale)

# --- hard instances: chains for crossing/diagnostics --------------------
hard = find_hard_instances(10, 1.0, 20240, count=5)
log(f"hard instance seeds: {hard}")
cfg_hard = EnsembleConfig(n_values=(10,), temperatures=(1.0,), instances_per_point=len(hard),
                          chain_steps=100_000, chain_replicas=100, master_seed=20240)
for kind in cfg_hard.kernels:
    sub = EnsembleConfig(**{**cfg_hard.__dict__, "kernels": (kind,)})
    pts = run_convergence_sweep(sub, seeds_by_n={10: hard})
    log(f"hard: kernel={kind} crossings={[p.crossing_step for p in pts]} "
        f"acc={[round(float(p.acceptance.mean()), 3) for p in pts]}")

# --- generic T=1 ensemble: chains for TV ordering -----------------------
cfg_conv = EnsembleConfig(n_values=(10,), temperatures=(1.0,), instances_per_point=20,
                          chain_steps=100_000, chain_replicas=32, master_seed=20240)
for kind in cfg_conv.kernels:
    sub = EnsembleConfig(**{**cfg_conv.__dict__, "kernels": (kind,)})
    pts = run_convergence_sweep(sub)
    tv_end = [round(float(p.tv[:, -1].mean()), 4) for p in pts]
    log(f"conv: kernel={kind} mean final TV={sum(tv_end)/len(tv_end):.4f} per-instance={tv_end}")

log("done")

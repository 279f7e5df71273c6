"""Command-line driver: gen, gap, run, sweep, fit.

CSV tables are the canonical outputs; `--plot` additionally writes static
SVG line plots. Every command writes a replayable manifest before any long
computation starts. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annealing import AnnealSpec, born_distribution, evolve
from .gibbs import build_target
from .harness import (
    EnsembleConfig,
    FIT_MODELS,
    fit_power_law,
    run_convergence_sweep,
    run_gap_sweep,
    write_convergence_csv,
    write_fits_csv,
    write_gap_csv,
    write_tau_hist_csv,
)
from .instances import (
    MAX_SPINS,
    MIN_SPINS,
    all_energies,
    generate_instance,
    load_instance,
    save_instance,
)
from .kernels import local_kernel, qa_kernel, uniform_kernel
from .spectral import build_transition_matrix, optimize_tau, report_with_bounds, spectral_gap


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"command={command}", f"version={__version__}"]
    for key, val in sorted(vars(args).items()):
        if key == "func":
            continue
        lines.append(f"{key}={val}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _write_svg(path, series, title, xlabel, ylabel, log_x=False, log_y=False) -> None:
    """Minimal static SVG line plot: `series` is a list of (label, x, y)."""
    width, height, margin = 640, 420, 60

    def tx(v, lo, hi, log):
        if log:
            v, lo, hi = np.log10(v), np.log10(lo), np.log10(hi)
        return (v - lo) / (hi - lo) if hi > lo else 0.5

    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    if log_x:
        xs = xs[xs > 0]
    if log_y:
        ys = ys[ys > 0]
    xlo, xhi = (xs.min(), xs.max()) if len(xs) else (0.0, 1.0)
    ylo, yhi = (ys.min(), ys.max()) if len(ys) else (0.0, 1.0)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{height // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height // 2})">{ylabel}</text>',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" '
        f'fill="none" stroke="black"/>',
    ]
    for k, (label, x, y) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.ones(len(x), dtype=bool)
        if log_x:
            keep &= x > 0
        if log_y:
            keep &= y > 0
        pts = []
        for xi, yi in zip(x[keep], y[keep]):
            px = margin + tx(xi, xlo, xhi, log_x) * (width - 2 * margin)
            py = height - margin - tx(yi, ylo, yhi, log_y) * (height - 2 * margin)
            pts.append(f"{px:.2f},{py:.2f}")
        color = colors[k % len(colors)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 16 + 16 * k}" text-anchor="end" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _cmd_gen(args) -> int:
    out = Path(args.out)
    _write_manifest(out, "gen", args)
    for k in range(args.count):
        inst = generate_instance(args.n, args.seed + k)
        save_instance(inst, out / f"{inst.instance_id}.sk")
    return 0


def _parse_tau(text: str):
    if text == "optimize":
        return ("optimize",)
    if text.startswith("fixed:"):
        return ("fixed", float(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(f"--tau must be 'optimize' or 'fixed:<value>', got {text!r}")


def _cmd_gap(args) -> int:
    out = Path(args.out)
    _write_manifest(out, "gap", args)
    inst = load_instance(args.instance)
    energies = all_energies(inst)
    target = build_target(inst, args.temp, energies)
    tau_star = np.nan
    if args.kernel == "local":
        kernel = local_kernel()
    elif args.kernel == "uniform":
        kernel = uniform_kernel()
    else:
        if args.tau[0] == "fixed":
            tau_star = args.tau[1]
        else:
            scan = optimize_tau(inst, target, energies=energies)
            tau_star = scan.tau_star
            with open(out / "tau_scan.csv", "w") as fh:
                fh.write("tau,gap\n")
                for tau, gap in scan.table:
                    fh.write(f"{tau!r},{gap!r}\n")
        state = evolve(inst, AnnealSpec(tau=tau_star), energies=energies)
        kernel = qa_kernel(born_distribution(state))
    tm = build_transition_matrix(target, kernel)
    report = report_with_bounds(spectral_gap(tm, target), target, epsilon=args.eps)
    line = (
        f"kernel={args.kernel} T={args.temp} n={inst.n} gap={report.gap!r} "
        f"lambda2={report.second_eigenvalue_magnitude!r} "
        f"mix_lower={report.mixing_lower!r} mix_upper={report.mixing_upper!r}"
    )
    print(line)
    with open(out / "report.csv", "w") as fh:
        fh.write("kernel,temperature,n,gap,lambda2,mix_lower,mix_upper\n")
        fh.write(
            f"{args.kernel},{args.temp!r},{inst.n},{report.gap!r},"
            f"{report.second_eigenvalue_magnitude!r},{report.mixing_lower!r},{report.mixing_upper!r}\n"
        )
    return 0


def _cmd_run(args) -> int:
    from .chain import (
        energy_gap_cumulative,
        hamming_cumulative,
        log_checkpoints,
        make_rng,
        run_chain,
        tv_distance,
    )
    from .gibbs import exact_mean_energy

    out = Path(args.out)
    _write_manifest(out, "run", args)
    inst = load_instance(args.instance)
    energies = all_energies(inst)
    target = build_target(inst, args.temp, energies)
    e_exact = exact_mean_energy(target, energies)
    if args.kernel == "local":
        kernel = local_kernel()
    elif args.kernel == "uniform":
        kernel = uniform_kernel()
    else:
        if args.tau[0] == "fixed":
            tau_star = args.tau[1]
        else:
            tau_star = optimize_tau(inst, target, energies=energies).tau_star
        state = evolve(inst, AnnealSpec(tau=tau_star), energies=energies)
        kernel = qa_kernel(born_distribution(state))
    checkpoints = log_checkpoints(args.steps)
    conv_rows = []
    ham_all = np.zeros(inst.n + 1)
    de_all = []
    acc = []
    mean_err = np.zeros(args.steps)
    for r in range(args.replicas):
        rng = make_rng(args.seed, inst.n, r)
        init = int(rng.integers(1 << inst.n))
        trace = run_chain(inst, target, kernel, args.steps, init, rng, seed_label=f"r{r}")
        running = np.cumsum(energies[trace.states]) / np.arange(1, args.steps + 1)
        err = np.abs(running - e_exact)
        mean_err += err / args.replicas
        for t in checkpoints:
            emp = np.bincount(trace.states[:t], minlength=target.num_states) / t
            conv_rows.append((r, int(t), running[t - 1], err[t - 1], tv_distance(emp, target.probs)))
        _, pc = hamming_cumulative(trace, inst.n)
        ham_all += pc
        sup, _ = energy_gap_cumulative(trace, energies)
        de_all.append(sup)
        acc.append(trace.acceptance_rate)
    with open(out / "convergence.csv", "w") as fh:
        fh.write("replica,step,energy_running_mean,abs_error,tv\n")
        for row in conv_rows:
            fh.write(f"{row[0]},{row[1]},{row[2]!r},{row[3]!r},{row[4]!r}\n")
    with open(out / "hamming_cum.csv", "w") as fh:
        fh.write("d,p_cum\n")
        for d, p in enumerate(ham_all / args.replicas):
            fh.write(f"{d},{p!r}\n")
    de_sup = np.sort(np.concatenate(de_all))
    de_cdf = np.arange(1, len(de_sup) + 1) / len(de_sup)
    stride = max(1, len(de_sup) // 2000)
    with open(out / "energy_gap_cum.csv", "w") as fh:
        fh.write("delta_e,p_cum\n")
        for v, p in zip(de_sup[::stride], de_cdf[::stride]):
            fh.write(f"{v!r},{p!r}\n")
    with open(out / "acceptance.csv", "w") as fh:
        fh.write("replica,acceptance_rate\n")
        for r, a in enumerate(acc):
            fh.write(f"{r},{a!r}\n")
    if args.plot:
        _write_svg(
            out / "abs_error.svg",
            [(args.kernel, np.arange(1, args.steps + 1), mean_err)],
            "running-mean energy error", "step", "|mean - exact|", log_x=True, log_y=True,
        )
    return 0


def parse_sweep_config(path) -> EnsembleConfig:
    """Flat key=value text mirroring EnsembleConfig fields; lists are comma-separated."""
    kwargs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            try:
                if key in ("n_values",):
                    kwargs[key] = tuple(int(v) for v in val.split(","))
                elif key == "temperatures":
                    kwargs[key] = tuple(float(v) for v in val.split(","))
                elif key == "kernels":
                    kwargs[key] = tuple(v.strip() for v in val.split(","))
                elif key in ("instances_per_point", "chain_steps", "chain_replicas",
                             "master_seed", "tau_points_per_decade", "tau_budget"):
                    kwargs[key] = int(val)
                elif key in ("high_t_threshold", "tau_fixed_high_t", "tau_min",
                             "tau_max_low_t", "tau_max_mid_t", "dt_max"):
                    kwargs[key] = float(val)
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return EnsembleConfig(**kwargs)


def _cmd_sweep(args) -> int:
    out = Path(args.out)
    _write_manifest(out, "sweep", args)
    config = parse_sweep_config(args.config)
    gap_rows = run_gap_sweep(config)
    write_gap_csv(gap_rows, out / "gap_sweep.csv")
    write_tau_hist_csv(gap_rows, out / "tau_hist.csv")
    points = run_convergence_sweep(config)
    write_convergence_csv(points, out / "convergence.csv")
    fits = []
    if len(config.n_values) >= 3:
        for kind in config.kernels:
            for temperature in config.temperatures:
                pts = []
                for n in config.n_values:
                    gaps = [r["gap"] for r in gap_rows if r["kernel"] == kind and r["n"] == n and r["T"] == temperature]
                    pts.append((n, float(np.mean(gaps))))
                fits.append((kind, fit_power_law(pts, "gap_vs_n")))
    write_fits_csv(fits, out / "fits.csv")
    return 0


def _cmd_fit(args) -> int:
    rows = []
    with open(args.infile) as fh:
        header = fh.readline().strip().split(",")
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise ValueError(f"{args.infile}: row {lineno}: expected {len(header)} columns, got {len(parts)}")
            rows.append(dict(zip(header, parts)))
    if args.model == "gap_vs_n":
        xcol, ycol = "n", "gap"
    elif args.model == "tv_vs_steps":
        xcol, ycol = "checkpoint", "tv"
    else:
        xcol, ycol = "n", "tv"
    fits = []
    kernels = sorted({r["kernel"] for r in rows})
    for kind in kernels:
        grouped = {}
        for r in rows:
            if r["kernel"] != kind:
                continue
            grouped.setdefault(float(r[xcol]), []).append(float(r[ycol]))
        pts = [(x, float(np.mean(ys))) for x, ys in sorted(grouped.items())]
        fits.append((kind, fit_power_law(pts, args.model)))
    write_fits_csv(fits, args.outfile)
    for kind, fit in fits:
        print(f"{fit.model} kernel={kind} exponent={fit.exponent!r} std_error={fit.std_error!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaemcmc", description="QA-enhanced MCMC benchmark on the SK model")
    parser.add_argument("--threads", type=int, default=int(os.environ.get("QAMC_THREADS", "1")),
                        help="worker-pool cap (QAMC_THREADS env var as fallback)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate SK instance files")
    p.add_argument("--n", type=int, required=True, help=f"spin count in [{MIN_SPINS}, {MAX_SPINS}]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("gap", help="spectral gap and mixing bounds for one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--temp", type=float, required=True)
    p.add_argument("--kernel", choices=("local", "uniform", "qa"), required=True)
    p.add_argument("--tau", type=_parse_tau, default=("optimize",))
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("run", help="run M-H chains and emit convergence/diagnostic CSVs")
    p.add_argument("--instance", required=True)
    p.add_argument("--temp", type=float, required=True)
    p.add_argument("--kernel", choices=("local", "uniform", "qa"), required=True)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--replicas", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=_parse_tau, default=("optimize",))
    p.add_argument("--plot", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run an ensemble sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fit", help="fit scaling exponents from sweep CSVs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", choices=FIT_MODELS, required=True)
    p.add_argument("--out", dest="outfile", default="fits.csv")
    p.set_defaults(func=_cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failures exit 1; argparse handles usage as 2
        print(f"qaemcmc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

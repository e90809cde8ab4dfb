#!/usr/bin/env python3
"""Second-order vs first-order Q-learning on coverage, paired seeds.

Both learners run model-free on the true sensed payoffs with identical
constraints, budgets, and seeds; only the update rule differs.
"""
import argparse
from pathlib import Path

from potlearn.harness import ExperimentConfig, sweep, sweep_csv, sweep_svg

COMPONENTS = (
    {"weight": 0.4, "mean": [4.0, 4.0], "cov": [[1.5, 0.0], [0.0, 1.5]]},
    {"weight": 0.35, "mean": [15.0, 6.0], "cov": [[1.3, 0.0], [0.0, 1.3]]},
    {"weight": 0.25, "mean": [8.0, 16.0], "cov": [[1.6, 0.0], [0.0, 1.6]]},
)


def config(algorithm, seeds, iterations):
    return ExperimentConfig(
        algorithm=algorithm,
        grid_size=20,
        robots=5,
        iterations=iterations,
        aggregation_step=0.97,
        selection_step=0.5,
        perturbation_size=0.01,
        commitment_threshold=0.9999,
        scenario_components=COMPONENTS,
        steady_window=500,
        steady_tol=1e-6,
        seeds=tuple(seeds),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=8000)
    parser.add_argument("--out-dir", default="out/qlearning")
    args = parser.parse_args()

    seeds = range(args.seeds)
    report = sweep(
        [config("soql", seeds, args.iterations), config("ql", seeds, args.iterations)],
        labels=["second-order", "first-order"],
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "band.csv").write_text(sweep_csv(report))
    (out / "band.svg").write_text(sweep_svg(report, title="covered worth, paired restarts"))

    soql = [c.record for c in report.cells if c.config_index == 0]
    ql = [c.record for c in report.cells if c.config_index == 1]
    wins = 0
    for a, b in zip(soql, ql):
        mark = ">=" if a.final_covered() >= b.final_covered() else "< "
        wins += a.final_covered() >= b.final_covered()
        print(
            f"seed {a.seed}: second-order {a.final_covered():.4f} {mark} "
            f"first-order {b.final_covered():.4f}"
        )
    print(f"second-order wins {wins}/{len(soql)} pairs")
    print(f"wrote {out / 'band.csv'} and {out / 'band.svg'}")


if __name__ == "__main__":
    main()

"""
Replicate study behind the stochastic test bands:

  [1] H0 band: fraction of all-normal invariance runs whose rejection count stays
      within rejection_limit(alpha, P).
  [2] k-statistic bands: fraction of normal replicates with |k3| <= 4*sqrt(6/n)
      and |k4| <= 4*sqrt(24/n).
  [3] Power: centred-exponential runs must reject the (0, pi/4) pair with p < 1e-3.

Usage: python scripts/pilot_bands.py [--replicates 100] [--n 100000] [--seed 0]
"""
import os
import sys
from math import pi, sqrt

import typer  # type: ignore

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from engine.estimation import generate, invariance_test, k_statistics  # noqa: E402
from engine.generators import GeneratorSpec, SideSpec  # noqa: E402

GRID = [k * pi / 8 for k in range(5)]


def pilot(
    replicates: int = typer.Option(100, "--replicates", "-r"),
    n: int = typer.Option(100_000, "--n"),
    seed: int = typer.Option(0, "--seed"),
    alpha: float = typer.Option(0.05, "--alpha"),
):
    print("--- normchar pilot: stochastic band certification ---")
    failed = False

    print(f"\n[1] H0 rejection band ({replicates} replicates, n={n})...")
    normal = SideSpec(s=GeneratorSpec(name="normal"))
    inside = 0
    counts = []
    for r in range(replicates):
        report = invariance_test(normal, normal, 1.0, GRID, n, seed + r, alpha=alpha)
        counts.append(report.rejections)
        inside += report.within_band
    limit = report.rejection_limit
    print(f"Rejections per run: mean {sum(counts) / len(counts):.2f}, max {max(counts)} (limit {limit})")
    if inside >= 0.99 * replicates:
        print(f"✅ {inside}/{replicates} runs within the band.")
    else:
        print(f"❌ Only {inside}/{replicates} runs within the band.")
        failed = True

    print(f"\n[2] k-statistic bands ({replicates} replicates, n={n})...")
    k3_band, k4_band = 4 * sqrt(6 / n), 4 * sqrt(24 / n)
    hits = 0
    for r in range(replicates):
        values = generate(GeneratorSpec(name="normal"), n, seed=seed + r).column("X")
        _, k2, k3, k4 = k_statistics(values, 4)
        hits += abs(k3 / k2 ** 1.5) <= k3_band and abs(k4 / k2 ** 2) <= k4_band
    if hits >= 0.95 * replicates:
        print(f"✅ {hits}/{replicates} replicates inside ±{k3_band:.4f} / ±{k4_band:.4f}.")
    else:
        print(f"❌ {hits}/{replicates} replicates inside the bands (need 95%).")
        failed = True

    print("\n[3] Power against centred exponential S...")
    expo = SideSpec(s=GeneratorSpec(name="exponential_centered"))
    report = invariance_test(expo, expo, 1.0, GRID, n, seed, alpha=alpha)
    p = report.pair(0.0, pi / 4).p_value
    if p < 1e-3:
        print(f"✅ (0, π/4) rejected, p = {p:.3g}.")
    else:
        print(f"❌ (0, π/4) not rejected, p = {p:.3g}.")
        failed = True

    raise typer.Exit(1 if failed else 0)


if __name__ == "__main__":
    typer.run(pilot)

#!/usr/bin/env python3
"""Plot aggregate I/N and active-station count against the zone radius for
clear and rainy weather, with the per-weather threshold lines.

Runs the sweeps in-process (no CLI round trip) and writes two PNGs.

Usage: python3 scripts/plot_sweep.py [--scenario fixtures/blacksburg_synth]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from coexsim.policy import load_policy
from coexsim.runner import ExperimentRequest, run_experiment
from coexsim.scenario import load_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="fixtures/blacksburg_synth")
    parser.add_argument("--policy", default="fixtures/policies/default_12ghz.yaml")
    parser.add_argument("--out", default="out/plots")
    args = parser.parse_args()

    scenario = load_scenario(args.scenario)
    policy = load_policy(args.policy)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    sweeps = {}
    for weather in ("clear", "rainy"):
        record = run_experiment(
            scenario, policy, ExperimentRequest(mode="ez_sweep", weather=weather)
        )
        sweeps[weather] = record.sweep

    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = {"clear": "tab:orange", "rainy": "tab:blue"}
    thresholds = {"clear": -8.5, "rainy": -12.0}
    for weather, rows in sweeps.items():
        radii = [r.ez_radius_m for r in rows]
        aggs = [r.aggregate_in_db for r in rows]
        ax.plot(radii, aggs, "o-", color=colors[weather], label=f"{weather} aggregate I/N")
        ax.axhline(
            thresholds[weather], color=colors[weather], linestyle="--", linewidth=1,
            label=f"{weather} threshold {thresholds[weather]} dB",
        )
    ax.set_xlabel("exclusion zone radius (m)")
    ax.set_ylabel("aggregate I/N (dB)")
    ax.set_title(f"Aggregate I/N vs zone radius: {scenario.name}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "aggregate_vs_radius.png", dpi=150)

    fig2, ax2 = plt.subplots(figsize=(7, 4.5))
    rows = sweeps["clear"]
    ax2.bar([r.ez_radius_m for r in rows], [r.active_count for r in rows], width=380)
    ax2.set_xlabel("exclusion zone radius (m)")
    ax2.set_ylabel("active stations")
    ax2.set_title(f"Active stations vs zone radius: {scenario.name}")
    ax2.grid(alpha=0.3, axis="y")
    fig2.tight_layout()
    fig2.savefig(out_dir / "active_vs_radius.png", dpi=150)

    print(f"wrote {out_dir}/aggregate_vs_radius.png and active_vs_radius.png")


if __name__ == "__main__":
    main()

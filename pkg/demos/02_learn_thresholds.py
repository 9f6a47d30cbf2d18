"""Learn separation thresholds from pooled kinematics by gradient descent.

The objective J is the sum of squared differences between the partitions'
mean pairwise distances; it is piecewise constant in the thresholds, so the
gradient is estimated with wide central differences and the iterate is
projected back onto the ordered-threshold region after every step.

Run:  python demos/02_learn_thresholds.py
"""

import numpy as np

from tap import (
    DOMAIN_THRESHOLDS,
    OptimizerConfig,
    ScriptMix,
    build_distributions,
    combined_thresholds,
    generate_corpus,
    objective,
    optimize_all,
)
from tap.report import convergence_plot_svg

print("=" * 64)
print(" 1. Pool 1-second channel averages over a 300-vehicle corpus")
print("=" * 64)

corpus, _ = generate_corpus(
    300,
    ScriptMix(merge_fraction=0.02, stop_fraction=0.15, turn_fraction=0.35,
              noise_omega=0.003, noise_a=0.1, noise_v=0.05),
    thresholds=DOMAIN_THRESHOLDS,
    seed=2,
)
distributions = build_distributions(corpus)
for channel in ("omega", "a", "v"):
    samples = distributions.channel(channel)
    print(f"  d_{channel}: {samples.size} window means, "
          f"range [{samples.min():+.3f}, {samples.max():+.3f}]")

print()
print("=" * 64)
print(" 2. Descend each channel independently from five seeds")
print("=" * 64)

config = OptimizerConfig(n_seeds=5)
traces = optimize_all(distributions, config)
for channel, trace in traces.items():
    best = trace.best
    values = ", ".join(f"{v:.4g}" for v in best.final_thresholds.channel_values(channel))
    print(f"  {channel:5s}  J* = {best.j_final:10.6g}   thresholds = [{values}]"
          f"   ({best.epochs_used} epochs, converged={best.converged})")

learned = combined_thresholds(traces)

print()
print("=" * 64)
print(" 3. Per-epoch objective for the winning seeds")
print("=" * 64)
for channel, trace in traces.items():
    js = [rec.j for rec in trace.best.history]
    head = ", ".join(f"{j:.4g}" for j in js[:6])
    print(f"  {channel:5s}  J: {head}{' ...' if len(js) > 6 else ''}")

with open("threshold_convergence.svg", "w", encoding="utf-8") as fh:
    fh.write(convergence_plot_svg(traces))
print("\nwrote threshold_convergence.svg")

print()
print("=" * 64)
print(" 4. Sanity: learned thresholds score at least as well as the")
print("    generating ones on the pooled data")
print("=" * 64)
for channel in ("omega", "a", "v"):
    j_learned = objective(distributions, channel, learned)
    j_domain = objective(distributions, channel, DOMAIN_THRESHOLDS)
    print(f"  {channel:5s}  J(learned) = {j_learned:10.6g}   J(generating) = {j_domain:10.6g}")

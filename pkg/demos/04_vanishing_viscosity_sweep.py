"""The default vanishing-viscosity sweep on a rough datum (about half a minute)."""

import sys

from vortexlab import default_sweep_config, run_sweep

out = sys.argv[1] if len(sys.argv) > 1 else None
report = run_sweep(default_sweep_config(workers=4, output_dir=out, persist_trajectories=False))
print("status:", report.status, "| violations:", len(report.violations), "| dt:", report.provenance["dt"])

print("\nvelocity Cauchy table, L^1.5 space-time norm on the ball")
for row in report.table("velocity_cauchy"):
    print(f"  {row['nu_coarse']:<6g} -> {row['nu_fine']:<6g}  {row['distance']:.4f}")
print(f"  fitted rate in nu: {report.cauchy_rate:.3f}")

print("\nterminal local L^1 distance between the viscous vorticity and its frozen-velocity transport")
last = {}
for row in report.table("step4_distances"):
    last[row["nu"]] = row["l1_distance"]
for nu, d in last.items():
    print(f"  nu = {nu:<6g} {d:.4f}")

print("\ngrowth ratio max |u| / (1 + |x|) per run")
for row in report.table("growth_ratios"):
    print(f"  nu = {row['nu']:<6g} {row['max_growth_ratio']:.3f}   velocity bound {row['max_velocity_bound']:.3f}")

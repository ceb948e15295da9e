"""Evolution of a sech pulse under fractional diffusion-dispersion.

The source-free benchmark starts from sech(x1) sech(x2) exp(i(x1+x2)) on
(-10, 10)^2, with different fractional orders per direction (1.2 and 1.8).
The splitting integrator composes the exact nonlinear flow with the exact
linear propagator.  Snapshots of |u| are written as plot-ready CSV files
(columns x1, x2, abs_u), the data behind level-curve figures.
"""

import os

import numpy as np

import fcgl
from fcgl import tensorops

N = 200
OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

problem = fcgl.example2_setup(2, N)
config = fcgl.RunConfig(scheme="strang", steps=100,
                        snapshot_times=(0.0, 0.25, 0.5, 1.0))
result = fcgl.run(problem, config)

print(f"strang splitting, n = {N}, 100 steps: "
      f"precompute {result.precompute_seconds:.2f} s, loop {result.loop_seconds:.2f} s")
axes = problem.axes
for t, state in result.snapshots:
    mags = np.abs(state)
    path = os.path.join(OUT, f"pulse_t{t:g}.csv")
    tensorops.write_abs_csv(path, state, axes=axes)
    print(f"t = {t:5.2f}: max|u| = {mags.max():.4f}, "
          f"discrete L2 norm = {fcgl.discrete_l2(state, problem.steps):.4f}  -> {path}")

print("\nThe cubic dissipation and the fractional diffusion overcome the"
      "\nlinear gain: the pulse flattens and spreads as it evolves, and it"
      "\ndoes so anisotropically because the two directions carry different"
      "\nfractional orders (1.2 and 1.8).")

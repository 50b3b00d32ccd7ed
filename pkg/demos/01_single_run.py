"""A single optimization run, start to finish.

Runs vanilla BO and CMA-ES on the same 5-D problem with the default budget
(10*D + 50 evaluations) and prints how the best-so-far gap shrinks.

    python3 demos/01_single_run.py
"""

# %%
import numpy as np

from hdbo.registry import dispatch
from hdbo.runs import RunConfig
from hdbo.testbed import make_problem

problem = make_problem(fid=8, dim=5, instance_id=0)  # Rosenbrock, shifted and scaled
print(f"f{problem.fid} in {problem.dim}-D, f_opt = {problem.f_opt:.3f}, budget {10 * problem.dim + 50}")

# %%
# Observers see every evaluation as it happens; the archive holds all of them at the end.
curves = {}
for name in ("bo", "cmaes"):
    gaps = []
    arch = dispatch(name, RunConfig(problem, seed=7), observer=lambda ev: gaps.append(ev.y - problem.f_opt))
    curves[name] = np.minimum.accumulate(gaps)
    print(f"{name:6s} final gap {arch.best_y - problem.f_opt:10.4g} after {len(arch)} evaluations")

# %%
for checkpoint in (5, 25, 50, 100):
    row = "  ".join(f"{name}={curve[checkpoint - 1]:9.4g}" for name, curve in curves.items())
    print(f"eval {checkpoint:3d}: {row}")

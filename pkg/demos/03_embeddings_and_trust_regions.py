"""Inside the high-dimensional methods: weighted PCA maps and TuRBO trust regions."""

# %%
import numpy as np

from hdbo.doe import latin_hypercube
from hdbo.embedding import EmbeddingConfig, compute_weights, fit_forward_map, map_back, map_forward
from hdbo.testbed import evaluate_batch, make_problem

problem = make_problem(fid=2, dim=10, instance_id=0)  # separable ellipsoid
X = latin_hypercube(40, 10, (-5.0, 5.0), seed=1).points
y = evaluate_batch(problem, X)

# Better points get larger weights, so the principal directions follow the good region.
w = compute_weights(y)
lin = fit_forward_map(X, w)
print(f"linear PCA keeps {lin.k} of 10 directions")
# Mapping back lands on the retained subspace, so the round trip drops the discarded directions.
x = X[np.argmin(y)]
z = map_forward(lin, x)
print("best point in the reduced space:", np.round(z, 2))
print("distance lost in the round trip:", round(float(np.linalg.norm(map_back(lin, z) - x)), 3))

# %%
kpca = EmbeddingConfig(kind="kpca")
kmap = fit_forward_map(X, w, kpca)
print(f"kernel PCA keeps {kmap.k} components, RBF gamma = {kmap.gamma:.3g}")

# %%
# Trust-region bookkeeping: three wins double the side, `failtol` losses halve it.
from hdbo.turbo import TurboConfig, fresh_state, update_state

cfg = TurboConfig.turbo1(10)
state = fresh_state(cfg)
for improved in [True] * 3 + [False] * 8:
    state = update_state(state, improved, cfg)
    print(f"improved={improved!s:5}  length={state.length:.4f}  restart={state.restart_pending}")

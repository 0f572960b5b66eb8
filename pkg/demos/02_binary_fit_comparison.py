"""Simulate binary spatial data and compare the four model fits.

Small desk-scale version of the binary simulation design: a 15x15 lattice,
true effects on the leading 60 Moran eigenvectors, tau = 1, beta = (1, 1)'.
Fits the nonspatial GLM, the traditional intrinsic-CAR model, the RHZ
model, and the sparse model with q = 30, then prints a results table with
interval widths and fitted-surface error norms.
"""

import os
import time

import numpy as np

from sglmm import (
    Dataset,
    McmcConfig,
    ModelSpec,
    error_norm,
    fit,
    fitted_surface,
    inverse_link,
    irls_fit,
    laplacian,
    moran_basis,
    rhz_basis,
    simulate_dataset,
    summarize_chain,
)
from sglmm.io import write_table

OUT = os.path.join(os.path.dirname(__file__), "demo_output")
os.makedirs(OUT, exist_ok=True)

sim = simulate_dataset(seed=314, rows=15, cols=15, q=60, tau=1.0, family="bernoulli")
data = Dataset(X=sim.X, Z=sim.Z)
print(f"simulated {sim.graph.n} Bernoulli observations, true q = 60, tau = 1")

rows = []

t0 = time.time()
glm = irls_fit("bernoulli", sim.X, sim.Z)
p_glm = inverse_link("bernoulli", sim.X.X @ glm.beta_hat)
se = np.sqrt(np.diag(glm.cov_hat))
rows.append(
    (
        "nonspatial",
        "-",
        f"{glm.beta_hat[0]:.3f} ({glm.beta_hat[0]-1.96*se[0]:.2f}, {glm.beta_hat[0]+1.96*se[0]:.2f})",
        error_norm(p_glm, sim.surface),
        time.time() - t0,
    )
)

# burn-in is generous: from the cold start (effects 0, tau 1) the sparse
# and traditional chains take tens of thousands of iterations to find
# their smoothing regime
cfg = McmcConfig(iterations=90_000, burn_in=40_000, thin=10, seed=2718)
fits = (
    ("traditional", ModelSpec("bernoulli", "traditional"), laplacian(sim.graph)),
    ("rhz", ModelSpec("bernoulli", "rhz"), rhz_basis(sim.X, sim.graph)),
    ("sparse q=30", ModelSpec("bernoulli", "sparse", q=30), moran_basis(sim.X, sim.graph, q=30)),
)
for label, spec, basis in fits:
    t0 = time.time()
    chain = fit(spec, data, basis, cfg)
    secs = time.time() - t0
    s = summarize_chain(chain, include_effects=False).params["beta.x"]
    dim = chain.draws["effects"].shape[1]
    p_hat = fitted_surface(chain, spec, sim.X, basis)
    rows.append(
        (label, str(dim), f"{s.mean:.3f} ({s.eqt_lo:.2f}, {s.eqt_hi:.2f})",
         error_norm(p_hat, sim.surface), secs)
    )
    print(f"fit {label}: {secs:.1f}s, acceptance {chain.acceptance_rates}")

print(f"\n{'model':<14}{'dim':>5}  {'beta_x (95% CI)':<28}{'|p-p_hat|':>10}{'secs':>8}")
for label, dim, ci, err, secs in rows:
    print(f"{label:<14}{dim:>5}  {ci:<28}{err:>10.3f}{secs:>8.1f}")

write_table(
    os.path.join(OUT, "binary_truth_vs_sparse.csv"),
    ["x", "y", "true_p"],
    {"x": sim.X.X[:, 0], "y": sim.X.X[:, 1], "true_p": sim.surface},
)
print("\nwrote binary_truth_vs_sparse.csv")
print("note the traditional fit: its implicit predictors are collinear with")
print("the design, so beta is dragged away from the truth while rhz and")
print("sparse agree with each other; at larger scales the same confounding")
print("also inflates the traditional interval severalfold.")

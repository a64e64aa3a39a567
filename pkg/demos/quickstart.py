"""Generate an overlapping mixture, punch holes in it, cluster it three ways.

Run from the repository root:

    python3 demos/quickstart.py
"""

from kmahal import (
    EngineConfig,
    ImputationConfig,
    MissingnessPlan,
    MixtureSpec,
    adjusted_rand_index,
    fit,
    generate_mixture,
    impute,
    inject_missing,
)

spec = MixtureSpec(n_clusters=3, n_coords=4, n_rows=300, target_overlap=0.01, seed=42)
complete, info = generate_mixture(spec, return_info=True)
print(f"generated {complete.n} rows in {spec.n_clusters} clusters "
      f"(achieved overlap {info.achieved_overlap:.4g})")

# Mask 30% of the first coordinate, then fill the holes by KNN for the
# engines that want a starting matrix.
plan = MissingnessPlan(coords=(1,), d_percent=30.0)
incomplete = inject_missing(complete, plan, seed=7)
filled = impute(incomplete, ImputationConfig(method="knn"))
print(f"masked {incomplete.n_missing_cells} cells in coordinate 1")

for algorithm in ("kmeans", "unified-kmeans", "kmahal"):
    cfg = EngineConfig(algorithm=algorithm, n_clusters=3, restarts=10, seed=0)
    ds = filled if algorithm == "kmeans" else incomplete
    result = fit(ds, cfg, initial_fill=None if algorithm == "kmeans" else filled)
    ari = adjusted_rand_index(result.assignment.assignment, complete.labels)
    print(f"  {algorithm:16s} ARI {ari:.3f}  "
          f"({result.iterations} iterations, converged={result.converged})")

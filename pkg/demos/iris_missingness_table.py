"""Median-ARI table on the bundled iris data under growing missingness.

Masks the third coordinate (petal length) at d = 10..50 percent, fills by
KNN, and reports the median adjusted Rand index of each engine over 25
replicates with 10 restarts each. A fuller 100-replicate version of the
same table is what the acceptance tests check; 25 keeps this demo fast.

    python3 demos/iris_missingness_table.py
"""

from kmahal import ExperimentConfig, MissingnessPlan, run_experiment, summarize

cfg = ExperimentConfig(
    dataset="iris",
    plans=tuple(MissingnessPlan(coords=(3,), d_percent=float(d)) for d in (10, 20, 30, 40, 50)),
    imputations=("knn",),
    algorithms=("kmeans", "unified-kmeans", "kmahal"),
    replicates=25,
    restarts=10,
    base_seed=0,
)
rows = summarize(run_experiment(cfg))

algorithms = ("kmeans", "unified-kmeans", "kmahal")
cells = {(int(r.d_percent), r.algorithm): r for r in rows}
print(f"{'d%':>4s}  " + "".join(f"{a:>18s}" for a in algorithms))
for d in (10, 20, 30, 40, 50):
    line = f"{d:>4d}  "
    for a in algorithms:
        row = cells[(d, a)]
        line += f"{row.median_ari:>10.3f} ({row.iqr_ari:.3f})"
    print(line)
print("\nmedian ARI (IQR) over "
      f"{cfg.replicates} replicates, {cfg.restarts} restarts each")

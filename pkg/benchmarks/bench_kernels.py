"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the split search, forest scoring and a small end-to-end training run
under each backend, checks that both backends return identical results, and
prints one table row per workload.
"""
import argparse
import time

import numpy as np

from rashomon_detect import kernels
from rashomon_detect.learners import train
from rashomon_detect.profiles import make_grid, pdp
from rashomon_detect.synthetic import load_hlh_like


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def workloads():
    rng = np.random.default_rng(0)
    Xn = rng.normal(size=(2000, 13))
    y = (rng.uniform(size=2000) < 0.4).astype(float)
    w = np.ones(2000)
    data = load_hlh_like()
    forest = train("random_forest", {"n_trees": 200}, data, seed=0)
    big = np.repeat(data.rows, 20, axis=0)
    grid = make_grid(data.variables[0], 101)
    return {
        "best_split 2000x13": lambda: kernels.best_split(Xn, y, w, 1),
        "forest predict 200 trees x 2020 rows": lambda: forest.predict(big),
        "forest PDP m=101": lambda: pdp(forest, data, grid).values,
        "train gbm 100 trees": lambda: train("gradient_boosting", {"n_trees": 100}, data, seed=0).predict(data.rows),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.compiled_available():
        raise SystemExit("compiled extension not built; run `python3 setup.py build_ext --inplace` first")

    results = {}
    for backend in ("cython", "python"):
        kernels.use_backend(backend)
        for name, fn in workloads().items():
            results[(backend, name)] = best_of(fn, args.repeat)

    print(f"{'workload':40s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  identical")
    for name in workloads():
        (tc, oc), (tp, op) = results[("cython", name)], results[("python", name)]
        same = oc == op if isinstance(oc, tuple) else np.array_equal(oc, op)
        print(f"{name:40s} {tc:10.4f} {tp:10.4f} {tp / tc:7.1f}x  {same}")


if __name__ == "__main__":
    main()

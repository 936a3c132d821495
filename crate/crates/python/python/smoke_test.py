"""Smoke test for the sparsemm_py extension module.

Build the extension and put it on the path first, for example:

    PYO3_BUILD_EXTENSION_MODULE=1 cargo build --release -p sparsemm-py
    cp target/release/libsparsemm_py.so crates/python/python/sparsemm_py.so
    python3 crates/python/python/smoke_test.py
"""

import math

import sparsemm_py as sm


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    scad = sm.Penalty("scad", 1.0)
    close(scad.value(5.0), 4.7 / 2.0, 1e-12)
    close(scad.derivative(2.0), 1.7 / 2.7, 1e-12)
    try:
        scad.value(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative argument accepted")

    mix = sm.PosteriorMixture.from_observation(0.5, 1.0, 0.0, 1.0)
    close(mix.pi_y, math.sqrt(2) / (math.sqrt(2) + 1), 1e-12)
    assert mix.median()["median"] == 0.0

    mix = sm.PosteriorMixture(1 / 6, 1.0, 1.0)
    med = mix.median()
    assert med["branch"] == "positive"
    close(med["median"], 0.746652896864, 1e-11)
    close(mix.median_oracle(), med["median"], 1e-9)
    close(sm.median_location_scale(1.0, 1.0, med["odds"], med["delta"]), med["median"], 1e-10)

    est = sm.threshold_vector(0.9, 1.0, [0.0, 10.0, -10.0], 1.0)
    assert est[0] == 0.0 and est[1] > 0 and est[2] < 0

    xs = [[1.0, (i * 7 % 11) / 5.0 - 1.0] for i in range(20)]
    for i, row in enumerate(xs):
        row[0] = (i - 9.5) / 5.0
    y = [2.0 * row[0] for row in xs]
    out = sm.fit(xs, y, penalty="scad", lam=0.05)
    assert out["converged"]
    close(out["beta"][0], 2.0, 1e-8)
    assert out["beta"][1] == 0.0
    trace = out["objective_trace"]
    assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))

    assert sm.emlift("l1", 1.0)["verdict"] == "EquivalentUpToConstant"
    assert sm.emlift("log", 0.8)["verdict"] == "EquivalentUpToConstant"
    assert sm.emlift("quadratic", 1.0)["verdict"] == "MgfInvalid"

    csv = sm.run_bench(
        """
replicates = 5
seed = 1
methods = ["scad-1step", "scad-full", "posterior-median"]
lambda_grid = 0.5
pi = 0.9
tau = 1.0
[scenario]
n_obs = 30
p = 5
beta_true = [2.0, 0.0, 1.0, 0.0, 0.0]
noise_sd = 1.0
design = "orthonormal"
"""
    )
    lines = csv.strip().splitlines()
    assert lines[0] == sm.BENCH_CSV_HEADER
    assert len(lines) == 4
    print("sparsemm_py smoke test passed")


if __name__ == "__main__":
    main()

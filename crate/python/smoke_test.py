"""Smoke test for the phasemax Python bindings.

Build and install the extension first:

    pip install --no-build-isolation -e crates/python

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys
import tempfile

import phasemax_py as pm


def check(cond, what):
    if not cond:
        sys.exit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    sources = pm.fixture("uncorrelated")
    check(len(sources) == 2 and len(sources[0]) == 1000, "fixture has 2 x 1000 samples")

    mixed = pm.mix(sources, [[1.3, 2.0], [1.0, 3.0]])
    sep = pm.separate(mixed)
    check(len(sep) == 2 and sep.method == "max", "maximum method returns two estimates")
    pairs = pm.associate(sources, sep.estimates)
    check(all(abs(rho) >= 0.999 for _, _, rho in pairs), "whitened estimates match the sources")

    raw = pm.separate(mixed, whiten="none")
    first = [abs(pm.pearson(raw.estimates[0], s)) for s in sources]
    check(min(first) > 0.1, "unwhitened first estimate mixes both sources")

    white, forward = pm.whiten(mixed, "gram-schmidt")
    gram = [[sum(a * b for a, b in zip(x, y)) for y in white] for x in white]
    check(all(math.isclose(gram[i][j], float(i == j), abs_tol=1e-9) for i in range(2) for j in range(2)),
          "Gram-Schmidt output is orthonormal")
    check(len(forward) == 2, "whitening transform is 2 x 2")

    p = pm.pca_separate(sources)
    check(p.eigenvalues[0] >= p.eigenvalues[1], "PCA eigenvalues descend")

    noisy = pm.add_noise(mixed, 0.001, seed=5)
    check(noisy == pm.add_noise(mixed, 0.001, seed=5), "noise is reproducible")
    centered = pm.center(noisy)
    check(all(abs(sum(ch)) < 1e-9 for ch in centered), "centering removes the mean")

    mc = pm.monte_carlo(
        'preset = "uncorrelated"\n'
        "[montecarlo]\nruns = 3\nseed = 1\nnoise_sd = [0.001]\n"
        '[[montecarlo.methods]]\nmethod = "max"\n'
        '[[montecarlo.methods]]\nmethod = "pca"\n'
    )
    check([label for label, _, _ in mc] == ["max-gram-schmidt", "pca"], "monte carlo labels")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "z.txt")
        with open(path, "w") as f:
            f.write("t a b\n0 1 2\n1 3 4\n2 5 7\n")
        channels, labels = pm.read_matrix_text(path, skip_columns=1)
        check(labels == ["a", "b"] and channels[1] == [2.0, 4.0, 7.0], "text table loads")
        try:
            pm.read_edf(path)
        except ValueError:
            print("ok: malformed EDF raises ValueError")
        else:
            sys.exit("FAIL: malformed EDF accepted")

    try:
        pm.separate([[0.0, 0.0], [0.0, 0.0]])
    except ValueError as e:
        print(f"ok: zero signal rejected ({e})")
    else:
        sys.exit("FAIL: zero signal accepted")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()

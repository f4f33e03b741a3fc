"""Compare the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--n 200] [--p 2000] [--reps 3]

Each kernel is run on identical copies of the inputs; the script reports the
best wall time per backend, the speed-up and the largest output difference.
"""
import argparse
import time

import numpy as np

from codashrink import _kernels as K


def _best(fn, make, reps):
    best = np.inf
    out = None
    for _ in range(reps):
        args = make()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
        out = args
    return best, out


def lasso_case(n, p, rng):
    X = rng.standard_normal((n, p))
    y = X[:, :10] @ rng.standard_normal(10) + rng.standard_normal(n)
    XT = np.ascontiguousarray(X.T)
    norm2 = (X * X).sum(0)
    pen = np.full(p, 0.1 * np.abs(XT @ y).max())

    def make():
        return XT, y.copy(), np.zeros(p), pen, norm2, 1e-9, 100000
    return make, 2  # index of beta in the args


def sgl_case(n, p, rng, G=20):
    X = rng.standard_normal((n, p))
    y = X[:, :10] @ rng.standard_normal(10) + rng.standard_normal(n)
    XT = np.ascontiguousarray(X.T)
    gptr = np.linspace(0, p, G + 1).astype(np.int64)
    wts = np.sqrt(np.diff(gptr).astype(float))
    lips = np.array([np.linalg.norm(XT[a:b], 2) ** 2 for a, b in zip(gptr[:-1], gptr[1:])])
    lam = 0.2 * np.abs(XT @ y).max()

    def make():
        return (XT, y.copy(), np.zeros(p), gptr, wts, 0.95 * lam, 0.05 * lam, lips,
                1e-8, 10000, 1e-10, 50000)
    return make, 2


def vb_case(n, p, rng):
    X = rng.standard_normal((n, p))
    y = X[:, :10] @ rng.standard_normal(10) + rng.standard_normal(n)
    XT = np.ascontiguousarray(X.T)
    norm2 = (X * X).sum(0)
    s2v, tau2 = 1.0, 0.25
    s2 = s2v / (norm2 + s2v / tau2)
    logit_q = np.full(p, np.log(0.01 / 0.99))
    order = np.arange(p, dtype=np.int64)

    def make():
        return (XT, y.copy(), np.full(p, 0.01), np.zeros(p), s2, logit_q, norm2, s2v, tau2,
                order)
    return make, 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    cases = [("cd_lasso", K.cd_lasso_np, K.cd_lasso_nb, lasso_case(args.n, args.p, rng)),
             ("sgl_bcd", K.sgl_bcd_np, K.sgl_bcd_nb, sgl_case(args.n, args.p, rng)),
             ("vb_sweep", K.vb_sweep_np, K.vb_sweep_nb, vb_case(args.n, args.p, rng))]
    print(f"n={args.n} p={args.p} reps={args.reps}")
    print(f"{'kernel':10s} {'numpy s':>10s} {'numba s':>10s} {'speed-up':>9s} {'max diff':>10s}")
    for name, f_np, f_nb, (make, k) in cases:
        f_nb(*make())  # compile outside the timing
        t_np, a_np = _best(f_np, make, args.reps)
        t_nb, a_nb = _best(f_nb, make, args.reps)
        diff = float(np.max(np.abs(a_np[k] - a_nb[k])))
        print(f"{name:10s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()

"""Time each hot kernel with numba and with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numpy column is what runs under KACLAB_DISABLE_NUMBA=1.  Each row also
reports the largest difference between the two outputs.
"""
import argparse
import time

import numpy as np

from kaclab import _accel, kernels
from kaclab.clt import DEFAULT_PLAN


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    p = DEFAULT_PLAN

    u = np.linspace(200.0, 400.0, 512)
    yield "log_conv_power (n=256, 512 u)", lambda f: kernels.log_conv_power_kernel(
        256, u, 0.05, angle=p.angle, growth=p.growth, tol=p.tail_tol,
        max_panels=p.max_panels, force=f)[0]

    L = 256
    r = np.linspace(0.05, 6.0, 128)
    ang = 2 * np.pi * np.arange(L) / L
    G = (kernels.logf_mixture(np.multiply.outer(r, np.cos(ang)), 0.1)
         + kernels.logf_mixture(np.multiply.outer(r, np.sin(ang)), 0.1))
    idx = np.arange(L)
    yield "angular_double_sum (128 x 256 x 256)", lambda f: kernels.angular_double_sum(
        G, np.exp(G), idx, idx, force=f)

    a, b = rng.standard_normal((2, 20000))
    th = 2 * np.pi * np.arange(128) / 128
    yield "rotated_logf_mean (20000 pairs)", lambda f: kernels.rotated_logf_mean(
        a, b, 0.1, th, force=f)

    N, steps = 64, 200000
    ii = rng.integers(0, N, steps)
    jj = (ii + 1 + rng.integers(0, N - 1, steps)) % N
    theta = rng.uniform(0, 2 * np.pi, steps)
    v0 = rng.standard_normal(N)
    yield "kac_rotations (N=64, 2e5 steps)", lambda f: kernels.kac_rotations(
        v0.copy(), ii, jj, theta, 1000, force=f)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba unavailable; only the numpy path can be timed")
    print(f"{'kernel':40s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        if _accel.HAVE_NUMBA:
            t_nb = best_of(lambda: fn("numba"), args.repeat)
            diff = float(np.max(np.abs(np.asarray(fn("numba")) - np.asarray(fn("numpy")))))
            print(f"{name:40s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")
        else:
            print(f"{name:40s} {'-':>10s} {t_np:10.4f} {'-':>8s} {'-':>10s}")


if __name__ == "__main__":
    main()

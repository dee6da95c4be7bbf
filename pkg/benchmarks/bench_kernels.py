"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--duration 0.005] [--repeat 3]

Times the photon-stream simulation and the pair-correlation histogram on
both backends, checks that they return identical results and prints the
speed-up.
"""
import argparse
import time

import numpy as np

from planar_antenna import kernels
from planar_antenna.photophysics import ThreeLevelRates, estimate_g2, simulate_trajectory


def best_of(repeat, fn):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=0.005, help="simulated seconds")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = sorted(kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled extension not built; only the Python kernels are available")

    rates = ThreeLevelRates(6.3e7, 1.26e8, 2e4, 1e5)
    sims, hists = {}, {}
    for name in backends:
        sims[name] = best_of(args.repeat, lambda: simulate_trajectory(rates, 1.0, args.duration, 42, name))
    stamps = sims[backends[0]][1].timestamps
    for name in backends:
        hists[name] = best_of(args.repeat, lambda: estimate_g2(stamps, 0.2e-9, 50e-9, backend=name))

    print(f"{stamps.size} photons, {args.duration} s simulated, best of {args.repeat}")
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + ("   speed-up" if len(backends) > 1 else ""))
    for label, table in (("simulate_chunk", sims), ("pair_histogram", hists)):
        row = f"{label:<22}" + "".join(f"{table[b][0]:>11.4f}s" for b in backends)
        if len(backends) > 1:
            row += f"   {table['python'][0] / table['compiled'][0]:>7.1f}x"
        print(row)
    if len(backends) > 1:
        same_sim = np.array_equal(sims["python"][1].timestamps, sims["compiled"][1].timestamps)
        same_hist = np.array_equal(hists["python"][1].counts, hists["compiled"][1].counts)
        print(f"identical results: simulation {same_sim}, histogram {same_hist}")


if __name__ == "__main__":
    main()

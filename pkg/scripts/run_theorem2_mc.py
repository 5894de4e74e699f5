"""Monte Carlo check that U is beta type I under Gaussian, Kotz and Pearson VII models."""

import argparse
import time

from ellbinom.experiments import Theorem2Suite, run_theorem2_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--verbose", action="store_true", help="print passing entries too")
    args = ap.parse_args()
    t0 = time.perf_counter()
    results = run_theorem2_suite(Theorem2Suite(N=args.N, seed=args.seed, threads=args.threads))
    n_tot = n_bad = 0
    for cfg, reports in results:
        bad = [r for r in reports if not r.passed]
        n_tot += len(reports)
        n_bad += len(bad)
        print(f"beta={cfg.beta} m={cfg.m} n1={cfg.n1} n2={cfg.n2}: {len(reports) - len(bad)}/{len(reports)} passed")
        for r in reports if args.verbose else bad:
            stat = f"p={r.p_value:.4f}" if r.p_value is not None else f"z={r.detail.get('z', float('nan')):.2f}"
            print(f"   {'ok  ' if r.passed else 'FAIL'} {r.statistic:<28} {r.generator:<60} {stat}")
    print(f"total {n_tot - n_bad}/{n_tot} passed in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()

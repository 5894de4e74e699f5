"""Experiment grids shared by ``scripts/`` and the acceptance tests."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .elliptical_mc import McReport, Theorem2Config, verify_theorem2
from .hgf import Theorem1Record, verify_theorem1
from .jack import get_table


@dataclass(frozen=True)
class Theorem1Grid:
    """beta x m x a x random spectra x generator families."""

    betas: tuple[int, ...] = (1, 2, 4, 8)
    ms: tuple[int, ...] = (1, 2, 3)
    a_offset: float = 0.7
    a_fixed: tuple[float, ...] = (3.0, 5.0)
    n_spectra: int = 5
    radius: float = 0.6
    K: int = 40
    tol: float = 1e-8
    seed: int = 20261014
    pearson_margin: float = 10.0

    def a_values(self, beta: int, m: int) -> list[float]:
        return [(m - 1) * beta / 2 + self.a_offset, *self.a_fixed]

    def generators(self, m: int, a: float) -> list[gen.Generator]:
        return [
            gen.Gaussian(s=2.0),
            gen.Kotz(T=2.0, r=1.0),
            gen.PearsonVII(p=m * a + self.K + self.pearson_margin, nu=1.0),
        ]


@dataclass
class Theorem1GridResult:
    records: list[Theorem1Record] = field(default_factory=list)
    skipped: list[tuple[int, int, float]] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(not r.passed for r in self.records)


def run_theorem1_grid(grid: Theorem1Grid = Theorem1Grid()) -> Theorem1GridResult:
    """Run every admissible grid point.

    Points with ``a <= (m - 1) beta / 2`` lie outside the identity's domain
    and are listed in ``skipped`` instead of being run.
    """
    rng = np.random.default_rng(grid.seed)
    out = Theorem1GridResult()
    t0 = time.perf_counter()
    for beta in grid.betas:
        for m in grid.ms:
            table = get_table(beta, grid.K, m)
            for a in grid.a_values(beta, m):
                spectra = [rng.uniform(-grid.radius, grid.radius, m) for _ in range(grid.n_spectra)]
                if not a > (m - 1) * beta / 2:
                    out.skipped.append((beta, m, a))
                    continue
                for x in spectra:
                    for g in grid.generators(m, a):
                        out.records.append(verify_theorem1(g, beta, a, x, grid.K, grid.tol, table))
    out.seconds = time.perf_counter() - t0
    return out


@dataclass(frozen=True)
class Theorem2Suite:
    """Monte Carlo configurations: each beta with an m = 1 and an m = 2 case."""

    betas: tuple[int, ...] = (1, 2)
    cases: tuple[tuple[int, int, int], ...] = ((1, 4, 6), (2, 6, 8))
    N: int = 100_000
    seed: int = 42
    threads: int = 1
    pearson_margin: float = 10.0

    def generators(self, beta: int, m: int, n: int) -> list[gen.Generator]:
        # PearsonVII needs p > beta*n*m/2 for the radial law to be proper
        return [
            gen.Gaussian(s=2.0),
            gen.Kotz(T=2.0, r=1.0),
            gen.PearsonVII(p=beta * n * m / 2 + self.pearson_margin, nu=2.0),
        ]

    def configs(self) -> list[Theorem2Config]:
        return [
            Theorem2Config(beta=b, m=m, n1=n1, n2=n2, N=self.N, seed=self.seed, threads=self.threads)
            for b in self.betas
            for m, n1, n2 in self.cases
        ]


def run_theorem2_suite(suite: Theorem2Suite = Theorem2Suite()) -> list[tuple[Theorem2Config, list[McReport]]]:
    return [
        (cfg, verify_theorem2(cfg, suite.generators(cfg.beta, cfg.m, cfg.n1 + cfg.n2)))
        for cfg in suite.configs()
    ]

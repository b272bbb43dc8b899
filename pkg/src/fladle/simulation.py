"""Synthetic data generation and the Monte Carlo study runner.

Curves are built from a truncated Karhunen-Loeve expansion
Y_ij = mu(T_ij) + sum_{v<=d} xi_iv phi_v(T_ij) + eps_ij with uncorrelated
scores of variance lambda_v and i.i.d. Gaussian measurement noise.  All
randomness comes from counter-based streams keyed by
(config.seed, replicate_seed, subject, purpose), so replicates are
reproducible and independent of generation order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import FunctionalDataset, SubjectRecord
from .errors import DomainError

__all__ = [
    "SimulationConfig",
    "GeneratedData",
    "StudyCell",
    "StudyReport",
    "fourier_basis",
    "paper_mean",
    "appendix_a_mean",
    "appendix_a_basis",
    "appendix_a_preset",
    "generate",
    "run_study",
]

_PURPOSE_TIMES = 0
_PURPOSE_SCORES = 1
_PURPOSE_NOISE = 2


def fourier_basis(nu: int, t):
    """Orthonormal Fourier system on [0, 1]: 1, sqrt(2) sin(2k pi t), sqrt(2) cos(2k pi t)."""
    if nu < 1:
        raise ValueError(f"basis index must be >= 1, got {nu}")
    t = np.asarray(t, dtype=np.float64)
    if nu == 1:
        return np.ones_like(t)
    k = nu // 2
    if nu % 2 == 0:
        return math.sqrt(2.0) * np.sin(2.0 * k * math.pi * t)
    return math.sqrt(2.0) * np.cos(2.0 * k * math.pi * t)


def paper_mean(t):
    """Mean curve t + 10 exp{-(t - 1/2)^2} on [0, 1]."""
    t = np.asarray(t, dtype=np.float64)
    return t + 10.0 * np.exp(-((t - 0.5) ** 2))


def appendix_a_mean(t):
    """The two-component sanity setting's mean, rescaled from [0, 10] to [0, 1]."""
    t = np.asarray(t, dtype=np.float64)
    return 10.0 * t + 10.0 * np.exp(-25.0 * ((2.0 * t - 1.0) ** 2))


def appendix_a_basis(nu: int, t):
    """The two-component sanity setting's eigenfunctions, L2-renormalized on [0, 1].

    On the original domain these are 5^{-1/2} cos(pi t/5) and -5^{-1/2} sin(pi t/5);
    mapping t -> t/10 and renormalizing gives sqrt(2) cos(2 pi s) and -sqrt(2) sin(2 pi s).
    """
    t = np.asarray(t, dtype=np.float64)
    if nu == 1:
        return math.sqrt(2.0) * np.cos(2.0 * math.pi * t)
    if nu == 2:
        return -math.sqrt(2.0) * np.sin(2.0 * math.pi * t)
    raise ValueError(f"the two-component setting defines basis indices 1 and 2, got {nu}")


@dataclass(frozen=True)
class SimulationConfig:
    """Complete specification of one synthetic scenario.

    eigenvalue_rule is 'simple' ((4-v)^2, d=3), 'complex' ((7-v)^2, d=6), or an
    explicit strictly decreasing tuple of positive variances.  score_law is
    'gaussian' or 'centered-exponential'.  design is 'irregular-uniform'
    (T_ij ~ U[0,1], sorted) or 'regular' (T_ij = (j-1)/(m-1), shared).
    """

    n: int
    m: int
    eigenvalue_rule: str | Sequence[float] = "simple"
    score_law: str = "gaussian"
    sigma2_eps: float = 0.1
    design: str = "irregular-uniform"
    mean_rule: str = "paper-default"
    basis: str = "fourier"
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        if self.n < 4:
            raise DomainError(f"need n >= 4 subjects, got {self.n}")
        if self.m < 2:
            raise DomainError(f"need m >= 2 observations per subject, got {self.m}")
        if self.sigma2_eps < 0:
            raise DomainError(f"sigma2_eps must be >= 0, got {self.sigma2_eps}")
        if self.score_law not in ("gaussian", "centered-exponential"):
            raise DomainError(f"unknown score law {self.score_law!r}")
        if self.design not in ("irregular-uniform", "regular"):
            raise DomainError(f"unknown design {self.design!r}")
        if self.basis not in ("fourier", "appendix-a"):
            raise DomainError(f"unknown basis {self.basis!r}")
        lam = self.eigenvalues
        if len(lam) < 1 or np.any(lam <= 0) or np.any(np.diff(lam) >= 0):
            raise DomainError("eigenvalues must be strictly decreasing and positive")

    @property
    def eigenvalues(self) -> np.ndarray:
        if isinstance(self.eigenvalue_rule, str):
            if self.eigenvalue_rule == "simple":
                return np.array([(4.0 - v) ** 2 for v in range(1, 4)])
            if self.eigenvalue_rule == "complex":
                return np.array([(7.0 - v) ** 2 for v in range(1, 7)])
            raise DomainError(f"unknown eigenvalue rule {self.eigenvalue_rule!r}")
        return np.asarray(self.eigenvalue_rule, dtype=np.float64)

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    def mean_fn(self) -> Callable:
        if self.mean_rule == "paper-default":
            return paper_mean
        if self.mean_rule == "appendix-a":
            return appendix_a_mean
        raise DomainError(f"unknown mean rule {self.mean_rule!r}")

    def basis_fn(self) -> Callable:
        return fourier_basis if self.basis == "fourier" else appendix_a_basis


def appendix_a_preset(n: int = 200, m: int = 26, seed: int = 0) -> SimulationConfig:
    """The d = 2 sanity setting: variances (25, 4), its own mean and basis, noise 0.01."""
    return SimulationConfig(
        n=n,
        m=m,
        eigenvalue_rule=(25.0, 4.0),
        score_law="gaussian",
        sigma2_eps=0.01,
        design="irregular-uniform",
        mean_rule="appendix-a",
        basis="appendix-a",
        seed=seed,
        label="appendix-a",
    )


@dataclass(frozen=True)
class GeneratedData:
    """A simulated dataset together with its true scores and true rank."""

    dataset: FunctionalDataset
    scores: np.ndarray  # n x d, row i holds subject i's true scores
    d: int
    config: SimulationConfig
    replicate_seed: int


def _stream(config_seed: int, replicate_seed: int, subject: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=(config_seed, replicate_seed, subject, purpose))
    return np.random.Generator(np.random.Philox(ss))


def _draw_scores(rng: np.random.Generator, lam: np.ndarray, law: str) -> np.ndarray:
    sd = np.sqrt(lam)
    if law == "gaussian":
        return rng.normal(0.0, sd)
    # centered exponential: E - sqrt(lam) with E ~ Exponential(mean sqrt(lam)),
    # giving mean 0 and variance lam
    return rng.exponential(scale=sd) - sd


def generate(config: SimulationConfig, replicate_seed: int) -> GeneratedData:
    """Simulate one dataset under `config`, keyed by (config.seed, replicate_seed)."""
    lam = config.eigenvalues
    d = config.d
    mean_fn = config.mean_fn()
    basis_fn = config.basis_fn()
    regular_times = None
    if config.design == "regular":
        regular_times = np.linspace(0.0, 1.0, config.m)

    subjects = []
    scores = np.empty((config.n, d))
    width = len(str(config.n - 1))
    for i in range(config.n):
        if regular_times is not None:
            t = regular_times
        else:
            rng_t = _stream(config.seed, replicate_seed, i, _PURPOSE_TIMES)
            t = np.sort(rng_t.uniform(0.0, 1.0, config.m))
        rng_s = _stream(config.seed, replicate_seed, i, _PURPOSE_SCORES)
        xi = _draw_scores(rng_s, lam, config.score_law)
        scores[i] = xi
        signal = mean_fn(t).copy()
        for v in range(1, d + 1):
            signal += xi[v - 1] * basis_fn(v, t)
        if config.sigma2_eps > 0:
            rng_e = _stream(config.seed, replicate_seed, i, _PURPOSE_NOISE)
            y = signal + rng_e.normal(0.0, math.sqrt(config.sigma2_eps), config.m)
        else:
            y = signal
        subjects.append(SubjectRecord(f"s{i:0{width}d}", t, y))
    return GeneratedData(
        dataset=FunctionalDataset(tuple(subjects)),
        scores=scores,
        d=d,
        config=config,
        replicate_seed=int(replicate_seed),
    )


@dataclass(frozen=True)
class StudyCell:
    """Aggregated outcomes for one (config, method) pair."""

    config: SimulationConfig
    method: str
    replicates: int
    n_correct: int
    d_hat_counts: dict
    failures: tuple  # (replicate, reason) pairs
    wall_clock: float

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.replicates if self.replicates else float("nan")


@dataclass(frozen=True)
class StudyReport:
    """All cells of a study, in deterministic (config, method) order."""

    cells: tuple[StudyCell, ...]

    CSV_HEADER = "setting,method,n,m,sigma2,design,score_law,replicates,accuracy"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for c in self.cells:
            cfg = c.config
            setting = cfg.label or (
                cfg.eigenvalue_rule if isinstance(cfg.eigenvalue_rule, str) else "explicit"
            )
            lines.append(
                f"{setting},{c.method},{cfg.n},{cfg.m},{cfg.sigma2_eps:g},"
                f"{cfg.design},{cfg.score_law},{c.replicates},{c.accuracy:.6f}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        """Human-readable accuracy table, one row per method per setting."""
        header = f"{'setting':<14} {'method':<10} {'n':>5} {'m':>4} {'sigma2':>7} {'design':>10} {'acc':>7} {'fail':>5}"
        lines = [header, "-" * len(header)]
        for c in self.cells:
            cfg = c.config
            setting = cfg.label or (
                cfg.eigenvalue_rule if isinstance(cfg.eigenvalue_rule, str) else "explicit"
            )
            lines.append(
                f"{setting:<14} {c.method:<10} {cfg.n:>5} {cfg.m:>4} {cfg.sigma2_eps:>7g} "
                f"{cfg.design:>10} {c.accuracy:>7.3f} {len(c.failures):>5}"
            )
        return "\n".join(lines)


def _replicate_outcomes(args):
    # top-level so it can cross a process boundary
    config, methods, replicate, options = args
    from .methods import estimate_ranks

    gen = generate(config, replicate)
    out = {}
    try:
        results = estimate_ranks(gen.dataset, methods, options, seed=replicate)
    except Exception as exc:  # estimator failure is an outcome, not a crash
        for m in methods:
            out[m] = (None, f"{type(exc).__name__}: {exc}")
        return replicate, gen.d, out
    for m in methods:
        res = results[m]
        if isinstance(res, Exception):
            out[m] = (None, f"{type(res).__name__}: {res}")
        else:
            out[m] = (res, "")
    return replicate, gen.d, out


def run_study(
    configs: Sequence[SimulationConfig],
    methods: Sequence[str],
    replicates: int,
    parallelism: int = 1,
    options=None,
) -> StudyReport:
    """Run `replicates` generate-estimate rounds per config and aggregate accuracy.

    Replicates are independent tasks; results are folded in sorted
    (config, method, replicate) order, so the report is bit-identical for any
    `parallelism` level.  A replicate whose estimator raises is recorded as a
    failure with its reason and counts against accuracy.
    """
    if replicates < 1:
        raise DomainError("need at least one replicate")
    methods = list(methods)
    cells = []
    for config in configs:
        tasks = [(config, methods, rep, options) for rep in range(replicates)]
        t0 = time.perf_counter()
        if parallelism > 1:
            import concurrent.futures as cf

            with cf.ProcessPoolExecutor(max_workers=parallelism) as pool:
                raw = list(pool.map(_replicate_outcomes, tasks, chunksize=1))
        else:
            raw = [_replicate_outcomes(t) for t in tasks]
        wall = time.perf_counter() - t0
        raw.sort(key=lambda r: r[0])
        for method in methods:
            counts: dict = {}
            n_correct = 0
            failures = []
            for rep, true_d, out in raw:
                d_hat, reason = out[method]
                if d_hat is None:
                    failures.append((rep, reason))
                    continue
                counts[d_hat] = counts.get(d_hat, 0) + 1
                if d_hat == true_d:
                    n_correct += 1
            cells.append(
                StudyCell(
                    config=config,
                    method=method,
                    replicates=replicates,
                    n_correct=n_correct,
                    d_hat_counts=dict(sorted(counts.items())),
                    failures=tuple(failures),
                    wall_clock=wall,
                )
            )
    return StudyReport(cells=tuple(cells))

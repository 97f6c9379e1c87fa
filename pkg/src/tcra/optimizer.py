"""Differential-evolution search for inner/outer degree distributions.

The objective is the density-evolution rate threshold. Candidates are
coefficient vectors projected onto probability simplices, so every emitted
design satisfies the normalization and degree constraints exactly; the rate
constraint ``R_t <= R_o / Gamma'(1)`` is enforced by clamping the threshold
search bracket.
"""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import density_evolution as de
from .capacity import ActivityModel, poisson_quantile_users
from .errors import ParameterError
from .gf2codes import LinearBlockCode, ProfileKind, profile
from .polynomials import DegreePolynomial, Perspective

log = logging.getLogger(__name__)

INNER_RATE_TOL = 2e-3


class OuterMode(str, enum.Enum):
    LDPC = "ldpc"
    SHORT = "short"


@dataclass
class DesignProblem:
    n_a_star: int
    epsilon: float
    d_max: int = 13
    mode: OuterMode = OuterMode.LDPC
    codes: list[LinearBlockCode] = field(default_factory=list)
    profile_kind: ProfileKind = ProfileKind.EXACT
    lambda2_max: float | None = None
    v2c: de.V2C = de.V2C.EDGE
    profile_samples: int = 100_000

    def __post_init__(self):
        self.mode = OuterMode(self.mode)
        self.profile_kind = ProfileKind(self.profile_kind)
        self.v2c = de.V2C(self.v2c)
        if self.d_max < 1:
            raise ParameterError("d_max must be >= 1")
        if self.mode is OuterMode.SHORT and not self.codes:
            raise ParameterError("short-code mode needs a non-empty code ensemble")
        if self.lambda2_max is not None and not (0.0 <= self.lambda2_max <= 1.0):
            raise ParameterError("lambda2_max must lie in [0, 1]")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ParameterError("epsilon outside [0, 1]")


@dataclass
class DeConfig:
    population: int | None = None  # default 15 x genome length
    mutation_factor: float = 0.7
    crossover_rate: float = 0.9
    generations: int = 300
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.population is not None and self.population < 4:
            raise ParameterError("population must be >= 4")
        if not (0.0 < self.mutation_factor <= 2.0):
            raise ParameterError("mutation factor F must lie in (0, 2]")
        if not (0.0 <= self.crossover_rate <= 1.0):
            raise ParameterError("crossover rate must lie in [0, 1]")
        if self.generations < 0:
            raise ParameterError("generations must be >= 0")

    def population_for(self, dim: int) -> int:
        return self.population if self.population is not None else max(4, 15 * dim)


@dataclass
class OptimizationResult:
    design: de.SystemDesign
    r_t: float
    history: list[float]  # best objective after each generation (index 0 = initial)
    flag: de.ThresholdFlag = de.ThresholdFlag.OK
    code: LinearBlockCode | None = None
    per_code: dict[str, float] = field(default_factory=dict)


# --------------------------------------------------------------------------
# genome handling


def project_block(v: np.ndarray) -> np.ndarray:
    """Clip to [0, 1] then renormalize; an all-zero block becomes uniform."""
    w = np.clip(v, 0.0, 1.0)
    s = w.sum()
    return w / s if s > 0 else np.full(w.size, 1.0 / w.size)


def cap_first(w: np.ndarray, cap: float | None) -> np.ndarray:
    """Limit ``w[0]`` to ``cap``, moving the excess proportionally onto the rest."""
    if cap is None or w[0] <= cap or w.size == 1:
        return w
    out = w.copy()
    excess = out[0] - cap
    out[0] = cap
    rest = out[1:].sum()
    if rest > 0:
        out[1:] += excess * out[1:] / rest
    else:
        out[1] += excess
    return out


class _Layout:
    def __init__(self, problem: DesignProblem):
        self.p = problem
        self.d = problem.d_max
        self.blocks = 3 if problem.mode is OuterMode.LDPC else 1

    @property
    def dim(self) -> int:
        return self.blocks * self.d

    def project(self, x: np.ndarray) -> np.ndarray:
        d = self.d
        out = np.empty_like(x)
        out[:d] = project_block(x[:d])
        if self.blocks == 3:
            out[d:2 * d] = cap_first(project_block(x[d:2 * d]), self.p.lambda2_max)
            out[2 * d:] = project_block(x[2 * d:])
        return out

    def gamma(self, x) -> DegreePolynomial:
        return DegreePolynomial.from_weights(np.concatenate([[0.0], x[:self.d]]), Perspective.NODE)

    def outer(self, x) -> de.LdpcEnsemble:
        d = self.d
        lam = DegreePolynomial.from_weights(np.concatenate([[0.0, 0.0], x[d:2 * d]]), Perspective.EDGE)
        rho = DegreePolynomial.from_weights(np.concatenate([[0.0, 0.0], x[2 * d:]]), Perspective.EDGE)
        return de.LdpcEnsemble(lam, rho)


# --------------------------------------------------------------------------
# fitness


class _Scorer:
    """Threshold of a genome, with an early test against a rate to beat."""

    def __init__(self, problem: DesignProblem, outer_fixed=None, rate_tol=INNER_RATE_TOL):
        self.problem = problem
        self.layout = _Layout(problem)
        self.outer_fixed = outer_fixed
        self.rate_tol = rate_tol

    def design(self, x) -> de.SystemDesign | None:
        L = self.layout
        outer = self.outer_fixed
        if outer is None:
            try:
                outer = L.outer(x)
            except ParameterError:  # design rate outside [0, 1]
                return None
        return de.SystemDesign(L.gamma(x), outer, self.problem.epsilon, self.problem.n_a_star)

    def __call__(self, x, beat: float | None = None) -> float:
        """Threshold of ``x``; ``-1`` when it provably cannot reach ``beat``."""
        d = self.design(x)
        if d is None or d.r_max <= 0.0:
            return 0.0 if beat is None else -1.0
        ev = de._Evaluator(d, self.problem.v2c)
        if beat is not None:
            if d.r_max < beat or not ev.run(beat).converged:
                return -1.0
            lo = beat
        else:
            lo = 0.0
        hi = d.r_max
        if ev.run(hi).converged:
            return hi
        if beat is None and not ev.run(0.0).converged:
            return 0.0
        while hi - lo > self.rate_tol:
            mid = 0.5 * (lo + hi)
            if ev.run(mid).converged:
                lo = mid
            else:
                hi = mid
        return lo


def _score_job(args):
    scorer, x, beat = args
    return scorer(x, beat)


def _mapper(threads: int):
    n = (os.cpu_count() or 1) if threads == 0 else threads
    if n <= 1:
        return None
    return ProcessPoolExecutor(max_workers=n)


# --------------------------------------------------------------------------
# differential evolution


def differential_evolution(scorer: _Scorer, config: DeConfig, on_generation=None):
    """DE/rand/1/bin maximizing ``scorer``; returns ``(best_x, best_f, history)``."""
    L = scorer.layout
    dim = L.dim
    npop = config.population_for(dim)
    rng0 = np.random.default_rng([config.seed, 0])
    pop = np.array([L.project(rng0.random(dim)) for _ in range(npop)])
    pool = _mapper(config.threads)
    try:
        run = (lambda jobs: list(pool.map(_score_job, jobs, chunksize=8))) if pool else \
              (lambda jobs: [_score_job(j) for j in jobs])
        fit = np.array(run([(scorer, x, None) for x in pop]))
        best = int(np.argmax(fit))
        history = [float(fit[best])]
        for g in range(1, config.generations + 1):
            rng = np.random.default_rng([config.seed, g])
            trials = np.empty_like(pop)
            for i in range(npop):
                choices = [j for j in range(npop) if j != i]
                a, b, c = rng.choice(choices, 3, replace=False) if npop >= 4 else (i, i, i)
                mutant = pop[a] + config.mutation_factor * (pop[b] - pop[c])
                mask = rng.random(dim) < config.crossover_rate
                mask[rng.integers(dim)] = True
                trials[i] = L.project(np.where(mask, mutant, pop[i]))
            tfit = np.array(run([(scorer, trials[i], float(fit[i])) for i in range(npop)]))
            better = tfit >= fit
            pop[better] = trials[better]
            fit[better] = tfit[better]
            best = int(np.argmax(fit))
            history.append(float(fit[best]))
            if on_generation is not None:
                on_generation(g, history[-1])
        return pop[best].copy(), float(fit[best]), history
    finally:
        if pool is not None:
            pool.shutdown()


def _finalize(scorer: _Scorer, x) -> tuple[de.SystemDesign, de.ThresholdResult]:
    d = scorer.design(x)
    if d is None:
        raise AssertionError("best genome must be feasible")
    res = de.threshold_rate(d, v2c=scorer.problem.v2c)
    return d.with_rate(res.r_t), res


def validate_design(design: de.SystemDesign, d_max: int, lambda2_max: float | None = None,
                    tol: float = 1e-9) -> list[str]:
    """Constraint violations of an emitted design (empty list when valid)."""
    errs = []
    G = design.gamma.coeffs
    if abs(G.sum() - 1.0) > tol or np.any(G < 0) or np.any(G > 1):
        errs.append("Gamma is not a pmf")
    if G.size - 1 > d_max:
        errs.append(f"Gamma has degree {G.size - 1} > d_max={d_max}")
    if G[0] > 0:
        errs.append("Gamma has mass at degree 0")
    o = design.outer
    if isinstance(o, de.LdpcEnsemble):
        for name, p in (("lambda", o.lam), ("rho", o.rho)):
            c = p.coeffs
            if abs(c.sum() - 1.0) > tol or np.any(c < 0) or np.any(c > 1):
                errs.append(f"{name} is not a pmf")
            if c.size - 2 > d_max:
                errs.append(f"{name} exponent {c.size - 2} > d_max={d_max}")
        if not (0.0 <= o.rate <= 1.0):
            errs.append("R_o outside [0, 1]")
        if lambda2_max is not None and o.lam.coeffs.size > 2 and o.lam.coeffs[2] > lambda2_max + tol:
            errs.append("lambda_2 above cap")
    if design.r_t is not None and design.r_t > design.r_max * (1 + 1e-12):
        errs.append("R_t exceeds R_o / Gamma'(1)")
    return errs


def optimize_ldpc(problem: DesignProblem, config: DeConfig, on_generation=None) -> OptimizationResult:
    if problem.mode is not OuterMode.LDPC:
        raise ParameterError("optimize_ldpc needs an LDPC-mode problem")
    scorer = _Scorer(problem)
    x, f, hist = differential_evolution(scorer, config, on_generation)
    design, res = _finalize(scorer, x)
    errs = validate_design(design, problem.d_max, problem.lambda2_max)
    if errs:
        raise AssertionError("; ".join(errs))
    return OptimizationResult(design, res.r_t, hist, res.flag)


def code_profiles(problem: DesignProblem, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    for code in problem.codes:
        yield code, profile(code, problem.profile_kind, rng=rng,
                            samples_per_E=problem.profile_samples)


def optimize_short(problem: DesignProblem, config: DeConfig, on_generation=None,
                   profiles=None) -> OptimizationResult:
    """Gamma-only DE for each code of the ensemble; the best code wins.

    Codes are visited by decreasing rate and a code whose rate cannot beat
    the incumbent threshold is skipped (the threshold never exceeds
    ``R_C / Gamma'(1) <= R_C``).
    """
    if problem.mode is not OuterMode.SHORT:
        raise ParameterError("optimize_short needs a short-code problem")
    pairs = list(profiles) if profiles is not None else list(code_profiles(problem))
    pairs.sort(key=lambda cp: (-cp[0].rate, cp[0].n))
    best = None
    per_code = {}
    for code, prof in pairs:
        label = code.label or f"({code.n},{code.k})"
        if best is not None and code.rate <= best.r_t:
            per_code[label] = float("nan")
            continue
        if code.k == 0:
            per_code[label] = 0.0
            continue
        scorer = _Scorer(problem, outer_fixed=de.BlockOuter(code, prof))
        x, f, hist = differential_evolution(scorer, config, on_generation)
        design, res = _finalize(scorer, x)
        per_code[label] = res.r_t
        log.info("code %s: R_t* = %.6f", label, res.r_t)
        if best is None or res.r_t > best.r_t:
            best = OptimizationResult(design, res.r_t, hist, res.flag, code)
    if best is None:
        raise ParameterError("no usable code in the ensemble")
    if best.r_t <= 0.0:
        best.flag = de.ThresholdFlag.NO_BRACKET
    best.per_code = per_code
    errs = validate_design(best.design, problem.d_max)
    if errs:
        raise AssertionError("; ".join(errs))
    return best


def design_for_outage(model: ActivityModel, p_outage: float, epsilon: float, d_max: int,
                      config: DeConfig, mode=OuterMode.LDPC, codes=None,
                      profile_kind=ProfileKind.EXACT) -> OptimizationResult | None:
    """Size ``N_a*`` from the activity model, then optimize; ``None`` when ``N_a* = 0``."""
    n_star = poisson_quantile_users(model, p_outage)
    if n_star == 0:
        return None
    problem = DesignProblem(n_star, epsilon, d_max, mode, list(codes or []), profile_kind)
    if problem.mode is OuterMode.LDPC:
        return optimize_ldpc(problem, config)
    return optimize_short(problem, config)

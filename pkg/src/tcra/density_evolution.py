"""Density evolution for the joint two-layer decoder.

Erasure probabilities of the messages exchanged between variable (v),
check (c), time (t) and block-decoder nodes are tracked across decoding
iterations. Two outer-layer families are supported: LDPC ensembles,
described by edge-perspective ``(lambda, rho)``, and short block codes
described by their MAP failure profile ``P_E(H)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError, ParameterError
from .gf2codes import ErasureFailureProfile, LinearBlockCode, named_code, profile
from .polynomials import (
    DegreePolynomial,
    Perspective,
    TimeNodeLaw,
    edge_to_node,
    node_to_edge,
    time_node_polys,
)

SUCCESS_TOL = 1e-9
STALL_TOL = 1e-12
MAX_ITER = 5000
RATE_TOL = 5e-4
Q_SLACK = 1e-12
FLOOR_RTOL = 1e-2
UNIT_SLACK = 1e-12  # rounding tolerance on probabilities


# --------------------------------------------------------------------------
# outer layers


@dataclass(frozen=True, eq=False)
class LdpcEnsemble:
    """Outer LDPC ensemble given by edge-perspective ``lam`` and ``rho``."""

    lam: DegreePolynomial
    rho: DegreePolynomial

    def __post_init__(self):
        lam = self.lam if not self.lam.is_node else node_to_edge(self.lam)
        if lam.coeffs.size > 1 and lam.coeffs[1] > 0:
            raise ParameterError("degree-1 variable nodes are not supported in the outer ensemble")
        if self.rho.is_node:
            raise ParameterError("rho must be edge perspective")
        object.__setattr__(self, "lam", lam)
        if not (0.0 <= self.rate <= 1.0):
            raise ParameterError(f"design rate {self.rate:.6g} outside [0, 1]")

    @property
    def Lam(self) -> DegreePolynomial:
        return edge_to_node(self.lam)

    @property
    def rate(self) -> float:
        return 1.0 - self.rho.integral() / self.lam.integral()

    def to_json(self) -> dict:
        return {"type": "ldpc", "lambda": self.lam.to_json(), "rho": self.rho.to_json()}


@dataclass(frozen=True, eq=False)
class BlockOuter:
    """Short block code with its erasure-failure profile."""

    code: LinearBlockCode
    profile: ErasureFailureProfile

    def __post_init__(self):
        if self.profile.n != self.code.n:
            raise ParameterError("profile length does not match code length")

    @property
    def rate(self) -> float:
        return self.code.rate

    def to_json(self) -> dict:
        obj = {"type": "block"}
        obj.update(self.code.to_json(self.profile))
        return obj


@dataclass(frozen=True)
class Uncoded:
    """No outer layer: coded bits are the information bits."""

    rate: float = 1.0

    def to_json(self) -> dict:
        return {"type": "none"}


Outer = LdpcEnsemble | BlockOuter | Uncoded


# --------------------------------------------------------------------------
# designs


@dataclass(frozen=True, eq=False)
class SystemDesign:
    gamma: DegreePolynomial
    outer: Outer
    epsilon: float
    n_a_star: int
    r_t: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.gamma.is_node:
            raise ParameterError("gamma must be node perspective")
        if self.gamma.coeffs[0] > 0:
            raise ParameterError("repetition degree 0 is not allowed")
        if not (0.0 <= self.epsilon <= 1.0):
            raise DomainError(f"epsilon={self.epsilon} outside [0, 1]")
        if self.n_a_star < 0:
            raise ParameterError("n_a_star must be non-negative")
        if self.r_t is not None:
            if self.r_t < 0:
                raise ParameterError("r_t must be non-negative")
            if self.r_t > self.r_max * (1 + Q_SLACK):
                raise ParameterError(
                    f"r_t={self.r_t:.6g} exceeds R_o/Gamma'(1)={self.r_max:.6g}"
                )

    @property
    def r_o(self) -> float:
        return self.outer.rate

    @property
    def r_max(self) -> float:
        """Largest admissible per-user rate, ``R_o / Gamma'(1)``."""
        return self.r_o / self.gamma.mean_degree()

    def slot_probability(self, r_t: float | None = None) -> float:
        r = self.r_t if r_t is None else r_t
        if r is None:
            raise ParameterError("design has no rate; pass r_t")
        if self.r_o <= 0:
            return 0.0 if r == 0 else math.inf
        return r / self.r_o * self.gamma.mean_degree()

    def time_law(self, r_t: float | None = None, n_a: int | None = None) -> TimeNodeLaw:
        q = min(self.slot_probability(r_t), 1.0)
        return TimeNodeLaw(self.n_a_star if n_a is None else n_a, q)

    def with_rate(self, r_t: float | None) -> SystemDesign:
        return replace(self, r_t=r_t)

    def to_json(self) -> dict:
        obj = {
            "gamma": self.gamma.to_json(),
            "outer": self.outer.to_json(),
            "epsilon": self.epsilon,
            "n_a_star": self.n_a_star,
        }
        if self.r_t is not None:
            obj["r_t"] = self.r_t
        if self.meta:
            obj["meta"] = self.meta
        return obj

    @classmethod
    def from_json(cls, obj, renormalize: bool = True, rng=None) -> SystemDesign:
        """Parse a design; rounded published coefficients are renormalized by default."""
        try:
            gamma = DegreePolynomial.from_json(obj["gamma"], renormalize=renormalize)
            o = obj.get("outer", {"type": "none"})
            kind = o.get("type", "ldpc")
            if kind == "ldpc":
                outer = LdpcEnsemble(
                    _edge_from_json(o["lambda"], renormalize),
                    _edge_from_json(o["rho"], renormalize),
                )
            elif kind == "block":
                code = named_code(o["code"]) if "code" in o else LinearBlockCode.from_json(o)
                if "profile" in o:
                    prof = ErasureFailureProfile.from_json(o["profile"])
                else:
                    prof = profile(code, o.get("profile_kind", "exact"), rng=rng)
                outer = BlockOuter(code, prof)
            elif kind == "none":
                outer = Uncoded()
            else:
                raise ConfigError(f"unknown outer type {kind!r}")
            return cls(gamma, outer, float(obj["epsilon"]), int(obj["n_a_star"]),
                       None if obj.get("r_t") is None else float(obj["r_t"]),
                       dict(obj.get("meta", {})))
        except KeyError as exc:
            raise ConfigError(f"design JSON missing field {exc}") from exc

    @classmethod
    def load(cls, path, **kw) -> SystemDesign:
        return cls.from_json(json.loads(Path(path).read_text()), **kw)


def _edge_from_json(obj, renormalize):
    if isinstance(obj, str):
        return DegreePolynomial.parse(obj, Perspective.EDGE, renormalize)
    return DegreePolynomial.from_json(obj, renormalize)


# --------------------------------------------------------------------------
# transfer functions


def check_transfer(rho: DegreePolynomial, p_in: float) -> float:
    if rho.is_node:
        raise ParameterError("rho must be edge perspective")
    return 1.0 - rho.eval(1.0 - _unit(p_in))


def time_transfer(psi: DegreePolynomial | None, epsilon: float, p_in: float) -> float:
    """``1 - (1 - eps) psi(1 - p/2)``; ``psi=None`` means no other user shares the slot."""
    p = _unit(p_in)
    eps = _unit(epsilon)
    v = 1.0 if psi is None else psi.eval(1.0 - p / 2.0)
    return 1.0 - (1.0 - eps) * v


def erasure_floor(gamma: DegreePolynomial, epsilon: float) -> float:
    """Residual erasure of a bit whose every slot is erased, ``Gamma(eps)``."""
    return gamma.eval(epsilon)


def _unit(x) -> float:
    x = float(x)
    if not (-UNIT_SLACK <= x <= 1.0 + UNIT_SLACK):
        raise DomainError(f"probability {x} outside [0, 1]")
    return _clip(x)


def _clip(x: float) -> float:
    """Remove rounding excursions outside [0, 1]."""
    return min(max(float(x), 0.0), 1.0)


# --------------------------------------------------------------------------
# trajectories (reference implementations; thresholds use the kernels)


@dataclass(frozen=True)
class DeState:
    iteration: int
    p_e: float
    p_vc: float = math.nan
    p_cv: float = math.nan
    p_vt: float = math.nan
    p_tv: float = math.nan
    p_ct: float = math.nan


class V2C(str, enum.Enum):
    EDGE = "edge"
    NODE = "node"


def _psi(design: SystemDesign, r_t, n_a):
    _, psi = time_node_polys(design.time_law(r_t, n_a))
    return psi


def _ldpc_parts(design: SystemDesign):
    o = design.outer
    if isinstance(o, LdpcEnsemble):
        return o.Lam, o.lam, o.rho
    if isinstance(o, Uncoded):
        one_n = DegreePolynomial([1.0], Perspective.NODE)
        one_e = DegreePolynomial([0.0, 1.0], Perspective.EDGE)
        return one_n, one_e, one_e
    raise ParameterError("LDPC recursion needs an LDPC or uncoded outer layer")


def _stop(pe, pe_old, succ_tol, stall_tol):
    return pe < succ_tol or abs(pe - pe_old) < stall_tol


def ldpc_recursion(design: SystemDesign, r_t: float | None = None, n_a: int | None = None,
                   max_iter: int = MAX_ITER, succ_tol: float = SUCCESS_TOL,
                   stall_tol: float = STALL_TOL) -> list[DeState]:
    """Trajectory of the joint LDPC-outer recursion from the all-erased state."""
    Lam, lam, rho = _ldpc_parts(design)
    G = design.gamma
    g = node_to_edge(G)
    psi = _psi(design, r_t, n_a)
    eps = design.epsilon
    pvc = 1.0
    pcv = _clip(check_transfer(rho, pvc))
    pvt = _clip(Lam(pcv) * g(1.0))
    ptv = _clip(time_transfer(psi, eps, pvt))
    traj = [DeState(0, 1.0, pvc, pcv, pvt, ptv)]
    for it in range(1, max_iter + 1):
        pe = _clip(G(ptv) * Lam(pcv))
        pvc = _clip(G(ptv) * lam(pcv))
        pcv = _clip(check_transfer(rho, pvc))
        pvt = _clip(Lam(pcv) * g(ptv))
        ptv = _clip(time_transfer(psi, eps, pvt))
        traj.append(DeState(it, pe, pvc, pcv, pvt, ptv))
        if _stop(pe, traj[-2].p_e, succ_tol, stall_tol):
            break
    return traj


def _map_fail(prof: np.ndarray, n: int, p: float) -> float:
    """``sum_E C(n-1,E-1) p^(E-1) (1-p)^(n-E) P_E`` via scipy's log-space binomial pmf."""
    from scipy.stats import binom

    E = np.arange(1, n + 1)
    return float(np.dot(binom.pmf(E - 1, n - 1, p), prof[1:]))


def map_recursion(design: SystemDesign, r_t: float | None = None, n_a: int | None = None,
                  max_iter: int = MAX_ITER, succ_tol: float = SUCCESS_TOL,
                  stall_tol: float = STALL_TOL, v2c=V2C.EDGE,
                  p_ct0: float = 1.0) -> list[DeState]:
    """Trajectory of the joint recursion with a block-MAP outer decoder.

    ``p_ct0=1`` is the all-erased start; ``p_ct0=0`` climbs to the smallest
    fixed point instead.
    """
    o = design.outer
    if not isinstance(o, BlockOuter):
        raise ParameterError("MAP recursion needs a block-code outer layer")
    G = design.gamma
    v2c_poly = node_to_edge(G) if V2C(v2c) is V2C.EDGE else G
    psi = _psi(design, r_t, n_a)
    eps = design.epsilon
    prof = o.profile.p_e
    n = o.code.n
    pct = float(p_ct0)
    ptv = _clip(time_transfer(psi, eps, pct))
    pvc = _clip(v2c_poly(ptv))
    traj = [DeState(0, 1.0, p_vc=pvc, p_tv=ptv, p_ct=pct)]
    for it in range(1, max_iter + 1):
        fail = _clip(_map_fail(prof, n, pvc))
        pct = pvc * fail
        pe = G(ptv) * fail
        ptv = _clip(time_transfer(psi, eps, pct))
        pvc = _clip(v2c_poly(ptv))
        traj.append(DeState(it, pe, p_vc=pvc, p_tv=ptv, p_ct=pct))
        if _stop(pe, traj[-2].p_e, succ_tol, stall_tol):
            break
    return traj


# --------------------------------------------------------------------------
# fast classification (kernels)


@dataclass(frozen=True)
class DeOutcome:
    converged: bool
    iterations: int
    p_e: float
    floor: float = 0.0  # interference-free residual (block outer only)


def at_floor(p_top: float, p_ref: float, succ_tol: float = SUCCESS_TOL) -> bool:
    """Success test for block outer codes.

    A finite block code leaves a positive residual whenever ``eps > 0``, so
    the recursion can never reach 0. Success means the all-erased trajectory
    ends within ``FLOOR_RTOL`` of ``p_ref``, the residual of the same system
    without multiuser interference (slot probability 0). With ``eps = 0``
    the reference is 0 and the test reduces to ``p_e < succ_tol``.
    """
    return p_top < succ_tol or p_top <= p_ref * (1.0 + FLOOR_RTOL) + succ_tol


def _arr(p: DegreePolynomial) -> np.ndarray:
    return np.ascontiguousarray(p.coeffs, dtype=np.float64)


class _Evaluator:
    """Pre-packed arrays for repeated recursion runs of one design."""

    def __init__(self, design: SystemDesign, v2c=V2C.EDGE, max_iter=MAX_ITER,
                 succ_tol=SUCCESS_TOL, stall_tol=STALL_TOL):
        self.design = design
        self.max_iter = max_iter
        self.succ_tol = succ_tol
        self.stall_tol = stall_tol
        G = design.gamma
        self.g_node = _arr(G)
        self.g_edge = _arr(node_to_edge(G))
        self.mean = G.mean_degree()
        self._ref: dict[int, float] = {}
        o = design.outer
        self.block = isinstance(o, BlockOuter)
        if self.block:
            self.v2c_edge = V2C(v2c) is V2C.EDGE
            self.v2c = self.g_edge if self.v2c_edge else self.g_node
            self.prof = np.ascontiguousarray(o.profile.p_e, dtype=np.float64)
            self.n = o.code.n
        else:
            Lam, lam, rho = _ldpc_parts(design)
            self.l_node, self.l_edge, self.rho = _arr(Lam), _arr(lam), _arr(rho)

    def reference(self, n_a: int) -> float:
        """Interference-free residual of a block outer design (cached per ``n_a``)."""
        if n_a not in self._ref:
            _, _, pe, _ = kernels.map_de(self.g_node, self.v2c, self.v2c_edge, self.prof,
                                         self.n, self.design.epsilon, n_a, 0.0, self.max_iter,
                                         self.succ_tol, self.stall_tol)
            self._ref[n_a] = float(pe)
        return self._ref[n_a]

    def q(self, r_t: float) -> float:
        return min(self.design.slot_probability(r_t), 1.0)

    def run(self, r_t: float, n_a: int | None = None) -> DeOutcome:
        n_a = self.design.n_a_star if n_a is None else n_a
        if n_a < 1:
            raise ParameterError("at least one active user is required")
        eps = self.design.epsilon
        q = self.q(r_t)
        if self.block:
            args = (self.g_node, self.v2c, self.v2c_edge, self.prof, self.n, eps, n_a, q,
                    self.max_iter, self.succ_tol, self.stall_tol)
            ok, it, pe, _ = kernels.map_de(*args)
            if ok:
                return DeOutcome(True, int(it), float(pe))
            ref = self.reference(n_a)
            return DeOutcome(at_floor(pe, ref, self.succ_tol), int(it), float(pe), ref)
        else:
            ok, it, pe, _, _ = kernels.ldpc_de(self.g_node, self.g_edge, self.l_node,
                                               self.l_edge, self.rho, eps, n_a, q,
                                               self.max_iter, self.succ_tol, self.stall_tol)
        return DeOutcome(bool(ok), int(it), float(pe))

    def run_tandem(self, r_t: float, n_a: int | None = None) -> tuple[DeOutcome, float]:
        """Inner-only recursion to its fixed point, then BEC DE of the outer code."""
        n_a = self.design.n_a_star if n_a is None else n_a
        if n_a < 1:
            raise ParameterError("at least one active user is required")
        if self.block:
            raise ParameterError("tandem recursion is defined for LDPC outer layers")
        one_n = np.array([1.0])
        one_e = np.array([0.0, 1.0])
        _, _, delta, _, _ = kernels.ldpc_de(self.g_node, self.g_edge, one_n, one_e, one_e,
                                            self.design.epsilon, n_a, self.q(r_t),
                                            self.max_iter, self.succ_tol, self.stall_tol)
        ok, it, pe = kernels.bec_de(self.l_node, self.l_edge, self.rho, float(delta),
                                    self.max_iter, self.succ_tol, self.stall_tol)
        return DeOutcome(bool(ok), int(it), float(pe)), float(delta)


def evaluate(design: SystemDesign, r_t: float | None = None, n_a: int | None = None,
             v2c=V2C.EDGE, **kw) -> DeOutcome:
    r = design.r_t if r_t is None else r_t
    return _Evaluator(design, v2c, **kw).run(r, n_a)


@dataclass(frozen=True)
class TandemResult:
    inner_residual: float
    residual: float
    converged: bool


def tandem_recursion(design: SystemDesign, r_t: float | None = None, n_a: int | None = None,
                     **kw) -> TandemResult:
    r = design.r_t if r_t is None else r_t
    out, delta = _Evaluator(design, **kw).run_tandem(r, n_a)
    return TandemResult(delta, out.p_e, out.converged)


# --------------------------------------------------------------------------
# thresholds


class ThresholdFlag(str, enum.Enum):
    OK = "ok"
    AT_CAP = "at-cap"  # converges all the way to R_o / Gamma'(1)
    NO_BRACKET = "no-bracket"  # diverges even at the lower end
    INFEASIBLE = "infeasible"  # requested rate violates R_o / Gamma'(1)


@dataclass(frozen=True)
class ThresholdResult:
    r_t: float
    flag: ThresholdFlag
    evaluations: int
    outcome: DeOutcome | None = None

    @property
    def ok(self) -> bool:
        return self.flag in (ThresholdFlag.OK, ThresholdFlag.AT_CAP)


def threshold_rate(design: SystemDesign, r_lo: float = 0.0, r_hi: float | None = None,
                   rate_tol: float = RATE_TOL, mode: str = "joint", v2c=V2C.EDGE,
                   n_a: int | None = None, **kw) -> ThresholdResult:
    """Largest per-user rate (to ``rate_tol``) at which the recursion converges.

    ``mode`` is ``"joint"`` or ``"tandem"``. The bracket is clamped to
    ``[0, R_o / Gamma'(1)]``.
    """
    ev = _Evaluator(design, v2c, **kw)
    run = ev.run if mode == "joint" else (lambda r, n: ev.run_tandem(r, n)[0])
    cap = design.r_max
    hi = cap if r_hi is None else min(r_hi, cap)
    lo = max(0.0, r_lo)
    calls = 0

    def conv(r):
        nonlocal calls
        calls += 1
        return run(r, n_a).converged

    if design.epsilon >= 1.0 or cap <= 0.0:
        return ThresholdResult(0.0, ThresholdFlag.NO_BRACKET, 0)
    if conv(hi):
        return ThresholdResult(hi, ThresholdFlag.AT_CAP if hi >= cap else ThresholdFlag.OK, calls)
    if not conv(lo):
        return ThresholdResult(0.0, ThresholdFlag.NO_BRACKET, calls)
    while hi - lo > rate_tol:
        mid = 0.5 * (lo + hi)
        if conv(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, ThresholdFlag.OK, calls)


@dataclass(frozen=True)
class UsersResult:
    n_a: int
    flag: ThresholdFlag


def threshold_users(design: SystemDesign, r_t: float | None = None, n_max: int = 10_000,
                    mode: str = "joint", v2c=V2C.EDGE, **kw) -> UsersResult:
    """Largest ``N_a`` (ascending search) whose recursion converges at ``r_t``."""
    r = design.r_t if r_t is None else r_t
    if r is None:
        raise ParameterError("no rate given")
    if r > design.r_max * (1 + Q_SLACK):
        return UsersResult(0, ThresholdFlag.INFEASIBLE)
    ev = _Evaluator(design, v2c, **kw)
    run = ev.run if mode == "joint" else (lambda rr, n: ev.run_tandem(rr, n)[0])
    best = 0
    for n_a in range(1, n_max + 1):
        if not run(r, n_a).converged:
            break
        best = n_a
    else:
        return UsersResult(best, ThresholdFlag.AT_CAP)
    return UsersResult(best, ThresholdFlag.OK)


BUNDLED = ("tableII_eps0", "tableII_eps01", "tableIII_na6", "tableIII_na31")


def bundled_design(name: str, **kw) -> SystemDesign:
    """Load one of the packaged reference designs by stem name."""
    from importlib import resources

    stem = name.removesuffix(".json")
    if stem not in BUNDLED:
        raise ConfigError(f"unknown bundled design {name!r}; choose from {', '.join(BUNDLED)}")
    text = resources.files("tcra").joinpath("data", stem + ".json").read_text()
    return SystemDesign.from_json(json.loads(text), **kw)

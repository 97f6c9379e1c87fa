"""Frame-level Monte Carlo of the two-layer scheme over the adder-erasure channel."""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .density_evolution import BlockOuter, LdpcEnsemble, SystemDesign, Uncoded
from .errors import InfeasiblePatternError, ParameterError
from .gf2codes import LinearBlockCode, build_ldpc, map_erase_decode, tanner_lists
from .polynomials import sample_degrees

ERASED = -1
UNKNOWN = -1
DEGREE_RETRIES = 100


class Decoder(str, enum.Enum):
    JOINT_LDPC = "joint-ldpc"
    JOINT_MAP = "joint-map"
    TANDEM = "tandem"
    INNER_ONLY = "inner-only"


@dataclass(frozen=True)
class FrameConfig:
    n: int  # coded bits per user
    t_slots: int
    n_active: int
    user_seed_base: int = 0
    max_decoder_iters: int = 200

    def __post_init__(self):
        if self.n < 1 or self.n_active < 0:
            raise ParameterError("need n >= 1 and n_active >= 0")
        if self.t_slots < self.n:
            raise ParameterError(f"T={self.t_slots} must be at least n={self.n}")

    @classmethod
    def for_design(cls, design: SystemDesign, n: int, n_active: int, r_t: float | None = None,
                   **kw) -> FrameConfig:
        """Frame length ``T = round(n / R_i)`` with inner rate ``R_i = R_t / R_o``."""
        r = design.r_t if r_t is None else r_t
        if r is None or r <= 0:
            raise ParameterError("a positive per-user rate is needed to size the frame")
        r_i = r / design.r_o
        return cls(n, int(round(n / r_i)), n_active, **kw)


@dataclass(frozen=True)
class TransmissionPattern:
    degrees: np.ndarray  # (n,)
    slots: np.ndarray  # concatenated slot lists, bit i owns slots[ptr[i]:ptr[i+1]]

    @property
    def ptr(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.degrees)])

    def slots_of(self, i: int) -> np.ndarray:
        p = self.ptr
        return self.slots[p[i]:p[i + 1]]


def generate_pattern(user_id: int, gamma, n: int, t_slots: int, seed_base: int = 0,
                     rng: np.random.Generator | None = None) -> TransmissionPattern:
    """Degrees i.i.d. from ``gamma`` and distinct uniformly drawn slots.

    When the degrees need more than ``T`` slots they are all redrawn, at most
    ``DEGREE_RETRIES`` times.
    """
    if rng is None:
        rng = np.random.default_rng([seed_base, user_id])
    for _ in range(DEGREE_RETRIES):
        d = sample_degrees(gamma, n, rng)
        total = int(d.sum())
        if total <= t_slots:
            slots = rng.choice(t_slots, size=total, replace=False).astype(np.int64)
            return TransmissionPattern(d, slots)
    raise InfeasiblePatternError(
        f"user {user_id}: {DEGREE_RETRIES} degree draws all exceeded T={t_slots} slots"
    )


def transmit(codewords, patterns, epsilon: float, t_slots: int,
             rng: np.random.Generator) -> np.ndarray:
    """Per-slot integer sums of the users' bits; erased slots hold ``-1``."""
    r = np.zeros(t_slots, dtype=np.int32)
    for c, p in zip(codewords, patterns):
        np.add.at(r, p.slots, np.repeat(np.asarray(c, dtype=np.int32), p.degrees))
    r[rng.random(t_slots) < epsilon] = ERASED
    return r


# --------------------------------------------------------------------------
# decoding graph


@dataclass
class FrameGraph:
    """CSR adjacency of the whole frame: variables, slots and checks."""

    n_users: int
    n: int
    vs_ptr: np.ndarray
    vs_idx: np.ndarray
    sv_ptr: np.ndarray
    sv_idx: np.ndarray
    vc_ptr: np.ndarray
    vc_idx: np.ndarray
    cv_ptr: np.ndarray
    cv_idx: np.ndarray

    @property
    def edges(self) -> int:
        return int(self.vs_idx.size + self.vc_idx.size)


def _transpose(ptr: np.ndarray, idx: np.ndarray, n_out: int):
    owner = np.repeat(np.arange(ptr.size - 1, dtype=np.int32), np.diff(ptr))
    order = np.argsort(idx, kind="stable")
    counts = np.bincount(idx, minlength=n_out)
    tptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
    return tptr, owner[order].astype(np.int32)


def _i32(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int32)


def frame_graph(patterns, t_slots: int, code: LinearBlockCode | None, use_checks: bool) -> FrameGraph:
    n_users = len(patterns)
    n = patterns[0].degrees.size if patterns else (code.n if code else 0)
    degs = np.concatenate([p.degrees for p in patterns]) if patterns else np.zeros(0, int)
    vs_ptr = np.concatenate([[0], np.cumsum(degs)])
    vs_idx = np.concatenate([p.slots for p in patterns]) if patterns else np.zeros(0, int)
    sv_ptr, sv_idx = _transpose(vs_ptr, vs_idx, t_slots)
    if use_checks and code is not None and code.h.rows > 0:
        rows = tanner_lists(code)
        row_len = np.array([len(r) for r in rows])
        base = np.concatenate(rows).astype(np.int64)
        cv_idx = np.concatenate([base + u * n for u in range(n_users)])
        cv_ptr = np.concatenate([[0], np.cumsum(np.tile(row_len, n_users))])
        vc_ptr, vc_idx = _transpose(cv_ptr, cv_idx, n_users * n)
    else:
        cv_ptr = np.zeros(1, dtype=np.int32)
        cv_idx = np.zeros(0, dtype=np.int32)
        vc_ptr = np.zeros(n_users * n + 1, dtype=np.int32)
        vc_idx = np.zeros(0, dtype=np.int32)
    return FrameGraph(n_users, n, _i32(vs_ptr), _i32(vs_idx), _i32(sv_ptr), _i32(sv_idx),
                      _i32(vc_ptr), _i32(vc_idx), _i32(cv_ptr), _i32(cv_idx))


@dataclass
class DecoderState:
    value: np.ndarray  # per coded bit: 0/1 or -1 while unresolved
    iterations: int = 0
    history: list[float] = field(default_factory=list)  # residual fraction after each iteration
    ops: int = 0

    @property
    def resolved(self) -> np.ndarray:
        return self.value >= 0

    @property
    def residual(self) -> float:
        return float(np.mean(self.value < 0)) if self.value.size else 0.0


def _peel(graph: FrameGraph, r, state: DecoderState, use_time: bool, use_checks: bool,
          max_iters: int) -> int:
    before = int(np.sum(state.value < 0))
    it, hist, ops = kernels.peel(state.value, _i32(r), graph.vs_ptr, graph.vs_idx, graph.sv_ptr,
                                 graph.sv_idx, graph.vc_ptr, graph.vc_idx, graph.cv_ptr,
                                 graph.cv_idx, use_time, use_checks, max_iters)
    total = max(state.value.size, 1)
    left = before
    for newly in np.asarray(hist).tolist():
        left -= int(newly)
        state.history.append(left / total)
    state.iterations += int(it)
    state.ops += int(ops)
    return before - left


def _fresh(graph: FrameGraph) -> DecoderState:
    return DecoderState(np.full(graph.n_users * graph.n, UNKNOWN, dtype=np.int8))


def joint_decode_ldpc(r, patterns, code: LinearBlockCode, t_slots: int,
                      max_iters: int = 200) -> DecoderState:
    """Joint peeling over time nodes and the users' parity checks."""
    g = frame_graph(patterns, t_slots, code, True)
    st = _fresh(g)
    _peel(g, r, st, True, True, max_iters)
    return st


def inner_decode(r, patterns, t_slots: int, max_iters: int = 200) -> DecoderState:
    """Collision resolution alone (time nodes only)."""
    g = frame_graph(patterns, t_slots, None, False)
    st = _fresh(g)
    _peel(g, r, st, True, False, max_iters)
    return st


def _map_pass(code: LinearBlockCode, st: DecoderState, n_users: int) -> int:
    n = code.n
    gained = 0
    for u in range(n_users):
        w = st.value[u * n:(u + 1) * n]
        miss = int(np.sum(w < 0))
        if miss == 0:
            continue
        out = map_erase_decode(code, w)
        if out is not None:
            st.value[u * n:(u + 1) * n] = out
            gained += miss
    return gained


def joint_decode_map(r, patterns, code: LinearBlockCode, t_slots: int,
                     max_iters: int = 200) -> DecoderState:
    """Alternate one time-node round with one block-MAP pass per user."""
    g = frame_graph(patterns, t_slots, None, False)
    st = _fresh(g)
    total = max(st.value.size, 1)
    for _ in range(max_iters):
        mark, its = len(st.history), st.iterations
        gained = _peel(g, r, st, True, False, 1)
        del st.history[mark:]
        st.iterations = its
        gained += _map_pass(code, st, g.n_users)
        if gained == 0:
            break
        st.iterations += 1
        st.history.append(float(np.sum(st.value < 0)) / total)
        if not np.any(st.value < 0):
            break
    return st


def tandem_decode(r, patterns, code: LinearBlockCode | None, t_slots: int,
                  max_iters: int = 200, block_map: bool = False) -> DecoderState:
    """Inner peeling to a fixed point, then one outer decoding per user, no feedback."""
    g = frame_graph(patterns, t_slots, code, code is not None and not block_map)
    st = _fresh(g)
    _peel(g, r, st, True, False, max_iters)
    if code is None:
        return st
    if block_map:
        _map_pass(code, st, g.n_users)
    else:
        _peel(g, r, st, False, True, max_iters)
    return st


# --------------------------------------------------------------------------
# frames and sweeps


@dataclass
class FrameTrace:
    n_a: int
    frame: int
    residual: float
    iterations: int
    history: list[float]
    errors: int  # recovered bits that disagree with the sent bits; always 0

    def to_json(self) -> str:
        return json.dumps({"n_a": self.n_a, "frame": self.frame, "residual": self.residual,
                           "iterations": self.iterations, "history": self.history,
                           "errors": self.errors})


def outer_code(design: SystemDesign, n: int, rng) -> LinearBlockCode | None:
    o = design.outer
    if isinstance(o, LdpcEnsemble):
        return build_ldpc(o.lam, o.rho, n, rng)
    if isinstance(o, BlockOuter):
        if o.code.n != n:
            raise ParameterError(f"block code length {o.code.n} != requested n={n}")
        return o.code
    return None


def default_decoder(design: SystemDesign) -> Decoder:
    if isinstance(design.outer, BlockOuter):
        return Decoder.JOINT_MAP
    if isinstance(design.outer, Uncoded):
        return Decoder.INNER_ONLY
    return Decoder.JOINT_LDPC


def decode(decoder: Decoder, r, patterns, code, t_slots: int, max_iters: int,
           block: bool = False) -> DecoderState:
    """Dispatch to a decoder; ``block`` selects MAP outer decoding for tandem."""
    decoder = Decoder(decoder)
    if decoder is Decoder.INNER_ONLY or code is None:
        return inner_decode(r, patterns, t_slots, max_iters)
    if decoder is Decoder.JOINT_LDPC:
        return joint_decode_ldpc(r, patterns, code, t_slots, max_iters)
    if decoder is Decoder.JOINT_MAP:
        return joint_decode_map(r, patterns, code, t_slots, max_iters)
    return tandem_decode(r, patterns, code, t_slots, max_iters, block_map=block)


@dataclass
class Frame:
    codewords: list
    patterns: list
    r: np.ndarray


def make_frame(design: SystemDesign, cfg: FrameConfig, code: LinearBlockCode | None,
               frame_seed) -> Frame:
    rng = np.random.default_rng(frame_seed)
    seed_base = int(rng.integers(2**63))
    pats = [generate_pattern(u, design.gamma, cfg.n, cfg.t_slots, seed_base)
            for u in range(cfg.n_active)]
    if code is None:
        words = [rng.integers(0, 2, cfg.n).astype(np.int8) for _ in range(cfg.n_active)]
    else:
        words = [code.random_codeword(rng) for _ in range(cfg.n_active)]
    r = transmit(words, pats, design.epsilon, cfg.t_slots, rng)
    return Frame(words, pats, r)


def run_frame(design: SystemDesign, cfg: FrameConfig, code, decoder, frame_seed,
              frame_index: int = 0) -> FrameTrace:
    fr = make_frame(design, cfg, code, frame_seed)
    if cfg.n_active == 0:
        return FrameTrace(0, frame_index, 0.0, 0, [], 0)
    st = decode(decoder, fr.r, fr.patterns, code, cfg.t_slots, cfg.max_decoder_iters,
                block=isinstance(design.outer, BlockOuter))
    sent = np.concatenate(fr.codewords)
    ok = st.value >= 0
    errors = int(np.sum(st.value[ok] != sent[ok]))
    if errors:
        raise AssertionError(f"{errors} recovered bits differ from the transmitted bits")
    return FrameTrace(cfg.n_active, frame_index, st.residual, st.iterations, st.history, errors)


@dataclass
class SweepRow:
    n_a: int
    frames: int
    mean_residual: float
    std: float
    mean_iters: float


def _frame_job(args):
    return run_frame(*args)


def run_sweep(design: SystemDesign, n: int, n_a_values, frames: int, seed: int,
              decoder: Decoder | None = None, r_t: float | None = None,
              t_slots: int | None = None, max_iters: int = 200, threads: int = 1,
              trace=None) -> list[SweepRow]:
    """Residual-erasure statistics per active-user count.

    One outer code instance is drawn per sweep point and reused across its
    frames; every frame draws from its own ``(seed, N_a, frame)`` stream.
    """
    decoder = default_decoder(design) if decoder is None else Decoder(decoder)
    rows = []
    workers = (os.cpu_count() or 1) if threads == 0 else threads
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for n_a in n_a_values:
            if t_slots is None:
                cfg = FrameConfig.for_design(design, n, n_a, r_t, max_decoder_iters=max_iters)
            else:
                cfg = FrameConfig(n, t_slots, n_a, max_decoder_iters=max_iters)
            code = outer_code(design, n, np.random.default_rng([seed, n_a, 1 << 30]))
            jobs = [(design, cfg, code, decoder, [seed, n_a, f], f) for f in range(frames)]
            traces = list(pool.map(_frame_job, jobs)) if pool else [_frame_job(j) for j in jobs]
            res = np.array([t.residual for t in traces])
            its = np.array([t.iterations for t in traces])
            if trace is not None:
                for t in traces:
                    trace.write(t.to_json() + "\n")
            std = float(res.std(ddof=1)) if frames > 1 else 0.0
            rows.append(SweepRow(n_a, frames, float(res.mean()) if frames else math.nan, std,
                                 float(its.mean()) if frames else math.nan))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows

"""Randomized nested-code design.

Stage 1 draws observation matrices uniformly and keeps the candidate whose
truncated distance spectrum tolerates the largest BSC crossover at the target
block-error probability (ties keep the latest candidate, matching the ">="
update of the search listing).  Stage 2 extends the encoder by random column
blocks and keeps the candidate with the largest free distance, breaking ties
toward the smaller multiplicity.  The nested procedure chains stage 1, a
Monte Carlo crossover calibration, and incremental stage-2 extensions until
the measured distortion fits the budget (p_c - p_A)/(1 - 2 p_A), then prunes
rate by freezing time steps of the last added input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import distortion_limit, solve_crossover
from .encoder import (
    EncoderSpec,
    FreezingSchedule,
    TailbitingCode,
    append_input_column,
)
from .gf2 import BitMatrix, sample_uniform_matrix
from .keyagree import NestedCodePair
from .simulate import (
    STREAM_FEC_CAND,
    STREAM_FREEZE,
    STREAM_VQ_CAND,
    CalibrationError,
    StopRule,
    calibrate_pc,
    seed_key,
    simulate_distortion,
)
from .trellis import WeightSpectrum, free_distance, weight_enumerator
from .wava import WavaConfig


class DesignFailure(RuntimeError):
    """A search or budget step could not produce a usable code."""


def default_spectrum_truncation(m: int, n: int, n_block: int) -> int:
    """Truncation weight for design loops: min(N, 4mn)."""
    return min(n_block, 4 * m * n)


@dataclass(frozen=True)
class FecSearchConfig:
    n: int
    m: int
    K_fec: int
    target_pb: float
    w_max: int
    seed: int | Sequence[int] = 0
    d_max: int | None = None

    def __post_init__(self) -> None:
        if self.w_max < 1:
            raise ValueError(f"need w_max >= 1, got {self.w_max}")
        if not 0.0 < self.target_pb < 1.0:
            raise ValueError(f"target_pb must be in (0, 1), got {self.target_pb}")
        if self.K_fec < self.m:
            raise ValueError(f"need K_fec >= m for tailbiting, got {self.K_fec} < {self.m}")

    @property
    def n_block(self) -> int:
        return self.n * self.K_fec

    @property
    def truncation(self) -> int:
        if self.d_max is not None:
            return self.d_max
        return default_spectrum_truncation(self.m, self.n, self.n_block)


@dataclass(frozen=True)
class FecSearchResult:
    C: BitMatrix
    p_c: float
    spectrum: WeightSpectrum
    code: TailbitingCode
    candidate_log: tuple[tuple[int, float | None], ...]
    skipped: int
    p_c_recheck: float
    recheck_moved: bool


def search_fec(cfg: FecSearchConfig) -> FecSearchResult:
    """Random search for the observation matrix of a rate-1/n subcode."""
    key = seed_key(cfg.seed)
    best_pc = -1.0
    best: tuple[BitMatrix, WeightSpectrum, TailbitingCode] | None = None
    log: list[tuple[int, float | None]] = []
    skipped = 0
    for w in range(1, cfg.w_max + 1):
        c_mat = sample_uniform_matrix(cfg.n, cfg.m, key + (STREAM_FEC_CAND, w))
        spec = EncoderSpec.rate_one_over_n(c_mat)
        code = TailbitingCode.unfrozen(spec, cfg.K_fec)
        spectrum = weight_enumerator(code, cfg.truncation)
        if spectrum.a(0) != 1 or spectrum.d_min() is None:
            # non-injective (a nonzero message encodes to zero) or no
            # low-weight mass to bound with: unusable candidate
            log.append((w, None))
            skipped += 1
            continue
        p_c = solve_crossover(spectrum, cfg.target_pb)
        log.append((w, p_c))
        if p_c >= best_pc:
            best_pc = p_c
            best = (c_mat, spectrum, code)
    if best is None:
        raise DesignFailure(
            f"all {cfg.w_max} candidates were degenerate (non-injective or weightless)"
        )
    c_mat, spectrum, code = best
    # re-verify the winner at doubled truncation; a moving solution means the
    # dropped high-weight mass mattered
    d2 = min(cfg.n_block, 2 * cfg.truncation)
    p2 = best_pc
    if d2 > cfg.truncation:
        p2 = solve_crossover(weight_enumerator(code, d2), cfg.target_pb)
    moved = abs(p2 - best_pc) > 0.01 * best_pc
    return FecSearchResult(c_mat, best_pc, spectrum, code, tuple(log), skipped, p2, moved)


@dataclass(frozen=True)
class VqSearchConfig:
    m: int
    k_vq: int
    k_fec: int
    w_max: int
    seed: int | Sequence[int] = 0
    C: BitMatrix = None          # n x m
    B_tilde_s: BitMatrix = None  # m x (k_fec - 1)
    D_tilde_s: BitMatrix = None  # n x (k_fec - 1)

    def __post_init__(self) -> None:
        if not 1 <= self.k_fec < self.k_vq:
            raise ValueError(f"need k_vq > k_fec >= 1, got {self.k_vq}, {self.k_fec}")
        if self.w_max < 1:
            raise ValueError(f"need w_max >= 1, got {self.w_max}")
        for name, mat, shape in (
            ("C", self.C, (None, self.m)),
            ("B_tilde_s", self.B_tilde_s, (self.m, self.k_fec - 1)),
            ("D_tilde_s", self.D_tilde_s, (None, self.k_fec - 1)),
        ):
            if mat is None:
                raise ValueError(f"{name} matrix is required")
            if shape[0] is not None and mat.nrows != shape[0]:
                raise ValueError(f"{name} must have {shape[0]} rows, got {mat.nrows}")
            if mat.ncols != shape[1]:
                raise ValueError(f"{name} must have {shape[1]} columns, got {mat.ncols}")

    @property
    def n(self) -> int:
        return self.C.nrows


@dataclass(frozen=True)
class VqSearchResult:
    B_tilde_q: BitMatrix
    D_tilde_q: BitMatrix
    d_free: int
    a_free: float  # inf when the winner's multiplicity diverges
    spec: EncoderSpec
    candidate_log: tuple[tuple[int, int, float], ...]


def _extend_spec(cfg: VqSearchConfig, b_block: BitMatrix, d_block: BitMatrix) -> EncoderSpec:
    spec = EncoderSpec(
        m=cfg.m, k=cfg.k_fec, n=cfg.n,
        B_tilde=cfg.B_tilde_s, C=cfg.C, D_tilde=cfg.D_tilde_s,
    )
    for j in range(b_block.ncols):
        spec = append_input_column(spec, b_block.column(j), d_block.column(j))
    return spec


def search_vq_extension(cfg: VqSearchConfig) -> VqSearchResult:
    """Random column-block search for a supercode with large free distance."""
    key = seed_key(cfg.seed)
    cols = cfg.k_vq - cfg.k_fec
    zero_b = BitMatrix.zeros(cfg.m, cols)
    zero_d = BitMatrix.zeros(cfg.n, cols)
    best_b, best_d = zero_b, zero_d
    best_dfree = 0
    best_afree = 0.0
    log: list[tuple[int, int, float]] = []
    for w in range(1, cfg.w_max + 1):
        rng = np.random.default_rng(key + (STREAM_VQ_CAND, w))
        b_block = sample_uniform_matrix(cfg.m, cols, rng)
        d_block = sample_uniform_matrix(cfg.n, cols, rng)
        spec = _extend_spec(cfg, b_block, d_block)
        rep = free_distance(spec)
        a = math.inf if (rep.divergent or rep.a_free is None) else float(rep.a_free)
        log.append((w, rep.d_free, a))
        if rep.d_free > best_dfree or (rep.d_free == best_dfree and a < best_afree):
            best_dfree = rep.d_free
            best_afree = a
            best_b, best_d = b_block, d_block
    spec = _extend_spec(cfg, best_b, best_d)
    return VqSearchResult(
        B_tilde_q=spec.B_tilde,
        D_tilde_q=spec.D_tilde,
        d_free=best_dfree,
        a_free=best_afree,
        spec=spec,
        candidate_log=tuple(log),
    )


def _evenly_spaced_steps(ell: int, count: int) -> list[int]:
    return sorted({(j * ell) // count for j in range(count)}) if count else []


def _frozen_code(spec: EncoderSpec, ell: int, freeze_steps: Sequence[int]) -> TailbitingCode:
    last = spec.k - 1
    steps = set(freeze_steps)
    frozen = [frozenset({last}) if t in steps else frozenset() for t in range(ell)]
    return TailbitingCode(spec, FreezingSchedule(ell, tuple(frozen)))


@dataclass(frozen=True)
class NestedDesignReport:
    p_c_union: float
    p_c_sim: float
    q_max: float
    q_bar: float
    extension_log: tuple[dict, ...]
    frozen_steps: int
    calibration_log: tuple[dict, ...]
    fec: FecSearchResult


def design_nested(
    p_A: float,
    target_pb: float,
    K_fec: int,
    n: int,
    m: int,
    seed: int | Sequence[int] = 0,
    w_max: int = 1000,
    V: int = 4,
    stop: StopRule = StopRule(),
    distortion_trials: int = 4096,
    workers: int = 1,
) -> tuple[NestedCodePair, NestedDesignReport]:
    """Full nested design: subcode search, crossover calibration, incremental
    quantizer extension, and last-input freezing refinement.

    Deterministic in (arguments, seed).  Raises DesignFailure when the target
    is unreachable or the distortion budget cannot be met at rate 1.
    """
    key = seed_key(seed)
    cfg = WavaConfig(max_iterations=V)

    fec = search_fec(FecSearchConfig(
        n=n, m=m, K_fec=K_fec, target_pb=target_pb, w_max=w_max, seed=key,
    ))
    ell = K_fec

    try:
        p_c_sim, calib_log = calibrate_pc(
            fec.code, target_pb, p_A, cfg, stop, key, workers=workers
        )
    except CalibrationError as exc:
        raise DesignFailure(f"crossover calibration failed: {exc}") from exc
    q_max = distortion_limit(p_c_sim, p_A)

    # grow one input at a time until the measured distortion fits the budget
    spec = fec.code.spec
    ext_log: list[dict] = []
    chosen: TailbitingCode | None = None
    q_bar = math.inf
    for k_target in range(2, n + 1):
        res = search_vq_extension(VqSearchConfig(
            m=m, k_vq=k_target, k_fec=k_target - 1, w_max=w_max,
            seed=key + (k_target,),
            C=spec.C, B_tilde_s=spec.B_tilde, D_tilde_s=spec.D_tilde,
        ))
        spec = res.spec
        code = TailbitingCode.unfrozen(spec, ell)
        rep = simulate_distortion(code, cfg, distortion_trials,
                                  key + (k_target,), workers)
        ext_log.append({
            "k": k_target, "d_free": res.d_free, "a_free": res.a_free,
            "q_bar": rep.estimate, "q_halfwidth": rep.confidence_halfwidth,
        })
        if rep.estimate <= q_max:
            chosen = code
            q_bar = rep.estimate
            break
    if chosen is None:
        raise DesignFailure(
            f"distortion budget q_max={q_max:.6g} unreachable even at rate 1 "
            f"(k_vq = n = {n}); last measured q_bar={ext_log[-1]['q_bar']:.6g}"
        )

    # freeze as many time steps of the last added input as the budget allows;
    # distortion grows as the codebook shrinks, so binary-search the boundary
    def q_of(f: int) -> float:
        c = _frozen_code(spec, ell, _evenly_spaced_steps(ell, f))
        return simulate_distortion(
            c, cfg, distortion_trials, key + (STREAM_FREEZE, f), workers
        ).estimate

    lo, hi = 0, ell - 1
    q_lo = q_bar
    while lo < hi:
        mid = (lo + hi + 1) // 2
        qm = q_of(mid)
        if qm <= q_max:
            lo, q_lo = mid, qm
        else:
            hi = mid - 1
    final_code = _frozen_code(spec, ell, _evenly_spaced_steps(ell, lo)) if lo else chosen
    q_bar = q_lo

    report = NestedDesignReport(
        p_c_union=fec.p_c,
        p_c_sim=p_c_sim,
        q_max=q_max,
        q_bar=q_bar,
        extension_log=tuple(ext_log),
        frozen_steps=lo,
        calibration_log=tuple(calib_log),
        fec=fec,
    )
    pair = NestedCodePair(final_code, provenance={
        "seed": list(key),
        "w_max": w_max,
        "n": n, "m": m, "K_fec": K_fec,
        "p_A": p_A, "target_pb": target_pb,
        "p_c_union_bound": fec.p_c,
        "p_c_simulated": p_c_sim,
        "q_max": q_max,
        "q_bar": q_bar,
        "frozen_steps": lo,
        "extensions": list(ext_log),
        "fec_spectrum_head": dict(fec.spectrum.items()[:16]),
    })
    return pair, report

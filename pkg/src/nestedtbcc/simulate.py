"""Seeded Monte Carlo experiments and evaluation reports.

Randomness is drawn per fixed-size chunk of trials from a stream keyed by
(master seed, stream id, chunk index), and early stopping cuts at an exact
trial index, so every estimate is a pure function of (inputs, seed) no matter
how chunks are scheduled across workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .bounds import ComplexityEstimate, complexity_estimates, gs_region_point, key_storage_ratio
from .encoder import TailbitingCode, encode_many
from .gf2 import BitVector, as_generator
from .keyagree import NestedCodePair, enroll_many, reconstruct_many
from .trellis import build_trellis
from .wava import WavaConfig, wava_decode_many

# chunk size is part of the sampling definition; do not make it configurable
CHUNK = 4096

# stream ids keeping every consumer of a master seed independent
STREAM_FEC_CAND = 1
STREAM_VQ_CAND = 2
STREAM_FER = 3
STREAM_DISTORTION = 4
STREAM_E2E = 5
STREAM_CALIBRATION = 6
STREAM_FREEZE = 7


def seed_key(seed: int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def chunk_rng(key: tuple[int, ...], stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(key + (stream, chunk))


@dataclass(frozen=True)
class StopRule:
    """Stop at target_errors observed events or max_trials, whichever first."""

    max_trials: int = 10_000_000
    target_errors: int = 50

    def __post_init__(self) -> None:
        if self.max_trials < 1 or self.target_errors < 1:
            raise ValueError("stopping rule needs positive trial and error targets")


@dataclass(frozen=True)
class TrialReport:
    """A Monte Carlo point estimate with normal-approximation 95% interval.

    event_count is the number of error events for error-rate experiments and
    the sum of per-trial distortions for distortion experiments; estimate is
    always event_count / trials.
    """

    estimate: float
    trials: int
    event_count: float
    confidence_halfwidth: float
    seed: tuple[int, ...]
    wallclock: float


def bsc_sample(n_bits: int, p: float, rng_state) -> BitVector:
    """An i.i.d. Bernoulli(p) flip pattern, deterministic in rng_state."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover must be in [0, 1], got {p}")
    rng = as_generator(rng_state)
    bits = (rng.random(n_bits) < p).astype(np.uint8)
    return BitVector.from_bits(bits.tolist())


def _run_counting(
    trial_fn: Callable[[int, int], np.ndarray],
    stop: StopRule,
    key: tuple[int, ...],
    workers: int,
) -> tuple[int, int, float]:
    """Drive chunks of Bernoulli trials until the stop rule cuts.

    trial_fn(chunk_index, count) returns a bool error array for that chunk.
    Returns (trials_used, errors, wallclock).
    """
    t0 = time.perf_counter()
    total_trials = 0
    total_errors = 0

    def spans() -> Iterable[tuple[int, int]]:
        done = 0
        i = 0
        while done < stop.max_trials:
            c = min(CHUNK, stop.max_trials - done)
            yield i, c
            done += c
            i += 1

    def finish() -> tuple[int, int, float]:
        return total_trials, total_errors, time.perf_counter() - t0

    gen = spans()
    if workers <= 1:
        batches: Iterable[np.ndarray] = (trial_fn(i, c) for i, c in gen)
    else:
        ex = ThreadPoolExecutor(max_workers=workers)
        batches = ex.map(lambda ic: trial_fn(*ic), gen)
    try:
        for errs in batches:
            c = len(errs)
            n_err = int(errs.sum())
            if total_errors + n_err >= stop.target_errors:
                cum = np.cumsum(errs)
                cut = int(np.searchsorted(cum, stop.target_errors - total_errors))
                total_trials += cut + 1
                total_errors += int(cum[cut])
                return finish()
            total_trials += c
            total_errors += n_err
        return finish()
    finally:
        if workers > 1:
            ex.shutdown(wait=False, cancel_futures=True)


def _rate_report(trials: int, errors: int, key, wallclock: float) -> TrialReport:
    est = errors / trials
    hw = 1.96 * math.sqrt(max(est * (1.0 - est), 0.0) / trials)
    return TrialReport(est, trials, float(errors), hw, key, wallclock)


def simulate_fer(
    code: TailbitingCode,
    p_c: float,
    cfg: WavaConfig | None = None,
    stop: StopRule = StopRule(),
    seed: int | Sequence[int] = 0,
    workers: int = 1,
) -> TrialReport:
    """Block-error rate of WAVA decoding over a BSC(p_c).

    Random messages are transmitted (the zero codeword would bias the
    tie-breaking); an error is any decoded-message mismatch.
    """
    if not 0.0 <= p_c <= 1.0:
        raise ValueError(f"crossover must be in [0, 1], got {p_c}")
    key = seed_key(seed)
    trellis = build_trellis(code)

    def trial_fn(i: int, count: int) -> np.ndarray:
        rng = chunk_rng(key, STREAM_FER, i)
        msgs = rng.integers(0, 2, size=(count, code.K), dtype=np.uint8)
        flips = (rng.random((count, code.N)) < p_c).astype(np.uint8)
        r = encode_many(code, msgs) ^ flips
        res = wava_decode_many(trellis, r, cfg)
        return (res.msg_bits != msgs).any(axis=1)

    trials, errors, wall = _run_counting(trial_fn, stop, key, workers)
    return _rate_report(trials, errors, key, wall)


def simulate_distortion(
    vq_code: TailbitingCode,
    cfg: WavaConfig | None = None,
    trials: int = CHUNK,
    seed: int | Sequence[int] = 0,
    workers: int = 1,
) -> TrialReport:
    """Average quantization distortion of Bern(1/2) words, d_H(x, x_q)/N."""
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    key = seed_key(seed)
    trellis = build_trellis(vq_code)
    t0 = time.perf_counter()

    def chunk_values(i: int, count: int) -> np.ndarray:
        rng = chunk_rng(key, STREAM_DISTORTION, i)
        x = (rng.random((count, vq_code.N)) < 0.5).astype(np.uint8)
        res = wava_decode_many(trellis, x, cfg)
        return res.distance / vq_code.N

    spans = []
    done = 0
    while done < trials:
        spans.append((len(spans), min(CHUNK, trials - done)))
        done += spans[-1][1]
    if workers <= 1:
        parts = [chunk_values(i, c) for i, c in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda ic: chunk_values(*ic), spans))
    values = np.concatenate(parts)
    est = float(values.mean())
    sd = float(values.std(ddof=1)) if trials > 1 else 0.0
    hw = 1.96 * sd / math.sqrt(trials)
    return TrialReport(est, trials, float(values.sum()), hw, key, time.perf_counter() - t0)


def simulate_end_to_end(
    pair: NestedCodePair,
    p_A: float,
    cfg: WavaConfig | None = None,
    stop: StopRule = StopRule(),
    seed: int | Sequence[int] = 0,
    workers: int = 1,
) -> TrialReport:
    """Key-mismatch rate of the full enroll/measure/reconstruct pipeline."""
    if not 0.0 <= p_A <= 1.0:
        raise ValueError(f"crossover must be in [0, 1], got {p_A}")
    key = seed_key(seed)

    def trial_fn(i: int, count: int) -> np.ndarray:
        rng = chunk_rng(key, STREAM_E2E, i)
        x = (rng.random((count, pair.N)) < 0.5).astype(np.uint8)
        flips = (rng.random((count, pair.N)) < p_A).astype(np.uint8)
        s_bits, w_bits, _ = enroll_many(pair, x, cfg)
        s_hat = reconstruct_many(pair, x ^ flips, w_bits, cfg)
        return (s_hat != s_bits).any(axis=1)

    trials, errors, wall = _run_counting(trial_fn, stop, key, workers)
    return _rate_report(trials, errors, key, wall)


class CalibrationError(RuntimeError):
    """The target block-error probability is not met even at p = p_A."""

    def __init__(self, msg: str, log: list):
        super().__init__(msg)
        self.log = log


def calibrate_pc(
    code: TailbitingCode,
    target_pb: float,
    p_A: float,
    cfg: WavaConfig | None = None,
    stop: StopRule = StopRule(),
    seed: int | Sequence[int] = 0,
    probes: int = 10,
    workers: int = 1,
) -> tuple[float, list[dict]]:
    """Largest probed crossover at which the code meets target_pb with 95%
    confidence, by bisection on [p_A, 0.5].

    A probe passes when the upper 95% bound of its estimate (rule of three
    when no errors were seen) is at most the target.  Each probe runs to
    target_errors or to a trial budget just large enough to certify a pass.
    """
    if not 0.0 < target_pb < 1.0:
        raise ValueError(f"target must be in (0, 1), got {target_pb}")
    key = seed_key(seed)
    log: list[dict] = []
    probe_stop = StopRule(
        max_trials=min(stop.max_trials, max(int(math.ceil(30.0 / target_pb)), 100)),
        target_errors=stop.target_errors,
    )

    def probe(i: int, p: float) -> bool:
        if p == 0.0:
            # the decoder is idempotent on codewords: the error rate is exactly 0
            log.append({"p": 0.0, "estimate": 0.0, "trials": 0, "errors": 0.0,
                        "upper95": 0.0, "passed": True})
            return True
        rep = simulate_fer(code, p, cfg, probe_stop, key + (STREAM_CALIBRATION, i), workers)
        if rep.event_count > 0:
            upper = rep.estimate + rep.confidence_halfwidth
        else:
            upper = 3.0 / rep.trials
        ok = upper <= target_pb
        log.append({
            "p": p, "estimate": rep.estimate, "trials": rep.trials,
            "errors": rep.event_count, "upper95": upper, "passed": ok,
        })
        return ok

    lo, hi = p_A, 0.5
    if not probe(0, lo):
        raise CalibrationError(
            f"target P_B={target_pb} unreachable even at p_A={p_A}", log
        )
    if probe(1, hi):
        return hi, log
    for i in range(2, probes):
        mid = 0.5 * (lo + hi)
        if probe(i, mid):
            lo = mid
        else:
            hi = mid
    return lo, log


@dataclass(frozen=True)
class EvaluationRow:
    """One summary row for a designed pair (rates exact, rest simulated)."""

    m: int
    R_fec: Fraction
    p_c: float
    q_bar: float
    R_vq: Fraction
    R_w: Fraction
    helper_bits: int
    ratio: Fraction
    complexity_fec: ComplexityEstimate
    complexity_vq: ComplexityEstimate

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "R_fec": float(self.R_fec),
            "p_c": self.p_c,
            "q_bar": self.q_bar,
            "R_vq": float(self.R_vq),
            "R_w": float(self.R_w),
            "helper_bits": self.helper_bits,
            "ratio": float(self.ratio),
            "complexity_fec_log2": self.complexity_fec.log2_min,
            "complexity_fec_kind": self.complexity_fec.kind,
            "complexity_vq_log2": self.complexity_vq.log2_min,
            "complexity_vq_kind": self.complexity_vq.kind,
        }


def derived_rate_fields(n_block: int, k_fec: int, k_vq: int) -> tuple[Fraction, Fraction, int, Fraction]:
    """(R_vq, R_w, helper_bits, ratio) from exact dimensions."""
    if k_vq <= k_fec:
        raise ValueError(f"need K_vq > K_fec, got {k_vq} <= {k_fec}")
    r_vq = Fraction(k_vq, n_block)
    r_w = Fraction(k_vq - k_fec, n_block)
    helper_bits = math.ceil(n_block * r_w)
    return r_vq, r_w, helper_bits, key_storage_ratio(k_fec, k_vq)


def evaluate(
    pair: NestedCodePair,
    p_A: float,
    target_pb: float,
    V: int = 4,
    seed: int | Sequence[int] = 0,
    stop: StopRule = StopRule(),
    distortion_trials: int = CHUNK,
    workers: int = 1,
) -> EvaluationRow:
    """Assemble the full evaluation row for a nested pair."""
    cfg = WavaConfig(max_iterations=V)
    n = pair.vq_code.spec.n
    m = pair.vq_code.spec.m
    p_c, _ = calibrate_pc(pair.fec_code, target_pb, 0.0, cfg, stop, seed, workers=workers)
    q_bar = simulate_distortion(pair.vq_code, cfg, distortion_trials, seed, workers).estimate
    r_vq, r_w, helper_bits, ratio = derived_rate_fields(pair.N, pair.K_fec, pair.K_vq)
    k_vq_eq = math.ceil(n * r_vq)
    return EvaluationRow(
        m=m,
        R_fec=Fraction(pair.K_fec, pair.N),
        p_c=p_c,
        q_bar=q_bar,
        R_vq=r_vq,
        R_w=r_w,
        helper_bits=helper_bits,
        ratio=ratio,
        complexity_fec=complexity_estimates(pair.N, n, 1, m, V),
        complexity_vq=complexity_estimates(pair.N, n, k_vq_eq, m, V),
    )


def region_curve(p_A: float, q_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    """Boundary points (q, R_s, R_w) of the binary GS region."""
    rows = []
    for q in q_grid:
        pt = gs_region_point(p_A, q)
        rows.append((float(q), pt.R_s, pt.R_w))
    return rows


def region_aux_series(
    p_A: float, q_grid: Sequence[float], n_block: int | None = None
) -> dict[str, list[tuple[float, float]]]:
    """Reference curves for rate-region plots, keyed by series name.

    Points are (x, y) pairs: the boundary and converse series use x = R_w,
    y = R_s; the quantizer series use x = q, y = rate.
    """
    from .bounds import quantizer_rate_approx

    series: dict[str, list[tuple[float, float]]] = {}
    series["gs_boundary"] = [(r_w, r_s) for _, r_s, r_w in region_curve(p_A, q_grid)]
    series["sw_line"] = [(w, 1.0 - w) for w in np.linspace(0.0, 1.0, len(q_grid) or 2)]
    if n_block is not None:
        approx = []
        converse = []
        for q in q_grid:
            if 0.0 < q <= 0.5:
                approx.append((float(q), quantizer_rate_approx(n_block, q)))
            j_max = min(n_block, int(math.floor(n_block * q + 1e-9)))
            lhs = sum(math.comb(n_block, j) for j in range(j_max + 1))
            converse.append((float(q), 1.0 - math.log2(lhs) / n_block))
        series["quantizer_rate_approx"] = approx
        series["quantizer_converse_min_rate"] = converse
    return series

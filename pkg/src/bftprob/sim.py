"""Seeded happy-path simulator used as the Monte Carlo oracle.

Phase-stepped, no time axis: each request walks the protocol's message
pattern, dropping every point-to-point delivery independently with p_l and
drawing one crash Bernoulli per process per chain step with p_c.  A crash
drawn at step i removes the process from every later phase's sender and
receiver sets; quorum counting follows the analytic models exactly (own
messages and the pre-prepare count where the protocol says they do).

Determinism: requests are simulated in fixed-size chunks; each chunk draws
from a Philox stream keyed by blake2b(seed, chunk index), and every chunk
consumes a fixed, canonical layout of uniforms (maximal message rectangles,
masked afterwards).  Results are therefore bit-identical regardless of
evaluation order, thread count, or which subset of requests is inspected.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
import struct
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .prob import DomainError, FailureParams, normal_quantile
from .protocols import (
    BFT_SMART,
    PBFT,
    SBFT,
    ZYZZYVA,
    PhaseTrace,
    ProtocolConfig,
    model_trace,
)

__all__ = [
    "CHUNK",
    "SimConfig",
    "SimRecord",
    "PhaseStat",
    "CampaignStats",
    "CheckRow",
    "ModelCheck",
    "simulate_request",
    "run_campaign",
    "compare_to_model",
    "validate_model",
]

# Requests per RNG chunk.  Part of the stream layout: changing it changes
# the draws assigned to each request.
CHUNK = 1 << 14

PATH_NAMES = ("none", "happy", "fast", "slow")


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: protocol config, failure rates, size, seed."""

    config: ProtocolConfig
    failures: FailureParams
    requests: int
    seed: int
    record_phase_detail: bool = False
    confidence: float = 0.99

    def __post_init__(self) -> None:
        if self.requests < 1:
            raise DomainError(f"requests must be >= 1, got {self.requests}")
        if not 0.0 < self.confidence < 1.0:
            raise DomainError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class SimRecord:
    """Per-request outcome: how far each replica got, where it crashed."""

    request_id: int
    highest_phase: np.ndarray  # per replica, index into phase_names
    crash_step: np.ndarray  # chain step of the removing crash draw, -1 if none
    phase_names: tuple[str, ...]
    path: str
    success_quorum: bool  # final count reached 2f+1 (or a path completed)
    success_liveness: bool  # final count reached f+1


@dataclass(frozen=True)
class PhaseStat:
    name: str
    mean: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class CampaignStats:
    """Aggregated campaign results with confidence intervals."""

    sim: SimConfig
    phase_stats: tuple[PhaseStat, ...]
    final_phase: str
    final_counts: np.ndarray  # empirical pmf of the final phase count
    success: Mapping[str, float]
    success_ci: Mapping[str, tuple[float, float]]
    interval_type: str = "normal+continuity"

    def __post_init__(self) -> None:
        object.__setattr__(self, "success", MappingProxyType(dict(self.success)))
        object.__setattr__(self, "success_ci", MappingProxyType(dict(self.success_ci)))

    def stat(self, name: str) -> PhaseStat:
        for st in self.phase_stats:
            if st.name == name:
                return st
        raise KeyError(name)


@dataclass(frozen=True)
class CheckRow:
    name: str
    predicted: float
    observed: float
    ci_lo: float
    ci_hi: float
    covered: bool


@dataclass(frozen=True)
class ModelCheck:
    """Model prediction vs campaign frequency, phase by phase."""

    sim: SimConfig
    rows: tuple[CheckRow, ...]
    coverage: float


def _chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    packed = struct.pack("<QQ", seed & 0xFFFFFFFFFFFFFFFF, chunk_index)
    digest = hashlib.blake2b(packed, digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mask_self(delivered: np.ndarray, sender_offset: int) -> None:
    # delivered has shape (G, senders, n); sender s is replica s+offset.
    for s in range(delivered.shape[1]):
        delivered[:, s, s + sender_offset] = False


class _ChunkResult:
    """Raw per-request arrays for one chunk."""

    def __init__(
        self,
        values: dict[str, np.ndarray],
        final_name: str,
        success: dict[str, np.ndarray],
        path: np.ndarray,
        highest: np.ndarray | None,
        crash: np.ndarray | None,
        phase_names: tuple[str, ...],
    ) -> None:
        self.values = values
        self.final_name = final_name
        self.success = success
        self.path = path
        self.highest = highest
        self.crash = crash
        self.phase_names = phase_names


def _detail_from_sets(
    sets: list[tuple[np.ndarray, int]], crash_draws: list[tuple[np.ndarray, np.ndarray, int]]
) -> tuple[np.ndarray, np.ndarray]:
    """Highest phase per replica from membership sets, crash step from draws.

    sets: (membership (G, n) bool, phase index) in chain order.
    crash_draws: (was-member (G, n), crashed (G, n), step index).
    """
    g, n = sets[0][0].shape
    highest = np.zeros((g, n), dtype=np.int8)
    for member, phase_idx in sets:
        highest = np.where(member, np.int8(phase_idx), highest)
    crash = np.full((g, n), -1, dtype=np.int8)
    for was_member, crashed, step in crash_draws:
        hit = was_member & crashed & (crash < 0)
        crash = np.where(hit, np.int8(step), crash)
    return highest, crash


def _pbft_chunk(cfg: ProtocolConfig, fp: FailureParams, rng: np.random.Generator,
                g: int, detail: bool) -> _ChunkResult:
    n, f = cfg.n, cfg.f
    pl, pc = fp.p_l, fp.p_c
    th = cfg.thresholds()

    u_pp = rng.random((g, n - 1))
    u_cr1 = rng.random((g, n - 1))
    u_prep = rng.random((g, n - 1, n))
    u_cr2 = rng.random((g, n))
    u_com = rng.random((g, n, n))
    u_cr3 = rng.random((g, n))

    got_pp = u_pp >= pl  # replicas 1..n-1
    cr1 = u_cr1 < pc
    n1 = got_pp & ~cr1

    delivered = n1[:, :, None] & (u_prep >= pl)
    _mask_self(delivered, sender_offset=1)
    cnt = delivered.sum(axis=1)
    c2_repl = n1 & (cnt[:, 1:] >= max(th["prepare_from_others"], 0))
    cp = cnt[:, 0] >= th["primary_prepare"]
    c2 = np.concatenate([cp[:, None], c2_repl], axis=1)
    cr2 = u_cr2 < pc
    n2 = c2 & ~cr2

    delivered3 = n2[:, :, None] & (u_com >= pl)
    _mask_self(delivered3, sender_offset=0)
    cnt3 = delivered3.sum(axis=1)
    c3 = n2 & (cnt3 >= th["commit_from_others"])
    cr3 = u_cr3 < pc
    n3 = c3 & ~cr3

    n3_cnt = n3.sum(axis=1)
    happy = n3_cnt >= th["happy"]
    values = {
        "C1": got_pp.sum(axis=1),
        "N1": n1.sum(axis=1),
        "Cp": cp.astype(np.int8),
        "C2": c2.sum(axis=1),
        "N2": n2.sum(axis=1),
        "C3": c3.sum(axis=1),
        "N3": n3_cnt,
    }
    success = {"happy": happy, "liveness": n3_cnt >= th["liveness"]}
    path = np.where(happy, PATH_NAMES.index("happy"), 0).astype(np.int8)

    highest = crash = None
    phase_names = ("start", "C1", "N1", "C2", "N2", "C3", "N3")
    if detail:
        pad = np.zeros((g, 1), dtype=bool)
        one = np.ones((g, 1), dtype=bool)
        # The primary holds the request and is assumed up through its
        # broadcast, so it enters the chain at the N1 stage.
        highest, crash = _detail_from_sets(
            [
                (np.concatenate([pad, got_pp], axis=1), 1),
                (np.concatenate([one, n1], axis=1), 2),
                (c2, 3),
                (n2, 4),
                (c3, 5),
                (n3, 6),
            ],
            [
                (np.concatenate([pad, got_pp], axis=1),
                 np.concatenate([pad, cr1], axis=1), 1),
                (c2, cr2, 2),
                (c3, cr3, 3),
            ],
        )
    return _ChunkResult(values, "N3", success, path, highest, crash, phase_names)


def _smart_chunk(cfg: ProtocolConfig, fp: FailureParams, rng: np.random.Generator,
                 g: int, detail: bool) -> _ChunkResult:
    n, f = cfg.n, cfg.f
    pl, pc = fp.p_l, fp.p_c
    th = cfg.thresholds()

    u_pp = rng.random((g, n - 1))
    u_cr1 = rng.random((g, n - 1))
    u_write = rng.random((g, n, n))
    u_cr2 = rng.random((g, n))
    u_com = rng.random((g, n, n))
    u_cr3 = rng.random((g, n))

    got_pp = u_pp >= pl
    cr1 = u_cr1 < pc
    n1 = got_pp & ~cr1
    one = np.ones((g, 1), dtype=bool)
    pool = np.concatenate([one, n1], axis=1)  # primary plus broadcast holders

    delivered = pool[:, :, None] & (u_write >= pl)
    _mask_self(delivered, sender_offset=0)
    cnt = delivered.sum(axis=1)
    c2 = pool & (cnt >= th["write_from_others"])
    cr2 = u_cr2 < pc
    n2 = c2 & ~cr2

    delivered3 = n2[:, :, None] & (u_com >= pl)
    _mask_self(delivered3, sender_offset=0)
    cnt3 = delivered3.sum(axis=1)
    # Members of the write quorum need 2f more commits; everyone else in
    # the pool may still finish on a full 2f+1 commit quorum.
    c3 = (n2 & (cnt3 >= th["commit_from_others"])) | (
        pool & ~n2 & (cnt3 >= th["commit_skip"])
    )
    cr3 = u_cr3 < pc
    n3 = c3 & ~cr3

    n3_cnt = n3.sum(axis=1)
    happy = n3_cnt >= th["happy"]
    values = {
        "C1": got_pp.sum(axis=1),
        "N1": n1.sum(axis=1),
        "C2": c2.sum(axis=1),
        "N2": n2.sum(axis=1),
        "C3": c3.sum(axis=1),
        "N3": n3_cnt,
    }
    success = {"happy": happy, "liveness": n3_cnt >= th["liveness"]}
    path = np.where(happy, PATH_NAMES.index("happy"), 0).astype(np.int8)

    highest = crash = None
    phase_names = ("start", "C1", "N1", "C2", "N2", "C3", "N3")
    if detail:
        pad = np.zeros((g, 1), dtype=bool)
        highest, crash = _detail_from_sets(
            [
                (np.concatenate([pad, got_pp], axis=1), 1),
                (pool, 2),
                (c2, 3),
                (n2, 4),
                (c3, 5),
                (n3, 6),
            ],
            [
                (np.concatenate([pad, got_pp], axis=1),
                 np.concatenate([pad, cr1], axis=1), 1),
                (c2, cr2, 2),
                (c3, cr3, 3),
            ],
        )
    return _ChunkResult(values, "N3", success, path, highest, crash, phase_names)


def _zyzzyva_chunk(cfg: ProtocolConfig, fp: FailureParams, rng: np.random.Generator,
                   g: int, detail: bool) -> _ChunkResult:
    n, f = cfg.n, cfg.f
    pl, pc = fp.p_l, fp.p_c
    th = cfg.thresholds()

    u_pp = rng.random((g, n - 1))
    u_cr1 = rng.random((g, n))
    u_resp = rng.random((g, n))
    u_client = rng.random((g, 3))  # client crash draws, phases 2-4
    u_cert = rng.random((g, n))
    u_cr3 = rng.random((g, n))
    u_ack = rng.random((g, n))

    one = np.ones((g, 1), dtype=bool)
    pool = np.concatenate([one, u_pp >= pl], axis=1)  # order holders incl. primary
    cr1 = u_cr1 < pc
    n1 = pool & ~cr1

    responses = n1 & (u_resp >= pl)
    k = responses.sum(axis=1)
    alive2 = u_client[:, 0] >= pc
    alive3 = u_client[:, 1] >= pc
    alive4 = u_client[:, 2] >= pc

    fast = alive2 & (k >= th["fast_quorum"])
    branch = alive2 & (k >= th["slow_quorum_lo"]) & (k <= th["slow_quorum_hi"])
    cert = branch & alive3

    got_cert = cert[:, None] & (u_cert >= pl)  # commit certificate reaches anyone
    cr3 = u_cr3 < pc
    n3 = got_cert & ~cr3
    acks = n3 & (u_ack >= pl)
    slow = cert & alive4 & (acks.sum(axis=1) >= th["ack_quorum"])

    values = {
        "C1": pool.sum(axis=1),
        "N1": n1.sum(axis=1),
        "C2_fast": fast.astype(np.int8),
        "C2_slow": branch.astype(np.int8),
        "C3": got_cert.sum(axis=1),
        "N3": n3.sum(axis=1),
        "C4": slow.astype(np.int8),
    }
    success = {"fast": fast, "slow": slow, "combined": fast | slow}
    path = np.where(fast, PATH_NAMES.index("fast"),
                    np.where(slow, PATH_NAMES.index("slow"), 0)).astype(np.int8)

    highest = crash = None
    phase_names = ("start", "C1", "N1", "C3", "N3")
    if detail:
        highest, crash = _detail_from_sets(
            [(pool, 1), (n1, 2), (got_cert, 3), (n3, 4)],
            [(pool, cr1, 1), (got_cert, cr3, 2)],
        )
    return _ChunkResult(values, "C4", success, path, highest, crash, phase_names)


def _sbft_chunk(cfg: ProtocolConfig, fp: FailureParams, rng: np.random.Generator,
                g: int, detail: bool) -> _ChunkResult:
    n, f = cfg.n, cfg.f
    pl, pc = fp.p_l, fp.p_c
    th = cfg.thresholds()
    m = th["collectors"]
    slots = np.arange(n)[None, :]

    u_pp = rng.random((g, n - 1))
    u_cr1 = rng.random((g, n))
    u_share = rng.random((g, n, m))
    u_cr2 = rng.random((g, m))
    u_b3f = rng.random((g, n, m))
    u_cr3f = rng.random((g, n))
    u_a4f = rng.random((g, n, m))
    u_b3s = rng.random((g, n, m))
    u_cr3s = rng.random((g, n))
    u_a4s = rng.random((g, n, m))
    u_cr4s = rng.random((g, m))
    u_b5 = rng.random((g, n, m))
    u_cr5 = rng.random((g, n))
    u_a6 = rng.random((g, n, m))

    one = np.ones((g, 1), dtype=bool)
    pool = np.concatenate([one, u_pp >= pl], axis=1)
    cr1 = u_cr1 < pc
    n1 = pool & ~cr1
    n1_cnt = n1.sum(axis=1)

    # Phase 2: every order holder sends its signature share to each collector.
    shares = n1[:, :, None] & (u_share >= pl)
    cnt2 = shares.sum(axis=1)  # (g, m)
    c2f = cnt2 >= th["fast_quorum"]
    c2s = (cnt2 >= th["slow_quorum_lo"]) & (cnt2 <= th["slow_quorum_hi"])
    coll_up = u_cr2 >= pc
    n2f = c2f & coll_up
    n2s = c2s & coll_up

    def rebroadcast(holders: np.ndarray, links: np.ndarray, receiver_count: np.ndarray) -> np.ndarray:
        # holders (g, m) certificate-carrying collectors; receivers are
        # canonical slots (later phases depend only on counts).
        reached = (holders[:, None, :] & (links >= pl)).any(axis=2)  # (g, n)
        picked = reached & (slots < receiver_count[:, None])
        return holders.sum(axis=1) + picked.sum(axis=1)

    def thin(count: np.ndarray, u: np.ndarray) -> np.ndarray:
        return ((u >= pc) & (slots < count[:, None])).sum(axis=1)

    def collector_counts(sender_count: np.ndarray, links: np.ndarray) -> np.ndarray:
        mask = (slots < sender_count[:, None])[:, :, None]
        return (mask & (links >= pl)).sum(axis=1)  # (g, m)

    # Fast path: rebroadcast to everyone, then f+1 execution acks.
    n2f_cnt = n2f.sum(axis=1)
    c3f_cnt = rebroadcast(n2f, u_b3f, n - n2f_cnt)
    n3f_cnt = thin(c3f_cnt, u_cr3f)
    c4f = collector_counts(n3f_cnt, u_a4f) >= th["fast_exec"]
    fast = c4f.any(axis=1)

    # Slow path: rebroadcast, 2f+c+1 commit shares, relay to the remaining
    # order holders, then f more execution acks beyond a collector's own.
    n2s_cnt = n2s.sum(axis=1)
    c3s_cnt = rebroadcast(n2s, u_b3s, n - n2s_cnt)
    n3s_cnt = thin(c3s_cnt, u_cr3s)
    c4s = collector_counts(n3s_cnt, u_a4s) >= th["slow_commit"]
    n4s = c4s & (u_cr4s >= pc)
    n4s_cnt = n4s.sum(axis=1)
    c5_cnt = rebroadcast(n4s, u_b5, np.maximum(n1_cnt - n4s_cnt, 0))
    n5_cnt = thin(c5_cnt, u_cr5)
    cnt6 = collector_counts(np.maximum(n5_cnt - 1, 0), u_a6)
    c6 = (cnt6 >= th["slow_exec_from_others"]) & (n5_cnt >= 1)[:, None]
    slow = c6.any(axis=1)

    values = {
        "C1": pool.sum(axis=1),
        "N1": n1_cnt,
        "C2_fast": c2f.sum(axis=1),
        "N2_fast": n2f_cnt,
        "C3_fast": c3f_cnt,
        "N3_fast": n3f_cnt,
        "C4_fast": c4f.sum(axis=1),
        "C2_slow": c2s.sum(axis=1),
        "N2_slow": n2s_cnt,
        "C3_slow": c3s_cnt,
        "N3_slow": n3s_cnt,
        "C4_slow": c4s.sum(axis=1),
        "N4_slow": n4s_cnt,
        "C5": c5_cnt,
        "N5": n5_cnt,
        "C6": c6.sum(axis=1),
    }
    success = {"fast": fast, "slow": slow, "combined": fast | slow}
    path = np.where(fast, PATH_NAMES.index("fast"),
                    np.where(slow, PATH_NAMES.index("slow"), 0)).astype(np.int8)

    highest = crash = None
    phase_names = ("start", "C1", "N1", "C3_slot", "N5_slot")
    if detail:
        # Replica-resolved states exist only for the first chain steps; the
        # collector/rebroadcast phases are tracked on canonical count slots.
        c3_slot = slots < c3s_cnt[:, None]
        n5_slot = slots < n5_cnt[:, None]
        highest, crash = _detail_from_sets(
            [(pool, 1), (n1, 2), (c3_slot, 3), (n5_slot, 4)],
            [(pool, cr1, 1)],
        )
    return _ChunkResult(values, "C6", success, path, highest, crash, phase_names)


_SAMPLERS: dict[str, Callable[..., _ChunkResult]] = {
    PBFT: _pbft_chunk,
    BFT_SMART: _smart_chunk,
    ZYZZYVA: _zyzzyva_chunk,
    SBFT: _sbft_chunk,
}


@lru_cache(maxsize=2)
def _run_chunk(sim: SimConfig, chunk_index: int, detail: bool) -> _ChunkResult:
    # Cached so that request-by-request inspection of one chunk does not
    # re-sample it; results are treated as read-only by all callers.
    rng = _chunk_generator(sim.seed, chunk_index)
    sampler = _SAMPLERS[sim.config.protocol]
    return sampler(sim.config, sim.failures, rng, CHUNK, detail)


def simulate_request(sim: SimConfig, request_index: int) -> SimRecord:
    """Deterministic outcome of one request under (seed, request_index)."""
    if not 0 <= request_index < sim.requests:
        raise DomainError(f"request index {request_index} outside 0..{sim.requests - 1}")
    chunk_index, offset = divmod(request_index, CHUNK)
    res = _run_chunk(sim, chunk_index, detail=True)
    assert res.highest is not None and res.crash is not None
    path = PATH_NAMES[int(res.path[offset])]
    if sim.config.protocol in (PBFT, BFT_SMART):
        quorum = bool(res.success["happy"][offset])
        liveness = bool(res.success["liveness"][offset])
    else:
        quorum = bool(res.success["fast"][offset] or res.success["slow"][offset])
        liveness = quorum
    return SimRecord(
        request_id=request_index,
        highest_phase=res.highest[offset].copy(),
        crash_step=res.crash[offset].copy(),
        phase_names=res.phase_names,
        path=path,
        success_quorum=quorum,
        success_liveness=liveness,
    )


def _interval(mean: float, sd: float, count: int, z: float) -> tuple[float, float]:
    if count <= 1:
        return (mean, mean)
    half = z * sd / np.sqrt(count) + 0.5 / count  # continuity-corrected normal
    return (mean - half, mean + half)


RecordSink = Callable[[int, _ChunkResult, int], None]


def run_campaign(sim: SimConfig, record_sink: RecordSink | None = None) -> CampaignStats:
    """Aggregate `sim.requests` independent requests into campaign stats.

    record_sink, if given, receives (start_index, chunk_result, valid_count)
    for each chunk; chunk results carry per-replica detail arrays.
    """
    detail = sim.record_phase_detail or record_sink is not None
    requests = sim.requests
    chunks = (requests + CHUNK - 1) // CHUNK

    sums: dict[str, float] = {}
    sumsq: dict[str, float] = {}
    succ_counts: dict[str, int] = {}
    final_hist: np.ndarray | None = None
    final_name = ""

    for chunk_index in range(chunks):
        res = _run_chunk(sim, chunk_index, detail)
        valid = min(requests - chunk_index * CHUNK, CHUNK)
        final_name = res.final_name
        for name, arr in res.values.items():
            vals = arr[:valid].astype(float)
            sums[name] = sums.get(name, 0.0) + float(vals.sum())
            sumsq[name] = sumsq.get(name, 0.0) + float((vals * vals).sum())
        for name, arr in res.success.items():
            succ_counts[name] = succ_counts.get(name, 0) + int(arr[:valid].sum())
        final_vals = res.values[final_name][:valid]
        width = max(int(final_vals.max(initial=0)) + 1, 2)
        if final_hist is None:
            final_hist = np.zeros(width)
        elif width > len(final_hist):
            final_hist = np.concatenate([final_hist, np.zeros(width - len(final_hist))])
        np.add.at(final_hist, final_vals.astype(int), 1.0)
        if record_sink is not None:
            record_sink(chunk_index * CHUNK, res, valid)

    z = normal_quantile(0.5 + sim.confidence / 2.0)
    stats = []
    for name, total in sums.items():
        mean = total / requests
        var = max(sumsq[name] / requests - mean * mean, 0.0)
        sd = float(np.sqrt(var * requests / max(requests - 1, 1)))
        lo, hi = _interval(mean, sd, requests, z)
        stats.append(PhaseStat(name, mean, lo, hi))

    success = {}
    success_ci = {}
    for name, count in succ_counts.items():
        p = count / requests
        sd = float(np.sqrt(p * (1.0 - p)))
        success[name] = p
        success_ci[name] = _interval(p, sd, requests, z)

    assert final_hist is not None
    return CampaignStats(
        sim=sim,
        phase_stats=tuple(stats),
        final_phase=final_name,
        final_counts=final_hist / requests,
        success=success,
        success_ci=success_ci,
    )


def _predictions(trace: PhaseTrace) -> dict[str, float]:
    preds = {name: pmf.mean() for name, pmf in trace.phases}
    if trace.primary_quorum_prob is not None:
        preds["Cp"] = trace.primary_quorum_prob
    return preds


def compare_to_model(stats: CampaignStats, trace: PhaseTrace) -> ModelCheck:
    """Check that campaign intervals cover the analytic predictions."""
    preds = _predictions(trace)
    rows: list[CheckRow] = []
    for st in stats.phase_stats:
        if st.name not in preds:
            continue
        predicted = preds[st.name]
        rows.append(
            CheckRow(
                name=st.name,
                predicted=predicted,
                observed=st.mean,
                ci_lo=st.ci_lo,
                ci_hi=st.ci_hi,
                covered=st.ci_lo <= predicted <= st.ci_hi,
            )
        )
    for name, observed in stats.success.items():
        if name not in trace.path_success:
            continue
        predicted = trace.path_success[name]
        lo, hi = stats.success_ci[name]
        rows.append(CheckRow(name, predicted, observed, lo, hi, lo <= predicted <= hi))
    coverage = sum(r.covered for r in rows) / len(rows)
    return ModelCheck(sim=stats.sim, rows=tuple(rows), coverage=coverage)


def validate_model(sim: SimConfig) -> ModelCheck:
    """Run a campaign and compare it against the matching analytic model."""
    stats = run_campaign(sim)
    trace = model_trace(sim.config, sim.failures)
    return compare_to_model(stats, trace)

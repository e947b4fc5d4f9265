"""Analytic happy-path models for PBFT, BFT-SMaRt, Zyzzyva, and SBFT.

Each model walks the protocol's communication pattern as an alternating
chain of link-failure collection steps (C_i) and crash thinning steps (N_i),
emitting the per-phase count distributions and the path success
probabilities.  A crash drawn at chain step i removes a process from every
later phase; within a phase, message deliveries are independent Bernoulli
trials with success 1 - p_l.

Quorum thresholds live in per-protocol tables derived from the config; the
four models differ only in pattern wiring and those thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .chain import (
    JointDistribution,
    bernoulli_convolve,
    convolve,
    crash_step,
    joint_via_kernel,
    total_probability,
    total_probability_joint,
)
from .prob import DomainError, FailureParams, Pmf, binom_range, pmf_binomial

__all__ = [
    "PBFT",
    "BFT_SMART",
    "ZYZZYVA",
    "SBFT",
    "PROTOCOLS",
    "ProtocolConfig",
    "PhaseTrace",
    "pbft_crash_only",
    "pbft_model",
    "smart_model",
    "zyzzyva_model",
    "sbft_model",
    "model_trace",
    "success_probability",
]

PBFT = "pbft"
BFT_SMART = "bft-smart"
ZYZZYVA = "zyzzyva"
SBFT = "sbft"
PROTOCOLS = (PBFT, BFT_SMART, ZYZZYVA, SBFT)


@dataclass(frozen=True)
class ProtocolConfig:
    """Replica count n, fault budget f, and (for SBFT) collector surplus c."""

    protocol: str
    n: int
    f: int
    c: int = 0

    def __post_init__(self) -> None:
        proto = self.protocol.lower()
        object.__setattr__(self, "protocol", proto)
        if proto not in PROTOCOLS:
            raise DomainError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.f < 0 or self.c < 0:
            raise DomainError("f and c must be non-negative")
        if proto == SBFT:
            if self.n != 3 * self.f + 2 * self.c + 1:
                raise DomainError(
                    f"sbft requires n = 3f+2c+1, got n={self.n}, f={self.f}, c={self.c}"
                )
        else:
            if self.c != 0:
                raise DomainError(f"collector surplus c only applies to sbft, got c={self.c}")
            if self.n < 3 * self.f + 1:
                raise DomainError(
                    f"{proto} requires n >= 3f+1, got n={self.n}, f={self.f}"
                )

    def thresholds(self) -> Mapping[str, int]:
        """Per-protocol quorum table; the extension point for new patterns."""
        f, c = self.f, self.c
        if self.protocol == PBFT:
            table = {
                # own prepare and the pre-prepare both count toward 2f+1
                "prepare_from_others": 2 * f - 1,
                "primary_prepare": 2 * f,
                "commit_from_others": 2 * f,
                "happy": 2 * f + 1,
                "liveness": f + 1,
            }
        elif self.protocol == BFT_SMART:
            table = {
                # pre-prepare does not count, own write does
                "write_from_others": 2 * f,
                "commit_from_others": 2 * f,
                "commit_skip": 2 * f + 1,
                "happy": 2 * f + 1,
                "liveness": f + 1,
            }
        elif self.protocol == ZYZZYVA:
            table = {
                "fast_quorum": 3 * f + 1,
                "slow_quorum_lo": 2 * f + 1,
                "slow_quorum_hi": 3 * f,
                "ack_quorum": 2 * f + 1,
            }
        else:  # SBFT
            table = {
                "collectors": c + 1,
                "fast_quorum": 3 * f + c + 1,
                "slow_quorum_lo": 2 * f + c + 1,
                "slow_quorum_hi": 3 * f + c,
                "fast_exec": f + 1,
                "slow_commit": 2 * f + c + 1,
                "slow_exec_from_others": f,
            }
        return MappingProxyType(table)


@dataclass(frozen=True)
class PhaseTrace:
    """Ordered per-phase count distributions plus path success probabilities."""

    config: ProtocolConfig
    failures: FailureParams
    phases: tuple[tuple[str, Pmf], ...]
    path_success: Mapping[str, float]
    primary_quorum_prob: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "path_success", MappingProxyType(dict(self.path_success)))

    def phase(self, name: str) -> Pmf:
        for phase_name, pmf in self.phases:
            if phase_name == name:
                return pmf
        raise KeyError(f"no phase named {name!r}")

    def phase_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.phases)

    @property
    def final(self) -> Pmf:
        return self.phases[-1][1]


def success_probability(trace: PhaseTrace, threshold: int) -> float:
    """Probability that the final phase count reaches the threshold."""
    if threshold < 0:
        raise DomainError(f"threshold must be non-negative, got {threshold}")
    return trace.final.tail(threshold)


def _require_protocol(config: ProtocolConfig, expected: str) -> None:
    if config.protocol != expected:
        raise DomainError(
            f"config is for {config.protocol!r}; this model requires {expected!r}"
        )


def _finalize(phases: list[tuple[str, Pmf]]) -> tuple[tuple[str, Pmf], ...]:
    # Drift correction happens once, at the end of the full chain; anything
    # beyond MASS_TOL raised inside Pmf long before we get here.
    return tuple((name, pmf.renormalized()) for name, pmf in phases)


def _bernoulli(p: float) -> Pmf:
    return Pmf(np.array([1.0 - p, p]))


def pbft_crash_only(config: ProtocolConfig, p_c: float, exclude_primary: bool = False) -> PhaseTrace:
    """Three-phase crash-failure chain with reliable links.

    Pure survival accounting: N_1 draws one Bernoulli per replica, each
    later phase thins the previous survivors again.  `exclude_primary`
    switches the first phase to n-1 trials (primary assumed up); the
    default keeps all n replicas in play.
    """
    _require_protocol(config, PBFT)
    n, f = config.n, config.f
    trials = n - 1 if exclude_primary else n
    n1 = pmf_binomial(trials, 1.0 - p_c)
    n2 = crash_step(n1, p_c)
    n3 = crash_step(n2, p_c)
    phases = _finalize([("N1", n1), ("N2", n2), ("N3", n3)])
    happy = phases[-1][1].tail(2 * f + 1)
    return PhaseTrace(
        config=config,
        failures=FailureParams(0.0, p_c),
        phases=phases,
        path_success={"happy": happy},
    )


def pbft_model(config: ProtocolConfig, fp: FailureParams) -> PhaseTrace:
    """Full PBFT happy-path chain under link and crash failures.

    The primary is assumed up through its pre-prepare broadcast, so C_1
    counts the other n-1 replicas; it rejoins the chain in phase two via
    the primary-quorum event and is subject to crash draws from then on.
    """
    _require_protocol(config, PBFT)
    n, f = config.n, config.f
    pl, pc = fp.p_l, fp.p_c
    th = config.thresholds()

    c1 = pmf_binomial(n - 1, 1.0 - pl)
    n1 = crash_step(c1, pc)

    def primary_quorum(y: int) -> float:
        # The primary needs 2f prepares out of the y broadcasters.
        if y < 2 * f:
            return 0.0
        return binom_range(y, 1.0 - pl, th["primary_prepare"], n)

    @cache
    def prepare_kernel(y: int) -> Pmf:
        if y < 2 * f:
            replicas = Pmf.point(0, n - 1)
        else:
            p2 = binom_range(max(y - 1, 0), 1.0 - pl, max(th["prepare_from_others"], 0), n)
            replicas = pmf_binomial(y, p2).padded(n - 1)
        # C_2 counts the primary too: convolve with its quorum event.
        return bernoulli_convolve(replicas, primary_quorum(y))

    c2 = total_probability(prepare_kernel, n1)
    n2 = crash_step(c2, pc)

    @cache
    def commit_kernel(m: int) -> Pmf:
        # A node needs 2f commits beyond its own, impossible unless more
        # than 2f nodes are still broadcasting.
        if m <= 2 * f:
            return Pmf.point(0, n)
        p3 = binom_range(m - 1, 1.0 - pl, th["commit_from_others"], n)
        return pmf_binomial(m, p3).padded(n)

    c3 = total_probability(commit_kernel, n2)
    n3 = crash_step(c3, pc)

    phases = _finalize(
        [("C1", c1), ("N1", n1), ("C2", c2), ("N2", n2), ("C3", c3), ("N3", n3)]
    )
    final = phases[-1][1]
    cp_prob = float(sum(w * primary_quorum(y) for y, w in enumerate(n1.mass) if w > 0.0))
    return PhaseTrace(
        config=config,
        failures=fp,
        phases=phases,
        path_success={
            "happy": final.tail(th["happy"]),
            "liveness": final.tail(th["liveness"]),
        },
        primary_quorum_prob=cp_prob,
    )


def smart_model(config: ProtocolConfig, fp: FailureParams) -> PhaseTrace:
    """BFT-SMaRt happy-path chain.

    Differs from PBFT in two ways: the pre-prepare does not count toward
    the write quorum (so the primary collects like everyone else and C_2
    runs over n_1 + 1 candidates), and a node that missed the write quorum
    can still finish by collecting 2f+1 commits, which makes the commit
    phase condition jointly on (N_1, N_2).
    """
    _require_protocol(config, BFT_SMART)
    n, f = config.n, config.f
    pl, pc = fp.p_l, fp.p_c
    th = config.thresholds()

    c1 = pmf_binomial(n - 1, 1.0 - pl)
    n1 = crash_step(c1, pc)

    @cache
    def write_kernel(y: int) -> Pmf:
        # y broadcast holders plus the primary all collect from y writers.
        p2 = binom_range(y, 1.0 - pl, th["write_from_others"], n)
        return pmf_binomial(y + 1, p2).padded(n)

    @cache
    def survivors_kernel(y: int) -> Pmf:
        return crash_step(write_kernel(y), pc)

    joint = joint_via_kernel(n1, survivors_kernel)  # (N1, N2)
    c2 = total_probability(write_kernel, n1)
    n2 = joint.marginal_z()

    @cache
    def commit_kernel(y: int, m: int) -> Pmf:
        # m commit broadcasters; the other y+1-m candidates may skip the
        # write quorum by collecting 2f+1 full commits.
        p_member = binom_range(max(m - 1, 0), 1.0 - pl, th["commit_from_others"], n)
        p_skip = binom_range(m, 1.0 - pl, th["commit_skip"], n)
        members = pmf_binomial(m, p_member)
        skippers = pmf_binomial(y + 1 - m, p_skip)
        return convolve(members, skippers).padded(n)

    c3 = total_probability_joint(commit_kernel, joint)
    n3 = crash_step(c3, pc)

    phases = _finalize(
        [("C1", c1), ("N1", n1), ("C2", c2), ("N2", n2), ("C3", c3), ("N3", n3)]
    )
    final = phases[-1][1]
    return PhaseTrace(
        config=config,
        failures=fp,
        phases=phases,
        path_success={
            "happy": final.tail(th["happy"]),
            "liveness": final.tail(th["liveness"]),
        },
    )


def zyzzyva_model(config: ProtocolConfig, fp: FailureParams) -> PhaseTrace:
    """Zyzzyva client-driven fast/slow paths.

    The order-holder pool includes the primary (it ordered the request), so
    C_1 = 1 + Binomial(n-1, 1-p_l).  The client is a protocol participant:
    it takes one crash draw per phase it is active in (response collection,
    certificate broadcast, ack collection), with the same p_c as replicas.
    """
    _require_protocol(config, ZYZZYVA)
    n, f = config.n, config.f
    pl, pc = fp.p_l, fp.p_c
    th = config.thresholds()
    client_up = 1.0 - pc

    c1 = pmf_binomial(n - 1, 1.0 - pl).shifted(1).padded(n)
    n1 = crash_step(c1, pc)

    fast_quorum = float(
        sum(
            w * binom_range(y, 1.0 - pl, th["fast_quorum"], n)
            for y, w in enumerate(n1.mass)
            if w > 0.0
        )
    )
    if th["slow_quorum_lo"] <= th["slow_quorum_hi"]:
        slow_branch = float(
            sum(
                w * binom_range(y, 1.0 - pl, th["slow_quorum_lo"], th["slow_quorum_hi"])
                for y, w in enumerate(n1.mass)
                if w > 0.0
            )
        )
    else:
        slow_branch = 0.0

    fast = client_up * fast_quorum
    c2_fast = _bernoulli(fast)
    c2_slow = _bernoulli(client_up * slow_branch)

    # Certificate broadcast: the client must also survive the send phase.
    cert = client_up * slow_branch * client_up
    c3_mass = cert * pmf_binomial(n, 1.0 - pl).mass
    c3_mass[0] += 1.0 - cert
    c3 = Pmf(c3_mass)
    n3 = crash_step(c3, pc)

    ack = float(
        sum(
            w * binom_range(m, 1.0 - pl, th["ack_quorum"], n)
            for m, w in enumerate(n3.mass)
            if w > 0.0
        )
    )
    slow = ack * client_up
    c4 = _bernoulli(slow)

    phases = _finalize(
        [
            ("C1", c1),
            ("N1", n1),
            ("C2_fast", c2_fast),
            ("C2_slow", c2_slow),
            ("C3", c3),
            ("N3", n3),
            ("C4", c4),
        ]
    )
    return PhaseTrace(
        config=config,
        failures=fp,
        phases=phases,
        path_success={"fast": fast, "slow": slow, "combined": fast + slow},
    )


def _spread_kernel(holders: int, receivers: int, pl: float, support_max: int) -> Pmf:
    """Collector rebroadcast: holders keep the certificate, each of the
    receivers gets it unless all `holders` copies are dropped."""
    if holders == 0:
        return Pmf.point(0, support_max)
    reach = 1.0 - pl**holders
    return pmf_binomial(receivers, reach).shifted(holders).padded(support_max)


def sbft_model(config: ProtocolConfig, fp: FailureParams) -> PhaseTrace:
    """SBFT six-phase chain with c+1 collectors and fast/slow paths.

    The order-holder pool includes the primary, as for Zyzzyva.  Collector
    phases are Bernoulli counts over the c+1 collectors; rebroadcast phases
    produce shifted binomials (holders plus newly reached replicas).  The
    phase-two branches are disjoint per collector (fast quorum in
    [3f+c+1, n], slow in [2f+c+1, 3f+c]); the slow chain's fifth phase
    conditions jointly on (N_1, N_4).
    """
    _require_protocol(config, SBFT)
    n, f, c = config.n, config.f, config.c
    pl, pc = fp.p_l, fp.p_c
    th = config.thresholds()
    m = th["collectors"]

    c1 = pmf_binomial(n - 1, 1.0 - pl).shifted(1).padded(n)
    n1 = crash_step(c1, pc)

    def collector_count(p_each: float) -> Pmf:
        return pmf_binomial(m, p_each).padded(m)

    def fast_share_p(y: int) -> float:
        return binom_range(y, 1.0 - pl, th["fast_quorum"], n)

    def slow_share_p(y: int) -> float:
        lo, hi = th["slow_quorum_lo"], th["slow_quorum_hi"]
        return binom_range(y, 1.0 - pl, lo, hi) if lo <= hi else 0.0

    @cache
    def rebroadcast_kernel(j: int) -> Pmf:
        return _spread_kernel(j, n - j, pl, n)

    @cache
    def fast_exec_kernel(y: int) -> Pmf:
        return collector_count(binom_range(y, 1.0 - pl, th["fast_exec"], n))

    # Fast chain: shares -> rebroadcast -> execution acks.
    c2f = total_probability(lambda y: collector_count(fast_share_p(y)), n1)
    n2f = crash_step(c2f, pc)
    c3f = total_probability(rebroadcast_kernel, n2f)
    n3f = crash_step(c3f, pc)
    c4f = total_probability(fast_exec_kernel, n3f)
    fast = 1.0 - c4f.prob(0)

    @cache
    def fast_completion(k: int) -> float:
        """P(any collector finishes the fast chain | k fast-quorum collectors)."""
        n2 = crash_step(Pmf.point(k, m), pc)
        c3 = total_probability(rebroadcast_kernel, n2)
        n3 = crash_step(c3, pc)
        c4 = total_probability(fast_exec_kernel, n3)
        return 1.0 - c4.prob(0)

    # Slow chain, conditioned on the order-holder count y throughout: the
    # fifth-phase relay reaches only the remaining holders, so the chain is
    # pushed per starting collector count k and mixed afterwards.
    @cache
    def slow_commit_kernel(y: int) -> Pmf:
        return collector_count(binom_range(y, 1.0 - pl, th["slow_commit"], n))

    @cache
    def relay_kernel(y: int, j: int) -> Pmf:
        # Fifth phase reaches only the remaining order holders.
        return _spread_kernel(j, max(y - j, 0), pl, n)

    @cache
    def slow_exec_kernel(z: int) -> Pmf:
        if z == 0:
            return Pmf.point(0, m)
        # A collector's own reply is free: f more from the other z-1.
        p_each = binom_range(z - 1, 1.0 - pl, th["slow_exec_from_others"], n)
        return collector_count(p_each)

    @cache
    def slow_stages(y: int, k: int) -> tuple[Pmf, ...]:
        """Slow-chain stage distributions given N1=y and k slow collectors."""
        n2 = crash_step(Pmf.point(k, m), pc)
        c3 = total_probability(rebroadcast_kernel, n2)
        n3 = crash_step(c3, pc)
        c4 = total_probability(slow_commit_kernel, n3)
        n4 = crash_step(c4, pc)
        c5 = total_probability(lambda j: relay_kernel(y, j), n4)
        n5 = crash_step(c5, pc)
        c6 = total_probability(slow_exec_kernel, n5)
        return n2, c3, n3, c4, n4, c5, n5, c6

    accs = {
        "C2_slow": np.zeros(m + 1), "N2_slow": np.zeros(m + 1),
        "C3_slow": np.zeros(n + 1), "N3_slow": np.zeros(n + 1),
        "C4_slow": np.zeros(m + 1), "N4_slow": np.zeros(m + 1),
        "C5": np.zeros(n + 1), "N5": np.zeros(n + 1), "C6": np.zeros(m + 1),
    }
    slow = 0.0
    no_path = 0.0  # P(neither chain completes)
    for y, weight in enumerate(n1.mass):
        if weight == 0.0:
            continue
        pf = fast_share_p(y)
        ps = slow_share_p(y)
        pn = max(1.0 - pf - ps, 0.0)
        start = pmf_binomial(m, ps).mass  # slow-quorum collector count
        accs["C2_slow"] += weight * start
        dead = 0.0
        for k in range(m + 1):
            wk = start[k]
            if wk == 0.0:
                continue
            n2, c3, n3, c4, n4, c5, n5, c6 = slow_stages(y, k)
            accs["N2_slow"] += weight * wk * n2.mass
            accs["C3_slow"] += weight * wk * c3.mass
            accs["N3_slow"] += weight * wk * n3.mass
            accs["C4_slow"] += weight * wk * c4.mass
            accs["N4_slow"] += weight * wk * n4.mass
            accs["C5"] += weight * wk * c5.mass
            accs["N5"] += weight * wk * n5.mass
            accs["C6"] += weight * wk * c6.mass
            slow += weight * wk * (1.0 - c6.prob(0))
        # Exact P(no path | y): the phase-two branches split the collectors
        # three ways (fast / slow / neither); downstream the two chains are
        # independent given those counts.
        for kf in range(m + 1):
            for ks in range(m - kf + 1):
                rest = m - kf - ks
                prob = (
                    math.comb(m, kf) * math.comb(m - kf, ks)
                    * pf**kf * ps**ks * pn**rest
                )
                if prob == 0.0:
                    continue
                slow_done = (1.0 - slow_stages(y, ks)[7].prob(0)) if ks else 0.0
                dead += prob * (1.0 - fast_completion(kf)) * (1.0 - slow_done)
        no_path += weight * dead
    combined = 1.0 - no_path

    phases = _finalize(
        [
            ("C1", c1),
            ("N1", n1),
            ("C2_fast", c2f),
            ("N2_fast", n2f),
            ("C3_fast", c3f),
            ("N3_fast", n3f),
            ("C4_fast", c4f),
        ]
        + [(name, Pmf(acc)) for name, acc in accs.items()]
    )
    return PhaseTrace(
        config=config,
        failures=fp,
        phases=phases,
        path_success={"fast": float(fast), "slow": float(slow), "combined": float(combined)},
    )


_MODEL_FNS = {
    PBFT: pbft_model,
    BFT_SMART: smart_model,
    ZYZZYVA: zyzzyva_model,
    SBFT: sbft_model,
}


def model_trace(config: ProtocolConfig, fp: FailureParams) -> PhaseTrace:
    """Dispatch to the analytic model matching the config's protocol."""
    return _MODEL_FNS[config.protocol](config, fp)

"""Composition operators that chain per-phase conditional kernels.

A kernel maps a conditioning count to the pmf of the next phase's count.
The protocol models wire these into the alternating link/crash chains; the
only multi-parent case is a kernel conditioned on two earlier phases, which
goes through a JointDistribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .prob import MASS_TOL, DomainError, NormalizationError, Pmf, _check_prob

__all__ = [
    "Kernel",
    "Kernel2",
    "JointDistribution",
    "crash_step",
    "total_probability",
    "joint_via_kernel",
    "total_probability_joint",
    "convolve",
    "bernoulli_convolve",
]

# Conditioning value -> pmf of the next count.  Kernels are ordinary
# callables; models memoize them per run with functools.cache, and values
# with zero prior mass are never evaluated.
Kernel = Callable[[int], Pmf]
Kernel2 = Callable[[int, int], Pmf]


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf over a pair of phase counts, indexed [y, z]."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise DomainError("probs must be a non-empty 2-d array")
        if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
            raise DomainError("joint entries must lie in [0, 1]")
        total = float(arr.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise NormalizationError(f"joint mass sums to {total!r}")
        np.clip(arr, 0.0, 1.0, out=arr)
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def marginal_y(self) -> Pmf:
        return Pmf(self.probs.sum(axis=1))

    def marginal_z(self) -> Pmf:
        return Pmf(self.probs.sum(axis=0))


def crash_step(prior: Pmf, p_c: float) -> Pmf:
    """Thin a count distribution by independent per-process survival.

    Each of the c processes counted by the prior survives with probability
    1 - p_c, so the result mixes Binomial(c, 1-p_c) rows over the prior.
    The support is unchanged.
    """
    _check_prob(p_c, "p_c")
    q = 1.0 - p_c
    m = prior.support_max
    if q == 1.0:
        return prior
    if q == 0.0:
        return Pmf.point(0, m)
    # Lower-triangular mixture: row c is Binomial(c, q) over 0..c.
    counts = np.arange(m + 1, dtype=float)
    c = counts[:, None]
    j = counts[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = (
            gammaln(c + 1.0)
            - gammaln(j + 1.0)
            - gammaln(c - j + 1.0)
            + j * np.log(q)
            + (c - j) * np.log1p(-q)
        )
    kernel = np.where(j <= c, np.exp(logs), 0.0)
    return Pmf(prior.mass @ kernel)


def total_probability(kernel: Kernel, prior: Pmf) -> Pmf:
    """Mix a kernel over a prior: result(x) = sum_y kernel(y)(x) * prior(y).

    Conditioning values with zero prior mass are skipped, so the kernel
    need not be defined there.
    """
    out: np.ndarray | None = None
    for y, weight in enumerate(prior.mass):
        if weight == 0.0:
            continue
        piece = kernel(y)
        if out is None:
            out = np.zeros(len(piece.mass))
        elif len(piece.mass) != len(out):
            raise DomainError(
                f"kernel support changed at y={y}: "
                f"{len(piece.mass) - 1} != {len(out) - 1}"
            )
        out += weight * piece.mass
    assert out is not None  # prior sums to 1, so some weight was nonzero
    return Pmf(out)


def joint_via_kernel(prior: Pmf, kernel: Kernel) -> JointDistribution:
    """Joint over (y, z) with joint(y, z) = prior(y) * kernel(y)(z)."""
    rows: list[np.ndarray | None] = [None] * len(prior.mass)
    width: int | None = None
    for y, weight in enumerate(prior.mass):
        if weight == 0.0:
            continue
        piece = kernel(y)
        if width is None:
            width = len(piece.mass)
        elif len(piece.mass) != width:
            raise DomainError(f"kernel support changed at y={y}")
        rows[y] = weight * piece.mass
    assert width is not None
    probs = np.zeros((len(prior.mass), width))
    for y, row in enumerate(rows):
        if row is not None:
            probs[y] = row
    return JointDistribution(probs)


def total_probability_joint(kernel2: Kernel2, joint: JointDistribution) -> Pmf:
    """Mix a two-parent kernel over a joint distribution."""
    out: np.ndarray | None = None
    probs = joint.probs
    for y in range(probs.shape[0]):
        row = probs[y]
        for z in np.nonzero(row)[0]:
            piece = kernel2(y, int(z))
            if out is None:
                out = np.zeros(len(piece.mass))
            elif len(piece.mass) != len(out):
                raise DomainError(f"kernel support changed at (y={y}, z={z})")
            out += row[z] * piece.mass
    assert out is not None
    return Pmf(out)


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Distribution of the sum of two independent counts."""
    return Pmf(np.convolve(a.mass, b.mass))


def bernoulli_convolve(base: Pmf, p_extra: float) -> Pmf:
    """Add an independent Bernoulli(p_extra) participant to a count."""
    _check_prob(p_extra, "p_extra")
    return Pmf(np.convolve(base.mass, np.array([1.0 - p_extra, p_extra])))

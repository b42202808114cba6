"""Rates, secrecy rates, and square-root-law scaling constants.

The scaling constants measure how many nats survive the blocklength limit
when the covert rate diminishes: the normalized rate approaches a constant
built from per-direction channel-quality ratios weighted by the divergence
shares.  This module evaluates those constants, their spectral-norm-class
bounds, the unit-rank specialization, finite-blocklength convergence
diagnostics, and the first-order nats counts behind the antenna sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .allocation import NormalizedShares, optimize_covariance
from .channel import ArrayGeometry, EigenStructure, MimoScenario, SpectralBound, beam_gain
from .covertness import CovertBudget, PowerAllocation, covert_power_limit
from .errors import InvalidInputError, RegimeError

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ScalingResult:
    """A scaling constant with its per-direction summands.

    ``kind`` is ``"covert"`` or ``"covert_with_secrecy"``; ``bounds`` holds
    the (lower, upper) pair for spectral-norm-class results and is ``None``
    otherwise.  Units are square-root nats.
    """

    total: float
    per_direction: np.ndarray
    kind: str
    bounds: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        per = np.asarray(self.per_direction, dtype=float)
        object.__setattr__(self, "per_direction", per)
        if np.any(per < 0):
            raise InvalidInputError("per-direction scaling terms must be nonnegative")
        if abs(self.total - float(np.sum(per))) > 1e-12 * max(1.0, abs(self.total)):
            raise InvalidInputError("total must equal the sum of per-direction terms")


def _result(per: np.ndarray, kind: str, real_input: bool, bounds=None) -> ScalingResult:
    if real_input:
        per = per / _SQRT2
        if bounds is not None:
            bounds = (bounds[0] / _SQRT2, bounds[1] / _SQRT2)
    return ScalingResult(
        total=float(np.sum(per)), per_direction=per, kind=kind, bounds=bounds
    )


def covert_rate(scenario: MimoScenario, alloc: PowerAllocation) -> float:
    """Rate to the intended receiver, ``logdet(I + H_b Q H_b' / sigma_b2)`` in nats."""
    s = (
        scenario.h_b @ alloc.covariance @ scenario.h_b.conj().T
        / scenario.sigma_b2
    )
    s = 0.5 * (s + s.conj().T)
    eigs = np.maximum(np.linalg.eigvalsh(s), 0.0)
    return float(np.sum(np.log1p(eigs)))


def secrecy_rate(scenario: MimoScenario, alloc: PowerAllocation) -> float:
    """Positive part of the rate gap between the two receivers."""
    s_w = (
        scenario.h_w @ alloc.covariance @ scenario.h_w.conj().T
        / scenario.sigma_w2
    )
    s_w = 0.5 * (s_w + s_w.conj().T)
    rate_w = float(np.sum(np.log1p(np.maximum(np.linalg.eigvalsh(s_w), 0.0))))
    return max(0.0, covert_rate(scenario, alloc) - rate_w)


def _quality_ratios(
    eig: EigenStructure, shares: NormalizedShares, sigma_b2: float, sigma_w2: float
) -> np.ndarray:
    """Per-direction ``sigma_w2 lambda_b / (sigma_b2 g_w)`` where shares are positive."""
    c = shares.c
    lam_b = eig.lambda_b
    g_w = eig.lambda_w_rotated
    if c.shape != lam_b.shape:
        raise InvalidInputError(
            f"shares length {c.shape} does not match {lam_b.shape} directions"
        )
    null_dirs = (g_w == 0.0) & ((lam_b > 0.0) | (c > 0.0))
    if np.any(null_dirs):
        raise RegimeError(
            "a null direction toward the adversary exists; the rate is "
            "non-diminishing and the square-root scaling does not apply"
        )
    ratios = np.zeros_like(c)
    active = c > 0
    ratios[active] = sigma_w2 * lam_b[active] / (sigma_b2 * g_w[active])
    return ratios


def covert_scaling(
    eig: EigenStructure,
    shares: NormalizedShares,
    sigma_b2: float,
    sigma_w2: float,
    *,
    real_input: bool = False,
) -> ScalingResult:
    """Square-root-law constant without a secrecy constraint.

    Sums ``sqrt(2 c_i) * sigma_w2 lambda_b_i / (sigma_b2 g_i)`` over the
    directions carrying divergence share.  ``real_input=True`` converts to
    the real-channel convention (divides by sqrt(2)), under which the
    symmetric single-antenna baseline equals 1.
    """
    ratios = _quality_ratios(eig, shares, sigma_b2, sigma_w2)
    per = np.sqrt(2.0 * shares.c) * ratios
    return _result(per, "covert", real_input)


def secrecy_covert_scaling(
    eig: EigenStructure,
    shares: NormalizedShares,
    sigma_b2: float,
    sigma_w2: float,
    *,
    real_input: bool = False,
) -> ScalingResult:
    """Square-root-law constant with a secrecy constraint.

    Same as :func:`covert_scaling` but each quality ratio enters through its
    positive part minus one: directions where the adversary is at least as
    capable contribute nothing, and the constant is zero when that holds
    everywhere.
    """
    ratios = _quality_ratios(eig, shares, sigma_b2, sigma_w2)
    per = np.sqrt(2.0 * shares.c) * np.maximum(ratios - 1.0, 0.0)
    return _result(per, "covert_with_secrecy", real_input)


def covert_scaling_bounds(
    eig: EigenStructure,
    shares: NormalizedShares,
    sigma_b2: float,
    bound: SpectralBound,
    sigma_w2: float,
    *,
    with_secrecy: bool = False,
    real_input: bool = False,
) -> ScalingResult:
    """Scaling bounds when only a spectral-norm cap on the adversary is known.

    The upper bound is the exact-knowledge constant; the lower bound
    replaces each noise-normalized adversary gain by the cap ``lambda_hat``.
    Requires ``lambda_hat`` to actually dominate the rotated gains.
    """
    g_w = eig.lambda_w_rotated
    if bound.lambda_hat < np.max(g_w, initial=0.0) / sigma_w2 * (1.0 - 1e-12):
        raise InvalidInputError(
            "lambda_hat is below the largest noise-normalized adversary gain"
        )
    ratios = _quality_ratios(eig, shares, sigma_b2, sigma_w2)
    weight = np.sqrt(2.0 * shares.c)
    low_ratios = np.zeros_like(ratios)
    active = shares.c > 0
    low_ratios[active] = eig.lambda_b[active] / (sigma_b2 * bound.lambda_hat)
    if with_secrecy:
        upper_terms = weight * np.maximum(ratios - 1.0, 0.0)
        lower_terms = weight * np.maximum(low_ratios - 1.0, 0.0)
        kind = "covert_with_secrecy"
    else:
        upper_terms = weight * ratios
        lower_terms = weight * low_ratios
        kind = "covert"
    bounds = (float(np.sum(lower_terms)), float(np.sum(upper_terms)))
    return _result(upper_terms, kind, real_input, bounds=bounds)


def unit_rank_scaling(
    tx: ArrayGeometry,
    omega_a: float,
    omega_b: float,
    omega_w: float,
    xi_b2: float,
    xi_w2: float,
    n_b: int,
    n_w: int,
    sigma_b2: float,
    sigma_w2: float,
    *,
    real_input: bool = False,
) -> ScalingResult:
    """Scaling constant of a steered line-of-sight link.

    ``sqrt(2) sigma_w2 xi_b2 N_b gain_b^2 / (sigma_b2 xi_w2 N_w gain_w^2)``
    with the beam gains evaluated at the steering offsets.  A zero gain
    toward the adversary means the positive-rate regime applies instead and
    raises :class:`RegimeError`.
    """
    gain_b = beam_gain(tx, omega_a - omega_b)
    gain_w = beam_gain(tx, omega_a - omega_w)
    if gain_w == 0.0:
        raise RegimeError(
            "steering hits an exact adversary null; the rate is "
            "non-diminishing and the square-root scaling does not apply"
        )
    term = (
        _SQRT2
        * sigma_w2
        * xi_b2
        * n_b
        * gain_b**2
        / (sigma_b2 * xi_w2 * n_w * gain_w**2)
    )
    return _result(np.array([term]), "covert", real_input)


def finite_n_normalized_rate(
    scenario: MimoScenario, delta_kl: float, blocklengths: Sequence[int]
) -> np.ndarray:
    """Normalized optimal rates ``sqrt(n / (2 d^2)) * rate(n)`` over a ladder.

    Diagnostic for convergence toward :func:`covert_scaling`: in the
    diminishing-rate regime the sequence approaches the scaling constant
    from below as the blocklength grows.
    """
    if delta_kl <= 0:
        raise InvalidInputError("delta_kl must be positive")
    out = []
    for n in blocklengths:
        budget = CovertBudget(blocklength=int(n), detection_level=delta_kl)
        result = optimize_covariance(scenario, budget)
        out.append(math.sqrt(n / (2.0 * delta_kl**2)) * result.rate)
    return np.asarray(out)


def covert_nats_firstorder(
    tx: ArrayGeometry,
    xi_b2: float,
    xi_w2: float,
    omega: float,
    n_b: int,
    n_w: int,
    bandwidth: float,
    noise_power_b: float,
    noise_power_w: float,
    blocklength: int,
    delta_kl: float,
    power: float,
) -> Tuple[float, float]:
    """First-order covert and unconstrained nats over a block.

    ``omega`` is the cosine misalignment between the steered direction and
    the adversary; noise powers are integrated over the band.  The covert
    count uses the smaller of the covert power limit and the power budget,
    so it can never exceed the unconstrained count and matches it exactly
    once the limit clears the budget.
    """
    if bandwidth <= 0:
        raise InvalidInputError("bandwidth must be positive")
    gain2 = beam_gain(tx, omega) ** 2
    lam_w_eff = xi_w2 * tx.num_antennas * n_w * gain2
    limit = covert_power_limit(lam_w_eff, noise_power_w, blocklength, delta_kl)
    q = power if limit is None else min(limit, power)
    lam_b = xi_b2 * tx.num_antennas * n_b
    covert = blocklength * bandwidth * math.log1p(q * lam_b / noise_power_b)
    noncovert = blocklength * bandwidth * math.log1p(power * lam_b / noise_power_b)
    return covert, noncovert


def dbm_to_watts(dbm: float) -> float:
    """Convert a dBm level to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def dbm_per_hz_to_watts(dbm_per_hz: float, bandwidth: float) -> float:
    """Convert a dBm/Hz density to integrated watts over ``bandwidth``."""
    if bandwidth <= 0:
        raise InvalidInputError("bandwidth must be positive")
    return dbm_to_watts(dbm_per_hz) * bandwidth

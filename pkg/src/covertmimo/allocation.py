"""Divergence-constrained power allocation and beam steering.

Solves the rate maximization over covariances diagonal in the intended
receiver's eigen-basis under a total-power cap and a per-use divergence
budget, extracts normalized per-direction divergence shares, evaluates the
closed-form achievability allocation, and steers a unit-rank beam subject
to the same budget (including exact null steering).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, EigenStructure, MimoScenario, beam_gain, rotated_eigen
from .covertness import (
    CovertBudget,
    PowerAllocation,
    invert_kl_term,
    kl_term,
)
from .errors import (
    InconsistentSharesError,
    InvalidInputError,
    NoNullDirectionError,
    UndefinedSharesError,
)

_MULTIPLIER_TOL = 1e-12


@dataclass(frozen=True)
class NormalizedShares:
    """Fractions of the total divergence carried by each eigen-direction."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        if np.any(c < 0):
            raise InvalidInputError("shares must be nonnegative")
        if abs(float(np.sum(c)) - 1.0) > 1e-9:
            raise InvalidInputError(f"shares must sum to 1, got {np.sum(c)}")


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """Optimizer output: allocation, achieved rate, divergence, and duals.

    ``mu`` and ``eta`` are the multipliers of the power and divergence
    constraints; the active flags are their positivity.
    """

    allocation: PowerAllocation
    rate: float
    kl_value: float
    mu: float
    eta: float
    power_active: bool
    kl_active: bool


@dataclass(frozen=True)
class NullSteering:
    """Chosen null index, its steering cosine, and the full-power rate."""

    k: int
    steer_cosine: float
    rate: float


def uniform_shares(eig: EigenStructure) -> NormalizedShares:
    """Equal shares over the usable streams, zero beyond them.

    Documented fallback when the total divergence is zero and shares are
    undefined; matches the equal-power special case of well-conditioned
    channels.
    """
    c = np.zeros(eig.n_a)
    c[: eig.n_streams] = 1.0 / eig.n_streams
    return NormalizedShares(c=c)


def normalized_shares(
    alloc: PowerAllocation, eig: EigenStructure, sigma_w2: float
) -> NormalizedShares:
    """Per-direction divergence terms normalized by their total.

    Raises :class:`UndefinedSharesError` when the total divergence is zero
    (callers should fall back to :func:`uniform_shares`).
    """
    if sigma_w2 <= 0:
        raise InvalidInputError("sigma_w2 must be positive")
    terms = kl_term(alloc.per_direction * eig.lambda_w_rotated / sigma_w2)
    total = float(np.sum(terms))
    if total <= 0.0:
        raise UndefinedSharesError(
            "total divergence is zero; shares are undefined (uniform_shares "
            "is the documented fallback)"
        )
    return NormalizedShares(c=terms / total)


def closed_form_allocation(
    eig: EigenStructure,
    shares: NormalizedShares,
    sigma_w2: float,
    budget: CovertBudget,
) -> PowerAllocation:
    """Achievability allocation ``q_i = (2 sigma_w2 / g_i) sqrt(c_i d^2 / n)``.

    Meets the divergence budget by construction (the per-direction term is
    dominated by ``x^2 / 2`` at these powers); zero power wherever the share
    is zero.
    """
    c = shares.c
    g = eig.lambda_w_rotated
    if c.shape != g.shape:
        raise InvalidInputError(
            f"shares length {c.shape} does not match {g.shape} directions"
        )
    if np.any((c > 0) & (g <= 0)):
        raise InconsistentSharesError(
            "positive share assigned to a direction with zero adversary gain"
        )
    q = np.zeros_like(c)
    active = c > 0
    scale = budget.detection_level**2 / budget.blocklength
    q[active] = 2.0 * sigma_w2 / g[active] * np.sqrt(c[active] * scale)
    return PowerAllocation.from_eigen(eig, q)


# ---------------------------------------------------------------------------
# Dual-bisection optimizer


def _direction_power(a: float, b: float, mu: float, eta: float) -> float:
    """Stationary power of one direction at fixed multipliers.

    Solves ``1/(q + 1/a) = mu + eta b^2 q / (1 + b q)`` for ``q >= 0``.
    The left side strictly decreases and the right side is nondecreasing,
    so the root is unique; returns ``inf`` when nothing bounds the power.
    """
    if a <= mu:
        return 0.0
    if b == 0.0 or eta == 0.0:
        if mu <= 0.0:
            return math.inf
        return 1.0 / mu - 1.0 / a

    def phi(q: float) -> float:
        return 1.0 / (q + 1.0 / a) - mu - eta * b * b * q / (1.0 + b * q)

    hi = 1.0 / mu - 1.0 / a if mu > 0.0 else 1.0 / a
    if mu <= 0.0:
        while phi(hi) > 0.0:
            hi *= 2.0
            if hi > 1e300:
                return math.inf
    lo = 0.0
    q = min(hi, max(1e-300, 0.5 * hi))
    for _ in range(200):
        val = phi(q)
        if val > 0.0:
            lo = q
        else:
            hi = q
        dphi = -1.0 / (q + 1.0 / a) ** 2 - eta * b * b / (1.0 + b * q) ** 2
        q_new = q - val / dphi
        if not (lo < q_new < hi):
            q_new = 0.5 * (lo + hi)
        if abs(q_new - q) <= 1e-15 * max(q_new, 1e-300):
            return q_new
        q = q_new
    return q


def _powers(a: np.ndarray, b: np.ndarray, mu: float, eta: float) -> np.ndarray:
    return np.array([_direction_power(ai, bi, mu, eta) for ai, bi in zip(a, b)])


def _solve_power_multiplier(a: np.ndarray, b: np.ndarray, eta: float, power: float):
    """Power multiplier and allocation meeting the total-power cap."""
    q0 = _powers(a, b, 0.0, eta)
    total = float(np.sum(q0))
    if math.isfinite(total) and total <= power:
        return 0.0, q0
    lo, hi = 0.0, float(np.max(a))
    q = q0
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        q = _powers(a, b, mu, eta)
        if float(np.sum(q)) > power:
            lo = mu
        else:
            hi = mu
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    mu = hi
    q = _powers(a, b, mu, eta)
    return mu, q


def _null_space_waterfill(
    a: np.ndarray, b: np.ndarray, power: float
) -> np.ndarray:
    """Water-filling restricted to directions invisible to the adversary."""
    q = np.zeros_like(a)
    idx = np.flatnonzero((b == 0.0) & (a > 0.0))
    if idx.size == 0 or power <= 0.0:
        return q
    gains = a[idx]
    lo, hi = 0.0, float(np.max(gains))
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        filled = np.maximum(1.0 / mu - 1.0 / gains, 0.0)
        if float(np.sum(filled)) > power:
            lo = mu
        else:
            hi = mu
    q[idx] = np.maximum(1.0 / hi - 1.0 / gains, 0.0)
    return q


def optimize_covariance(
    scenario: MimoScenario, budget: CovertBudget
) -> AllocationResult:
    """Maximize the rate to the intended receiver under both constraints.

    Searches covariances diagonal in the intended receiver's eigen-basis.
    Outer bisection runs on the divergence multiplier, an inner bisection on
    the power multiplier, and each direction's stationarity equation is
    solved by a safeguarded Newton step, so KKT residuals land at solver
    precision.  With a zero detection budget the feasible set collapses to
    the adversary's null directions and plain water-filling applies there.

    Returns
    -------
    AllocationResult
        Feasible allocation (divergence within budget, power within cap),
        achieved rate in nats per channel use, and both multipliers.
    """
    eig = rotated_eigen(scenario)
    a = eig.lambda_b / scenario.sigma_b2
    b = eig.lambda_w_rotated / scenario.sigma_w2
    power = scenario.power_budget
    target = budget.kl_target

    def finish(q: np.ndarray, mu: float, eta: float) -> AllocationResult:
        alloc = PowerAllocation.from_eigen(eig, q)
        rate = float(np.sum(np.log1p(q * a)))
        kl = float(np.sum(kl_term(q * b)))
        return AllocationResult(
            allocation=alloc,
            rate=rate,
            kl_value=kl,
            mu=mu,
            eta=eta,
            power_active=mu > _MULTIPLIER_TOL,
            kl_active=eta > _MULTIPLIER_TOL,
        )

    if power <= 0.0 or not np.any(a > 0.0):
        return finish(np.zeros_like(a), 0.0, 0.0)

    if target == 0.0:
        q = _null_space_waterfill(a, b, power)
        mu = 0.0
        if np.any(q > 0.0):
            active = q > 0.0
            mu = float(np.min(1.0 / (q[active] + 1.0 / a[active])))
        return finish(q, mu, 0.0)

    mu0, q0 = _solve_power_multiplier(a, b, 0.0, power)
    kl0 = float(np.sum(kl_term(q0 * b)))
    if kl0 <= target:
        return finish(q0, mu0, 0.0)

    # Divergence constraint binds: bracket the multiplier from above.
    eta_hi = 1.0
    for _ in range(400):
        mu_hi, q_hi = _solve_power_multiplier(a, b, eta_hi, power)
        if float(np.sum(kl_term(q_hi * b))) <= target:
            break
        eta_hi *= 2.0
    eta_lo = 0.0
    best = (q_hi, mu_hi, eta_hi)
    for _ in range(200):
        eta = 0.5 * (eta_lo + eta_hi)
        mu, q = _solve_power_multiplier(a, b, eta, power)
        kl = float(np.sum(kl_term(q * b)))
        if kl <= target:
            eta_hi = eta
            best = (q, mu, eta)
            if target - kl <= 1e-12 * target:
                break
        else:
            eta_lo = eta
        if eta_hi - eta_lo <= 1e-15 * max(eta_hi, 1.0):
            break
    q, mu, eta = best
    return finish(q, mu, eta)


# ---------------------------------------------------------------------------
# Unit-rank steering


def _null_offsets(geometry: ArrayGeometry) -> np.ndarray:
    """Beam-pattern null offsets ``k / L`` within one period, k = 1..N-1."""
    length = geometry.array_length
    return np.arange(1, geometry.num_antennas) / length


def _candidate_nulls(geometry: ArrayGeometry, omega_w: float) -> np.ndarray:
    """All exact nulls toward the adversary that land inside [-1, 1]."""
    length = geometry.array_length
    n = geometry.num_antennas
    k_lo = math.ceil((-1.0 - omega_w) * length)
    k_hi = math.floor((1.0 - omega_w) * length)
    ks = np.arange(k_lo, k_hi + 1)
    ks = ks[ks % n != 0]
    return omega_w + ks / length


def steer_direction(
    tx: ArrayGeometry,
    omega_b: float,
    omega_w: float,
    willie_gain: float,
    sigma_w2: float,
    power: float,
    budget: CovertBudget,
) -> float:
    """Steering cosine maximizing the gain toward the intended receiver.

    Feasibility requires full transmit power to stay within the divergence
    budget given the adversary's projected gain
    ``willie_gain * beam_gain(cosine - omega_w)^2``.  The search runs a
    dense period-aware grid augmented with the exact adversary nulls and the
    receiver's own cosine, then zooms the grid around the best point.
    """
    if abs(omega_b) > 1 or abs(omega_w) > 1:
        raise InvalidInputError("directional cosines must lie in [-1, 1]")
    if sigma_w2 <= 0 or willie_gain < 0 or power < 0:
        raise InvalidInputError("invalid steering parameters")
    x_star = invert_kl_term(budget.kl_target)
    limit = power * willie_gain / sigma_w2
    if limit <= x_star:
        return float(omega_b)
    # Largest tolerable squared gain toward the adversary.
    gain2_cap = x_star / limit

    def feasible_gain(omegas: np.ndarray) -> np.ndarray:
        toward_w = beam_gain(tx, omegas - omega_w) ** 2
        score = beam_gain(tx, omegas - omega_b) ** 2
        return np.where(toward_w <= gain2_cap * (1.0 + 1e-12), score, -1.0)

    grid = np.linspace(-1.0, 1.0, 100_001)
    extras = [np.atleast_1d(omega_b), _candidate_nulls(tx, omega_w)]
    grid = np.concatenate([grid] + extras)
    scores = feasible_gain(grid)
    best = int(np.argmax(scores))
    if scores[best] < 0.0:
        raise InvalidInputError(
            "no feasible steering direction exists for this geometry"
        )
    omega_best = float(grid[best])
    score_best = float(scores[best])

    width = 2.0 / 100_000
    for _ in range(3):
        local = np.linspace(omega_best - width, omega_best + width, 2001)
        local = np.clip(local, -1.0, 1.0)
        vals = feasible_gain(local)
        idx = int(np.argmax(vals))
        if vals[idx] > score_best:
            omega_best = float(local[idx])
            score_best = float(vals[idx])
        width /= 1000.0
    return omega_best


def null_steer_index(
    tx: ArrayGeometry,
    omega_b: float,
    omega_w: float,
    bob_gain: float,
    sigma_b2: float,
    power: float,
) -> NullSteering:
    """Best exact-null steering toward the adversary.

    Picks ``k`` in ``1..N-1`` maximizing the gain toward the intended
    receiver when transmitting on the signature at ``omega_w + k / L``
    (which has exactly zero gain toward the adversary), and evaluates the
    full-power rate ``log(1 + P g_b beam^2 / sigma_b2)``.  Smallest ``k``
    wins ties.
    """
    if tx.num_antennas < 2:
        raise NoNullDirectionError("null steering needs at least two antennas")
    if sigma_b2 <= 0 or bob_gain < 0 or power < 0:
        raise InvalidInputError("invalid null-steering parameters")
    offsets = _null_offsets(tx)
    gains = beam_gain(tx, omega_w - omega_b + offsets)
    k = int(np.argmax(gains)) + 1
    steer = omega_w + k / tx.array_length
    # The signature is periodic in the cosine; report the principal value.
    period = 1.0 / tx.antenna_separation
    steer -= period * round(steer / period)
    rate = math.log1p(power * bob_gain * float(gains[k - 1]) ** 2 / sigma_b2)
    return NullSteering(k=k, steer_cosine=steer, rate=rate)

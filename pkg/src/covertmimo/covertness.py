"""Divergence-based covertness metrics and their inverses.

The single-letter divergence an energy detector can exploit decomposes per
eigen-direction into ``x - log(1 + x)`` terms with ``x`` the received SNR in
that direction.  This module evaluates that divergence, converts it into the
detection-error floor, inverts it into a covert power limit, and derives the
transmit-antenna count needed to hit a detectability target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, EigenStructure
from .errors import AlignmentError, InvalidInputError

_BRANCH_POINT = -1.0 / math.e

# x - log(1+x) loses relative precision to cancellation for small x; below
# this cutoff the alternating series is used instead.
_SERIES_CUTOFF = 0.01
# Coefficients of sum_{k>=2} (-1)^k x^k / k, enough terms for the cutoff.
_SERIES_K = np.arange(2, 15)
_SERIES_COEF = (-1.0) ** _SERIES_K / _SERIES_K


@dataclass(frozen=True)
class CovertBudget:
    """Blocklength and the tolerances a covert code must respect.

    ``detection_level`` bounds the adversary's advantage over blind guessing
    (error sum stays above ``1 - detection_level``), ``secrecy_level`` is the
    information-leakage tolerance (carried for completeness, quantitatively
    unused), and ``error_level`` the decoding-error tolerance.
    """

    blocklength: int
    detection_level: float
    secrecy_level: float = 0.0
    error_level: float = 0.0

    def __post_init__(self):
        if int(self.blocklength) != self.blocklength or self.blocklength < 1:
            raise InvalidInputError("blocklength must be a positive integer")
        if self.detection_level < 0:
            raise InvalidInputError("detection_level must be nonnegative")
        if not 0 <= self.error_level < 1:
            raise InvalidInputError("error_level must lie in [0, 1)")

    @property
    def kl_target(self) -> float:
        """Per-channel-use divergence budget, ``2 delta^2 / n``."""
        return 2.0 * self.detection_level**2 / self.blocklength


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-eigen-direction transmit powers and the covariance they induce."""

    per_direction: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.per_direction, dtype=float)
        object.__setattr__(self, "per_direction", q)
        object.__setattr__(
            self, "covariance", np.asarray(self.covariance, dtype=np.complex128)
        )
        if np.any(q < 0):
            raise InvalidInputError("per-direction powers must be nonnegative")

    @classmethod
    def from_eigen(cls, eig: EigenStructure, per_direction) -> "PowerAllocation":
        """Build the covariance ``U_b diag(q) U_b'`` from per-direction powers."""
        q = np.asarray(per_direction, dtype=float)
        if q.shape != (eig.n_a,):
            raise InvalidInputError(
                f"expected {eig.n_a} per-direction powers, got shape {q.shape}"
            )
        u = eig.bob_basis
        cov = (u * q) @ u.conj().T
        return cls(per_direction=q, covariance=cov)

    @classmethod
    def zero(cls, n_a: int) -> "PowerAllocation":
        return cls(
            per_direction=np.zeros(n_a),
            covariance=np.zeros((n_a, n_a), dtype=np.complex128),
        )

    @property
    def total_power(self) -> float:
        return float(np.sum(self.per_direction))


def kl_term(snr):
    """Per-direction divergence term ``x - log(1 + x)`` for ``x >= 0``.

    Evaluated through an alternating series for small ``x`` so the result
    keeps full relative precision (the naive difference cancels
    catastrophically once ``x`` is small).  Accepts scalars or arrays.
    """
    x = np.asarray(snr, dtype=float)
    if np.any(x < 0):
        raise InvalidInputError("kl_term requires nonnegative arguments")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    small = x <= _SERIES_CUTOFF
    out = np.empty_like(x)
    xl = x[~small]
    out[~small] = xl - np.log1p(xl)
    xs = x[small]
    acc = np.zeros_like(xs)
    for coef in _SERIES_COEF[::-1]:
        acc = acc * xs + coef
    out[small] = acc * xs * xs
    return float(out[0]) if scalar else out


def invert_kl_term(target: float) -> float:
    """Solve ``x - log(1 + x) = target`` for ``x >= 0``.

    Newton iteration on the series-stabilized forward map; the start value
    ``sqrt(2 t) + 2 t / 3`` is the small-target expansion, which keeps the
    iteration monotone on this convex function.
    """
    if target < 0:
        raise InvalidInputError("target divergence must be nonnegative")
    if target == 0:
        return 0.0
    x = math.sqrt(2.0 * target) + 2.0 * target / 3.0
    if target > 1.0:
        x = max(x, target + math.log1p(target))
    for _ in range(100):
        f = kl_term(x) - target
        # f'(x) = x / (1 + x)
        step = f * (1.0 + x) / x
        x_new = max(x - step, x * 0.1)
        if abs(x_new - x) <= 1e-16 * x_new:
            return x_new
        x = x_new
    return x


def kl_single_letter(
    alloc: PowerAllocation, eig: EigenStructure, sigma_w2: float
) -> float:
    """Single-letter divergence seen by the adversary for a basis-aligned allocation.

    Sums ``kl_term(q_i * g_i / sigma_w2)`` over eigen-directions, where
    ``g_i`` are the adversary's rotated gains.  Zero exactly when every
    product ``q_i * g_i`` vanishes.
    """
    if sigma_w2 <= 0:
        raise InvalidInputError("sigma_w2 must be positive")
    q = alloc.per_direction
    g = np.asarray(eig.lambda_w_rotated, dtype=float)
    if q.shape != g.shape:
        raise InvalidInputError(
            f"allocation length {q.shape} does not match {g.shape} directions"
        )
    if np.any(g < 0):
        raise InvalidInputError("rotated gains must be nonnegative")
    return float(np.sum(kl_term(q * g / sigma_w2)))


def kl_from_covariance(h_w: np.ndarray, covariance: np.ndarray, sigma_w2: float) -> float:
    """Exact single-letter divergence for an arbitrary transmit covariance.

    ``trace(S) - logdet(I + S)`` with ``S = h_w Q h_w' / sigma_w2``, computed
    through the eigenvalues of ``S`` so tiny allocations keep precision.
    Dominates :func:`kl_single_letter` (which reads only the rotated
    diagonal) whenever the two channel grams fail to commute; the two agree
    for rank-one allocations and shared eigen-bases.
    """
    if sigma_w2 <= 0:
        raise InvalidInputError("sigma_w2 must be positive")
    s = h_w @ np.asarray(covariance, dtype=np.complex128) @ h_w.conj().T / sigma_w2
    s = 0.5 * (s + s.conj().T)
    eigs = np.linalg.eigvalsh(s)
    eigs = np.maximum(eigs, 0.0)
    return float(np.sum(kl_term(eigs)))


def kl_n_letter(single: float, n: int) -> float:
    """Divergence across a block of ``n`` i.i.d. channel uses, ``n * single``."""
    if single < 0:
        raise InvalidInputError("single-letter divergence must be nonnegative")
    if int(n) != n or n < 1:
        raise InvalidInputError("blocklength must be a positive integer")
    return float(n) * float(single)


def detection_lower_bound(kl_n: float) -> float:
    """Guaranteed floor on the adversary's summed error probabilities.

    ``max(0, 1 - sqrt(kl_n / 2))``: with zero divergence any test is blind
    (floor 1); the bound saturates at 0 once ``kl_n >= 2``.
    """
    if kl_n < 0:
        raise InvalidInputError("n-letter divergence must be nonnegative")
    return max(0.0, 1.0 - math.sqrt(kl_n / 2.0))


def _w_branch_series(p: float) -> float:
    """Series for the lower Lambert branch around its branch point.

    ``p`` is the negative square root of ``2 (1 + e x)``.
    """
    return -1.0 + p * (
        1.0
        + p
        * (
            -1.0 / 3.0
            + p
            * (
                11.0 / 72.0
                + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0)))
            )
        )
    )


def lambert_w_minus1(x: float) -> float:
    """Lower branch of the Lambert function on ``[-1/e, 0)``.

    Returns the ``w <= -1`` solution of ``w exp(w) = x``.  Uses the
    branch-point series very close to ``-1/e``, otherwise Halley iteration
    from ``log(-x) - log(-log(-x))``, with a bisection fallback on the
    monotone segment if the iteration ever stalls.
    """
    if not (_BRANCH_POINT <= x < 0):
        raise InvalidInputError(
            f"lambert_w_minus1 domain is [-1/e, 0), got {x}"
        )
    p2 = 2.0 * (1.0 + math.e * x)
    if p2 <= 0.0:
        return -1.0
    if p2 < 1e-6:
        return _w_branch_series(-math.sqrt(p2))

    if x > -0.25:
        log_neg_x = math.log(-x)
        w = log_neg_x - math.log(-log_neg_x)
    else:
        w = _w_branch_series(-math.sqrt(p2))
        w = min(w, -1.0 - 1e-9)

    for _ in range(80):
        ew = math.exp(w)
        f = w * ew - x
        fp = ew * (w + 1.0)
        if fp == 0.0:
            break
        denom = fp - f * (w + 2.0) / (2.0 * (w + 1.0))
        if denom == 0.0:
            break
        step = f / denom
        w_new = w - step
        if w_new >= -1.0:
            w_new = 0.5 * (w - 1.0)
        if abs(w_new - w) <= 1e-14 * (1.0 + abs(w_new)):
            return w_new
        w = w_new

    # Bisection fallback: w exp(w) decreases from -1/e to 0 on (-inf, -1].
    lo = -1.0
    hi = -2.0
    while hi * math.exp(hi) < x:
        hi *= 2.0
    lo, hi = hi, lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def covert_power_limit(
    lambda_w_eff: float, sigma_w2: float, n: int, delta_kl: float
):
    """Largest transmit power meeting the divergence budget on one direction.

    Inverts ``kl_term`` at the per-use budget and rescales by
    ``sigma_w2 / lambda_w_eff``.  Returns ``None`` when the effective gain
    toward the adversary is exactly zero: no finite power is constrained and
    the caller must cap at its own power budget.
    """
    if sigma_w2 <= 0:
        raise InvalidInputError("sigma_w2 must be positive")
    if lambda_w_eff < 0:
        raise InvalidInputError("effective gain must be nonnegative")
    if delta_kl < 0:
        raise InvalidInputError("detection_level must be nonnegative")
    if lambda_w_eff == 0.0:
        return None
    budget = CovertBudget(blocklength=n, detection_level=delta_kl)
    x_star = invert_kl_term(budget.kl_target)
    return sigma_w2 * x_star / lambda_w_eff


def min_antennas(
    geometry: ArrayGeometry,
    omega: float,
    xi_w2: float,
    n_w: int,
    sigma_w2: float,
    budget: CovertBudget,
    power: float,
    *,
    hold: str = "array-length",
    worst_case: bool = False,
) -> int:
    """Fewest transmit antennas that meet the detectability target at full power.

    ``omega`` is the cosine misalignment between the adversary and the
    steered direction; ``xi_w2`` the adversary's path power attenuation.

    Two conventions, reflecting what stays fixed as antennas are added:

    - ``hold="array-length"``: closed form with the array length frozen at
      ``geometry.array_length``; ``worst_case=True`` replaces the aligned
      sine numerator by its maximum so the count holds for every lobe
      alignment (this is the count past which the divergence budget is met
      for all larger arrays at fixed separation).
    - ``hold="separation"``: integer search with the length growing as
      ``N * separation``, returning the first count whose directly evaluated
      divergence meets the budget (lobe oscillation means later counts can
      transiently violate it; use ``worst_case`` for a permanent guarantee).
    """
    if budget.detection_level <= 0:
        raise InvalidInputError("min_antennas requires a positive detection_level")
    if sigma_w2 <= 0 or power < 0 or xi_w2 < 0 or n_w < 1:
        raise InvalidInputError("invalid adversary parameters")
    sep_sin = math.sin(math.pi * geometry.antenna_separation * omega)
    if abs(sep_sin) < 1e-12:
        raise AlignmentError(
            "adversary aligned with the array grating (separation sine ~ 0)"
        )
    x_star = invert_kl_term(budget.kl_target)
    prefactor = power * xi_w2 * n_w / (sigma_w2 * sep_sin**2 * x_star)

    if hold == "array-length":
        numerator = 1.0 if worst_case else math.sin(
            math.pi * geometry.array_length * omega
        ) ** 2
        return max(1, math.ceil(prefactor * numerator))
    if hold != "separation":
        raise InvalidInputError(f'hold must be "array-length" or "separation", got {hold!r}')

    if worst_case:
        return max(1, math.ceil(prefactor))
    # Direct search: the worst-case count above is a guaranteed terminator.
    cap = max(1, math.ceil(prefactor))
    chunk = 1 << 16
    start = 1
    while start <= cap:
        stop = min(start + chunk, cap + 1)
        counts = np.arange(start, stop, dtype=float)
        num = np.sin(np.pi * counts * geometry.antenna_separation * omega) ** 2
        snr = power * xi_w2 * n_w * num / (sigma_w2 * counts * sep_sin**2)
        ok = kl_term(snr) <= budget.kl_target
        if np.any(ok):
            return int(counts[np.argmax(ok)])
        start = stop
    return cap

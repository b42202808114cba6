"""Shared fixtures-in-spirit: scenario generators and independent oracles."""

import numpy as np

from covertmimo import MimoScenario


def rand_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_scenario(
    rng, n_a=2, n_b=2, n_w=2, power=5.0, sigma_b2=1.0, sigma_w2=1.0
):
    return MimoScenario(
        h_b=rand_complex(rng, (n_b, n_a)),
        h_w=rand_complex(rng, (n_w, n_a)),
        sigma_b2=sigma_b2,
        sigma_w2=sigma_w2,
        power_budget=power,
    )


def siso_scenario(gain_b=1.0, gain_w=1.0, sigma_b2=1.0, sigma_w2=1.0, power=1.0):
    return MimoScenario(
        h_b=np.array([[np.sqrt(gain_b)]], dtype=complex),
        h_w=np.array([[np.sqrt(gain_w)]], dtype=complex),
        sigma_b2=sigma_b2,
        sigma_w2=sigma_w2,
        power_budget=power,
    )


def _kl_inverse_bisect(target):
    """Solve x - log(1+x) = target by plain bisection (oracle-local)."""
    if target <= 0:
        return 0.0
    hi = 1.0
    while hi - np.log1p(hi) < target:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - np.log1p(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi


def grid_oracle_2d(lam_b, lam_w, sigma_b2, sigma_w2, power, kl_target, points=2000):
    """Brute-force rate maximum over the 2-D feasible power box, refined once.

    The feasible region is bounded per direction by the divergence budget
    (each term alone must fit), so the grid spans that box rather than the
    full power square.  Returns (best_q, best_rate).  Written against the
    raw formulas only.
    """
    a = np.asarray(lam_b) / sigma_b2
    b = np.asarray(lam_w) / sigma_w2
    x_max = _kl_inverse_bisect(kl_target)
    lo = np.zeros(2)
    hi = np.array(
        [min(power, x_max / bi) if bi > 0 else power for bi in b]
    )
    best_q = np.zeros(2)
    best_rate = 0.0
    for _ in range(2):
        q1 = np.linspace(lo[0], hi[0], points)
        q2 = np.linspace(lo[1], hi[1], points)
        g1, g2 = np.meshgrid(q1, q2, indexing="ij")
        kl = (
            g1 * b[0]
            - np.log1p(g1 * b[0])
            + g2 * b[1]
            - np.log1p(g2 * b[1])
        )
        rate = np.log1p(g1 * a[0]) + np.log1p(g2 * a[1])
        rate[(g1 + g2 > power) | (kl > kl_target)] = -1.0
        idx = np.unravel_index(np.argmax(rate), rate.shape)
        if rate[idx] > best_rate:
            best_rate = float(rate[idx])
            best_q = np.array([g1[idx], g2[idx]])
        step = np.array([q1[1] - q1[0], q2[1] - q2[0]])
        lo = np.maximum(best_q - 5 * step, 0.0)
        hi = best_q + 5 * step
    return best_q, best_rate

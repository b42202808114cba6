"""Channel construction for evenly spaced uniform linear arrays.

Builds line-of-sight and multipath MIMO channel matrices from array
geometry, evaluates the transmit beam pattern, and decomposes a channel
pair into the eigen-structure that the covertness, allocation, and scaling
routines consume.

All directional arguments are directional cosines (cosine of the angle a
path makes with the array axis), so physical values lie in [-1, 1].  The
beam pattern and the array signature are periodic in the cosine with
period 1/separation, and values outside [-1, 1] are accepted under that
periodic extension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError, NumericalConsistencyError

# Relative tolerance below which imaginary residues on provably-real
# quantities are truncated; larger residues raise NumericalConsistencyError.
_IMAG_TOL = 1e-12
# Relative snap window for exact beam-pattern nulls and peaks.
_NULL_SNAP = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    """Evenly spaced uniform linear array.

    Parameters
    ----------
    num_antennas : int
        Number of array elements, at least 1.
    antenna_separation : float
        Element spacing normalized to the carrier wavelength.
    """

    num_antennas: int
    antenna_separation: float

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise InvalidInputError(
                f"num_antennas must be a positive integer, got {self.num_antennas}"
            )
        if not self.antenna_separation > 0:
            raise InvalidInputError(
                f"antenna_separation must be positive, got {self.antenna_separation}"
            )

    @property
    def array_length(self) -> float:
        """Array length normalized to the carrier wavelength."""
        return self.num_antennas * self.antenna_separation


@dataclass(frozen=True)
class LosPath:
    """A single propagation path descriptor.

    ``attenuation`` is the per-antenna-pair amplitude attenuation,
    ``directional_cosine`` the cosine of the path angle at its reference
    array, and ``normalized_distance`` the first-antenna-to-first-antenna
    distance in carrier wavelengths (sets the bulk phase only).
    """

    attenuation: float
    directional_cosine: float = 0.0
    normalized_distance: float = 0.0

    def __post_init__(self):
        if self.attenuation < 0:
            raise InvalidInputError("attenuation must be nonnegative")
        if abs(self.directional_cosine) > 1:
            raise InvalidInputError(
                f"|directional_cosine| must be <= 1, got {self.directional_cosine}"
            )
        if self.normalized_distance < 0:
            raise InvalidInputError("normalized_distance must be nonnegative")


@dataclass(frozen=True, eq=False)
class MimoScenario:
    """A deterministic channel pair with noise powers and a power budget.

    ``h_b`` (intended receiver) is ``n_b x n_a`` and ``h_w`` (adversary) is
    ``n_w x n_a``; both must share the transmit dimension.  Noise powers are
    per complex sample.
    """

    h_b: np.ndarray
    h_w: np.ndarray
    sigma_b2: float
    sigma_w2: float
    power_budget: float

    def __post_init__(self):
        h_b = np.atleast_2d(np.asarray(self.h_b, dtype=np.complex128))
        h_w = np.atleast_2d(np.asarray(self.h_w, dtype=np.complex128))
        object.__setattr__(self, "h_b", h_b)
        object.__setattr__(self, "h_w", h_w)
        if h_b.shape[1] != h_w.shape[1]:
            raise InvalidInputError(
                f"transmit dimensions disagree: h_b has {h_b.shape[1]} columns, "
                f"h_w has {h_w.shape[1]}"
            )
        if not (self.sigma_b2 > 0 and self.sigma_w2 > 0):
            raise InvalidInputError("noise powers must be strictly positive")
        if self.power_budget < 0:
            raise InvalidInputError("power budget must be nonnegative")

    @property
    def n_a(self) -> int:
        return self.h_b.shape[1]

    @property
    def n_b(self) -> int:
        return self.h_b.shape[0]

    @property
    def n_w(self) -> int:
        return self.h_w.shape[0]

    @property
    def n_streams(self) -> int:
        """Number of usable eigen-directions, min(n_a, n_b)."""
        return min(self.n_a, self.n_b)


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Eigen-decomposition of a channel pair in the intended receiver's basis.

    ``lambda_b`` holds the eigenvalues of ``h_b' h_b`` sorted descending and
    ``lambda_w_rotated`` the diagonal of ``U_b' (h_w' h_w) U_b`` under the
    same column order.  Both vectors span all ``n_a`` transmit directions;
    only the leading ``n_streams`` can carry rate.  ``rotation`` is
    ``U_b' U_w`` and ``bob_basis`` is ``U_b`` itself.
    """

    lambda_b: np.ndarray
    lambda_w_rotated: np.ndarray
    rotation: np.ndarray
    bob_basis: np.ndarray
    n_streams: int

    @property
    def n_a(self) -> int:
        return self.lambda_b.shape[0]


@dataclass(frozen=True)
class SpectralBound:
    """Largest noise-normalized power gain the adversary's channel can have."""

    lambda_hat: float

    def __post_init__(self):
        if not self.lambda_hat > 0:
            raise InvalidInputError("lambda_hat must be positive")


def unit_signature(geometry: ArrayGeometry, omega: float) -> np.ndarray:
    """Unit spatial signature of the array in the directional cosine ``omega``.

    Entry ``i`` is ``exp(-j 2 pi sep i omega) / sqrt(N)`` for
    ``i = 0 .. N-1``, so the vector has unit 2-norm and the magnitude of the
    inner product of two signatures reproduces :func:`beam_gain` at their
    cosine offset.
    """
    n = geometry.num_antennas
    idx = np.arange(n)
    phase = -2j * np.pi * geometry.antenna_separation * omega * idx
    return np.exp(phase) / np.sqrt(n)


def beam_gain(geometry: ArrayGeometry, omega) -> Union[float, np.ndarray]:
    """Beam-pattern magnitude ``|sin(pi L w) / (N sin(pi L w / N))|``.

    Periodic in ``omega`` with period ``N / L = 1/separation``, equal to 1
    at multiples of the period and exactly 0 at cosine offsets ``k / L`` for
    ``k`` not a multiple of ``N``.  Values in those snap windows are
    resolved to their analytic limits, so nulls are exact zeros.

    Accepts a scalar or an array of cosines; total on the reals.
    """
    n = geometry.num_antennas
    x = np.asarray(omega, dtype=float) * geometry.array_length
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    out = np.empty_like(x)
    nearest = np.round(x)
    at_integer = np.abs(x - nearest) <= _NULL_SNAP * np.maximum(1.0, np.abs(x))
    # Integer argument: the ratio is 1 at multiples of N (peak) and 0 otherwise.
    peak = at_integer & (np.round(nearest / n) * n == nearest)
    null = at_integer & ~peak
    out[peak] = 1.0
    out[null] = 0.0

    rest = ~at_integer
    if np.any(rest):
        xr = x[rest]
        denom = n * np.sin(np.pi * xr / n)
        # Off-integer points cannot make the denominator vanish; guard anyway.
        safe = np.abs(denom) > 1e-300
        val = np.ones_like(xr)
        val[safe] = np.abs(np.sin(np.pi * xr[safe]) / denom[safe])
        out[rest] = np.minimum(val, 1.0)

    return float(out[0]) if scalar else out


def los_channel(
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    path: LosPath,
    omega_tx: float,
    omega_rx: float,
) -> np.ndarray:
    """Rank-one line-of-sight channel matrix.

    Returns ``sqrt(att^2 N_tx N_rx) exp(-j 2 pi d) u_rx(omega_rx) u_tx(omega_tx)'``,
    whose single nonzero singular value is ``att * sqrt(N_tx N_rx)``.
    """
    amplitude = path.attenuation * np.sqrt(tx.num_antennas * rx.num_antennas)
    phase = np.exp(-2j * np.pi * path.normalized_distance)
    u_tx = unit_signature(tx, omega_tx)
    u_rx = unit_signature(rx, omega_rx)
    return amplitude * phase * np.outer(u_rx, u_tx.conj())


def multipath_channel(
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    paths: Sequence[tuple],
) -> np.ndarray:
    """Sum of rank-one path contributions.

    ``paths`` is a sequence of ``(LosPath, omega_tx, omega_rx)`` triples.
    The result is full rank when at least ``min(N_tx, N_rx)`` paths have
    pairwise-distinct transmit and receive cosines modulo one period.
    """
    if len(paths) == 0:
        raise InvalidInputError("multipath_channel needs at least one path")
    h = np.zeros((rx.num_antennas, tx.num_antennas), dtype=np.complex128)
    for path, omega_tx, omega_rx in paths:
        h += los_channel(tx, rx, path, omega_tx, omega_rx)
    return h


def angular_basis(geometry: ArrayGeometry) -> np.ndarray:
    """Unitary matrix whose columns are signatures at cosines ``l / L``."""
    length = geometry.array_length
    cols = [
        unit_signature(geometry, l / length) for l in range(geometry.num_antennas)
    ]
    return np.column_stack(cols)


def angular_representation(
    h: np.ndarray, tx: ArrayGeometry, rx: ArrayGeometry
) -> np.ndarray:
    """Express a channel matrix in the angular (beamspace) bases.

    Returns ``U_rx' h U_tx`` with the bases of :func:`angular_basis`.  The
    transform is unitary on both sides, so singular values are preserved and
    ``U_rx @ result @ U_tx'`` recovers ``h``.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (rx.num_antennas, tx.num_antennas):
        raise InvalidInputError(
            f"channel shape {h.shape} does not match geometries "
            f"({rx.num_antennas}, {tx.num_antennas})"
        )
    u_tx = angular_basis(tx)
    u_rx = angular_basis(rx)
    return u_rx.conj().T @ h @ u_tx


def _real_nonnegative(values: np.ndarray, scale: float, what: str) -> np.ndarray:
    """Strip imaginary/negative residues within tolerance, else raise."""
    tol = _IMAG_TOL * max(1.0, scale)
    values = np.asarray(values)
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag), initial=0.0) > tol:
            raise NumericalConsistencyError(
                f"{what}: imaginary residue exceeds tolerance {tol:g}"
            )
        values = values.real
    if np.min(values, initial=0.0) < -tol:
        raise NumericalConsistencyError(
            f"{what}: negative value below -{tol:g}"
        )
    return np.maximum(values, 0.0)


def _fix_column_phases(u: np.ndarray) -> np.ndarray:
    """Make the first non-tiny component of each column real positive."""
    u = u.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        idx = np.argmax(np.abs(col) > 1e-12)
        pivot = col[idx]
        if abs(pivot) > 0:
            u[:, j] = col * (pivot.conj() / abs(pivot))
    return u


def _sorted_eigh(gram: np.ndarray):
    """Hermitian eigen-decomposition, eigenvalues descending, phases fixed."""
    gram = 0.5 * (gram + gram.conj().T)
    vals, vecs = np.linalg.eigh(gram)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = _fix_column_phases(vecs[:, order])
    scale = float(np.abs(np.trace(gram)))
    vals = _real_nonnegative(vals, scale, "eigenvalues")
    return vals, vecs


def rotated_eigen(scenario: MimoScenario) -> EigenStructure:
    """Decompose the channel pair in the intended receiver's eigen-basis.

    Eigen-decomposes ``h_b' h_b`` (eigenvalues descending, column phases
    made deterministic) and reads the adversary's gains as the diagonal of
    ``U_b' (h_w' h_w) U_b``.  The diagonal is real up to rounding; residues
    above tolerance raise :class:`NumericalConsistencyError`.
    """
    gram_b = scenario.h_b.conj().T @ scenario.h_b
    gram_w = scenario.h_w.conj().T @ scenario.h_w
    lambda_b, u_b = _sorted_eigh(gram_b)
    lambda_w, u_w = _sorted_eigh(gram_w)
    rotated = u_b.conj().T @ gram_w @ u_b
    scale = float(np.abs(np.trace(gram_w)))
    lambda_w_rot = _real_nonnegative(np.diag(rotated), scale, "rotated gains")
    return EigenStructure(
        lambda_b=lambda_b,
        lambda_w_rotated=lambda_w_rot,
        rotation=u_b.conj().T @ u_w,
        bob_basis=u_b,
        n_streams=scenario.n_streams,
    )


# ---------------------------------------------------------------------------
# JSON ingestion / emission


def _complex_matrix_from_pairs(pairs, rows: int, cols: int, key: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != rows * cols:
        raise InvalidInputError(
            f'"{key}" must be a row-major list of {rows * cols} [re, im] pairs'
        )
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)


def _complex_matrix_to_pairs(h: np.ndarray) -> list:
    flat = np.asarray(h, dtype=np.complex128).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    text = Path(source).read_text()
    return json.loads(text)


def scenario_from_json(source) -> MimoScenario:
    """Build a scenario from a JSON file path or an already-parsed dict.

    Expected keys: ``n_a``, ``n_b``, ``n_w`` (integers), ``sigma_b2``,
    ``sigma_w2``, ``power`` (reals), and ``h_b``, ``h_w`` as row-major
    lists of ``[re, im]`` pairs.
    """
    doc = _load_json(source)
    try:
        n_a = int(doc["n_a"])
        n_b = int(doc["n_b"])
        n_w = int(doc["n_w"])
        sigma_b2 = float(doc["sigma_b2"])
        sigma_w2 = float(doc["sigma_w2"])
        power = float(doc["power"])
        h_b = _complex_matrix_from_pairs(doc["h_b"], n_b, n_a, "h_b")
        h_w = _complex_matrix_from_pairs(doc["h_w"], n_w, n_a, "h_w")
    except KeyError as exc:
        raise InvalidInputError(f"scenario document is missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed scenario document: {exc}") from exc
    return MimoScenario(
        h_b=h_b, h_w=h_w, sigma_b2=sigma_b2, sigma_w2=sigma_w2, power_budget=power
    )


def scenario_to_json(scenario: MimoScenario) -> dict:
    """Serialize a scenario into the document format of :func:`scenario_from_json`."""
    return {
        "n_a": scenario.n_a,
        "n_b": scenario.n_b,
        "n_w": scenario.n_w,
        "sigma_b2": scenario.sigma_b2,
        "sigma_w2": scenario.sigma_w2,
        "power": scenario.power_budget,
        "h_b": _complex_matrix_to_pairs(scenario.h_b),
        "h_w": _complex_matrix_to_pairs(scenario.h_w),
    }


def geometry_from_json(source) -> ArrayGeometry:
    """Build array geometry from a dict or JSON file with the standard keys."""
    doc = _load_json(source)
    try:
        return ArrayGeometry(
            num_antennas=int(doc["num_antennas"]),
            antenna_separation=float(doc["antenna_separation"]),
        )
    except KeyError as exc:
        raise InvalidInputError(f"geometry document is missing key {exc}") from exc

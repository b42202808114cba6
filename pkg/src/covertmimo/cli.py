"""Command-line surface: scenario ingestion, computations, CSV/JSON emission.

Every command writes one output file (format chosen by the ``--out``
extension, ``.csv`` or ``.json``) atomically, and the curve-emitting
commands additionally render a chart next to the data unless ``--no-plot``
is given.  Command-line flags override fields of the ``--config`` JSON.
Outputs are deterministic for a fixed config and seed; floats are written
with 17 significant digits so CSV round-trips are lossless.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import allocation as alloc_mod
from . import covertness, detector, scaling
from .channel import (
    ArrayGeometry,
    MimoScenario,
    beam_gain,
    rotated_eigen,
    scenario_from_json,
)
from .covertness import CovertBudget
from .errors import CovertMimoError, InvalidInputError, UndefinedSharesError

# Millimeter-wave defaults for the sweep commands: 1 km link, free-space
# path loss with constant 3.3e-3, -174 dBm/Hz noise, 5 MHz band, 10 dBm
# power budget, target level 1e-2 over a 1e4-use block, broadside intended
# receiver and an adversary 45 degrees off.
_DEFAULTS = {
    "num_antennas": 4,
    "antenna_separation": 0.5,
    "distance_m": 1000.0,
    "pathloss_constant": 3.3e-3,
    "pathloss_exponent": 2.0,
    "noise_dbm_per_hz": -174.0,
    "bandwidth_hz": 5e6,
    "power_dbm": 10.0,
    "n": 10_000,
    "delta_kl": 1e-2,
    "phi_b": math.pi / 2.0,
    "phi_w": math.pi / 4.0,
    "n_b": 1,
    "n_w": 10,
    "trials": 10_000,
    "seed": 0,
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path: Path, header, rows) -> None:
    """Write rows as CSV or JSON according to the output extension."""
    if path.suffix == ".json":
        doc = [dict(zip(header, row)) for row in rows]
        _atomic_write(path, json.dumps(doc, indent=2) + "\n")
    elif path.suffix == ".csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        raise InvalidInputError(f"output extension must be .csv or .json: {path}")


def _emit_doc(path: Path, doc: dict) -> None:
    if path.suffix == ".json":
        _atomic_write(path, json.dumps(doc, indent=2) + "\n")
    elif path.suffix == ".csv":
        keys = list(doc.keys())
        _emit(path, keys, [tuple(doc[k] for k in keys)])
    else:
        raise InvalidInputError(f"output extension must be .csv or .json: {path}")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InvalidInputError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config is not valid JSON: {exc}") from exc


class RunConfig(dict):
    """Merged view of built-in defaults, the config file, and CLI flags."""

    def require(self, key: str):
        if key not in self or self[key] is None:
            raise InvalidInputError(f'config is missing required key "{key}"')
        return self[key]


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(_DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in ("seed", "trials", "na_range", "n_range", "nw", "points"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "real_input", False):
        cfg["real_input"] = True
    cfg.setdefault("real_input", False)
    return cfg


def _geometry(cfg: RunConfig) -> ArrayGeometry:
    return ArrayGeometry(
        num_antennas=int(cfg.require("num_antennas")),
        antenna_separation=float(cfg.require("antenna_separation")),
    )


def _budget(cfg: RunConfig) -> CovertBudget:
    return CovertBudget(
        blocklength=int(cfg.require("n")),
        detection_level=float(cfg.require("delta_kl")),
        secrecy_level=float(cfg.get("delta_s", 0.0)),
        error_level=float(cfg.get("epsilon", 0.0)),
    )


def _scenario(cfg: RunConfig) -> MimoScenario:
    for key in ("h_b", "h_w", "n_a", "n_b", "n_w", "sigma_b2", "sigma_w2", "power"):
        cfg.require(key)
    return scenario_from_json(dict(cfg))


def _cosine(cfg: RunConfig, which: str) -> float:
    """Directional cosine from either an omega_* cosine or a phi_* angle."""
    omega_key = f"omega_{which}"
    if omega_key in cfg and cfg[omega_key] is not None:
        return float(cfg[omega_key])
    return math.cos(float(cfg.require(f"phi_{which}")))


def _pathloss(cfg: RunConfig) -> float:
    return float(cfg["pathloss_constant"]) * float(cfg["distance_m"]) ** (
        -float(cfg["pathloss_exponent"])
    )


def _link_params(cfg: RunConfig) -> dict:
    """Resolve the physical-sweep parameters (powers in watts)."""
    bandwidth = float(cfg["bandwidth_hz"])
    xi2 = cfg.get("xi2", _pathloss(cfg))
    noise = cfg.get(
        "noise_power_w",
        scaling.dbm_per_hz_to_watts(float(cfg["noise_dbm_per_hz"]), bandwidth),
    )
    power = cfg.get("power_w", scaling.dbm_to_watts(float(cfg["power_dbm"])))
    return {
        "xi_b2": float(cfg.get("xi_b2", xi2)),
        "xi_w2": float(cfg.get("xi_w2", xi2)),
        "bandwidth": bandwidth,
        "noise_power": float(noise),
        "power": float(power),
        "omega": _cosine(cfg, "b") - _cosine(cfg, "w"),
        "n_b": int(cfg["n_b"]),
    }


def _parse_int_range(spec: str) -> list:
    """Parse ``start:stop:step`` into an inclusive integer list."""
    try:
        start, stop, step = (int(float(part)) for part in spec.split(":"))
    except ValueError as exc:
        raise InvalidInputError(f"bad range spec {spec!r}, want start:stop:step") from exc
    if step <= 0 or stop < start:
        raise InvalidInputError(f"bad range spec {spec!r}")
    return list(range(start, stop + 1, step))


def _parse_log_range(spec: str) -> list:
    """Parse ``start:stop:count`` into log-spaced integers."""
    try:
        start_s, stop_s, count_s = spec.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError as exc:
        raise InvalidInputError(f"bad log range spec {spec!r}, want start:stop:count") from exc
    if start <= 0 or stop < start or count < 2:
        raise InvalidInputError(f"bad log range spec {spec!r}")
    values = np.geomspace(start, stop, count)
    return sorted({int(round(v)) for v in values})


def _parse_int_list(spec) -> list:
    if isinstance(spec, (list, tuple)):
        return [int(v) for v in spec]
    return [int(part) for part in str(spec).split(",") if part]


def _maybe_plot(cfg, args, out: Path, x, series, **kwargs):
    if getattr(args, "no_plot", False):
        return None
    from .plotting import render_lines

    return render_lines(out.with_suffix(".svg"), x, series, **kwargs)


# ---------------------------------------------------------------------------
# Commands


def _cmd_beam_pattern(args, cfg: RunConfig, out: Path) -> None:
    geometry = _geometry(cfg)
    points = int(cfg.get("points", 4001))
    omegas = np.linspace(-1.0, 1.0, points)
    gains = beam_gain(geometry, omegas)
    _emit(out, ["omega", "gain"], list(zip(omegas.tolist(), gains.tolist())))
    _maybe_plot(
        cfg,
        args,
        out,
        omegas,
        {"gain": gains},
        xlabel="directional cosine",
        ylabel="pattern magnitude",
        title=f"N={geometry.num_antennas}, L={geometry.array_length:g}",
    )


def _allocation_summary(scenario, budget):
    result = alloc_mod.optimize_covariance(scenario, budget)
    kl_n = covertness.kl_n_letter(result.kl_value, budget.blocklength)
    return result, kl_n


def _cmd_kl(args, cfg: RunConfig, out: Path) -> None:
    scenario = _scenario(cfg)
    budget = _budget(cfg)
    result, kl_n = _allocation_summary(scenario, budget)
    _emit_doc(
        out,
        {
            "kl_single_letter": result.kl_value,
            "kl_n_letter": kl_n,
            "pinsker_floor": covertness.detection_lower_bound(kl_n),
            "rate_nats": result.rate,
            "total_power": result.allocation.total_power,
            "mu": result.mu,
            "eta": result.eta,
            "power_active": result.power_active,
            "kl_active": result.kl_active,
        },
    )


def _cmd_allocate(args, cfg: RunConfig, out: Path) -> None:
    scenario = _scenario(cfg)
    budget = _budget(cfg)
    result, kl_n = _allocation_summary(scenario, budget)
    eig = rotated_eigen(scenario)
    header = [
        "direction",
        "lambda_b",
        "lambda_w_rotated",
        "q",
        "rate_nats",
        "kl_single_letter",
        "mu",
        "eta",
    ]
    rows = [
        (
            i,
            eig.lambda_b[i],
            eig.lambda_w_rotated[i],
            result.allocation.per_direction[i],
            result.rate,
            result.kl_value,
            result.mu,
            result.eta,
        )
        for i in range(eig.n_a)
    ]
    _emit(out, header, rows)


def _cmd_scaling(args, cfg: RunConfig, out: Path) -> None:
    scenario = _scenario(cfg)
    budget = _budget(cfg)
    eig = rotated_eigen(scenario)
    result, _ = _allocation_summary(scenario, budget)
    try:
        shares = alloc_mod.normalized_shares(
            result.allocation, eig, scenario.sigma_w2
        )
        shares_kind = "from-optimizer"
    except UndefinedSharesError:
        shares = alloc_mod.uniform_shares(eig)
        shares_kind = "uniform-fallback"
    real_input = bool(cfg["real_input"])
    covert = scaling.covert_scaling(
        eig, shares, scenario.sigma_b2, scenario.sigma_w2, real_input=real_input
    )
    secrecy = scaling.secrecy_covert_scaling(
        eig, shares, scenario.sigma_b2, scenario.sigma_w2, real_input=real_input
    )
    _emit_doc(
        out,
        {
            "scaling_sqrt_nats": covert.total,
            "secrecy_scaling_sqrt_nats": secrecy.total,
            "convention": "real-input" if real_input else "complex-input",
            "shares_kind": shares_kind,
            "shares": [float(c) for c in shares.c],
            "per_direction": [float(v) for v in covert.per_direction],
            "secrecy_per_direction": [float(v) for v in secrecy.per_direction],
        },
    )


def _cmd_antenna_bound(args, cfg: RunConfig, out: Path) -> None:
    geometry = _geometry(cfg)
    budget = _budget(cfg)
    link = _link_params(cfg)
    common = dict(
        omega=link["omega"],
        xi_w2=link["xi_w2"],
        n_w=int(cfg["n_w"]),
        sigma_w2=link["noise_power"],
        budget=budget,
        power=link["power"],
    )
    _emit_doc(
        out,
        {
            "min_antennas_fixed_length": covertness.min_antennas(
                geometry, hold="array-length", **common
            ),
            "min_antennas_fixed_separation": covertness.min_antennas(
                geometry, hold="separation", **common
            ),
            "min_antennas_worst_case": covertness.min_antennas(
                geometry, hold="array-length", worst_case=True, **common
            ),
            "omega": link["omega"],
            "kl_target": budget.kl_target,
        },
    )


def _cmd_simulate_detector(args, cfg: RunConfig, out: Path) -> None:
    scenario = _scenario(cfg)
    budget = _budget(cfg)
    result, _ = _allocation_summary(scenario, budget)
    outcome = detector.monte_carlo_detection(
        scenario,
        result.allocation,
        budget.blocklength,
        int(cfg["trials"]),
        int(cfg["seed"]),
    )
    doc = {
        "alpha": outcome.alpha,
        "beta": outcome.beta,
        "threshold": outcome.threshold,
        "error_sum": outcome.error_sum,
        "pinsker_floor": outcome.pinsker_floor,
        "trials": outcome.trials,
        "confidence_halfwidth": outcome.confidence_halfwidth,
        "seed": int(cfg["seed"]),
    }
    try:
        exact = detector.exact_error_sum_for(
            scenario, result.allocation, budget.blocklength
        )
        doc["exact_error_sum"] = exact.error_sum
    except CovertMimoError:
        doc["exact_error_sum"] = None
    _emit_doc(out, doc)


def _nats_rows(cfg: RunConfig, na_values, n_values, nw_values):
    link = _link_params(cfg)
    delta = float(cfg["delta_kl"])
    rows = []
    for n_w in nw_values:
        for n_a in na_values:
            geometry = ArrayGeometry(int(n_a), float(cfg["antenna_separation"]))
            for n in n_values:
                covert, noncovert = scaling.covert_nats_firstorder(
                    geometry,
                    link["xi_b2"],
                    link["xi_w2"],
                    link["omega"],
                    link["n_b"],
                    int(n_w),
                    link["bandwidth"],
                    link["noise_power"],
                    link["noise_power"],
                    int(n),
                    delta,
                    link["power"],
                )
                rows.append((int(n_w), int(n_a), int(n), covert, noncovert))
    return rows


def _cmd_figure_nats_vs_na(args, cfg: RunConfig, out: Path) -> None:
    na_values = _parse_int_range(str(cfg.get("na_range", "10:500:10")))
    nw_values = _parse_int_list(cfg.get("nw", "1,10,50"))
    rows = _nats_rows(cfg, na_values, [int(cfg["n"])], nw_values)
    header = ["n_w", "n_a", "n", "covert_nats", "noncovert_nats"]
    _emit(out, header, rows)
    series = {}
    for n_w in nw_values:
        sub = [r for r in rows if r[0] == n_w]
        series[f"covert, N_w={n_w}"] = [r[3] for r in sub]
        series[f"unconstrained, N_w={n_w}"] = [r[4] for r in sub]
    _maybe_plot(
        cfg,
        args,
        out,
        na_values,
        series,
        xlabel="transmit antennas",
        ylabel="nats",
        logx=True,
        logy=True,
    )


def _cmd_figure_nats_vs_n(args, cfg: RunConfig, out: Path) -> None:
    n_values = _parse_log_range(str(cfg.get("n_range", "1e4:1e8:17")))
    if cfg.get("na_range") is not None:
        na_values = _parse_int_range(str(cfg["na_range"]))
    else:
        na_values = [10, 100]
    nw_values = _parse_int_list(cfg.get("nw", str(_DEFAULTS["n_w"])))
    rows = _nats_rows(cfg, na_values, n_values, nw_values)
    header = ["n_w", "n_a", "n", "covert_nats", "noncovert_nats"]
    _emit(out, header, rows)
    series = {}
    for n_w in nw_values:
        for n_a in na_values:
            sub = [r for r in rows if r[0] == n_w and r[1] == n_a]
            series[f"covert, N_a={n_a}, N_w={n_w}"] = [r[3] for r in sub]
            series[f"unconstrained, N_a={n_a}, N_w={n_w}"] = [r[4] for r in sub]
    _maybe_plot(
        cfg,
        args,
        out,
        n_values,
        series,
        xlabel="channel uses",
        ylabel="nats",
        logx=True,
        logy=True,
    )


def _cmd_steer(args, cfg: RunConfig, out: Path) -> None:
    geometry = _geometry(cfg)
    budget = _budget(cfg)
    link = _link_params(cfg)
    omega_b = _cosine(cfg, "b")
    omega_w = _cosine(cfg, "w")
    n_w = int(cfg["n_w"])
    lam_w = float(
        cfg.get("lambda_w", link["xi_w2"] * geometry.num_antennas * n_w)
    )
    lam_b = float(
        cfg.get("lambda_b", link["xi_b2"] * geometry.num_antennas * link["n_b"])
    )
    sigma_w2 = float(cfg.get("sigma_w2", link["noise_power"]))
    sigma_b2 = float(cfg.get("sigma_b2", link["noise_power"]))
    omega_star = alloc_mod.steer_direction(
        geometry, omega_b, omega_w, lam_w, sigma_w2, link["power"], budget
    )
    doc = {
        "omega_star": omega_star,
        "gain_bob": float(beam_gain(geometry, omega_star - omega_b)),
        "gain_willie": float(beam_gain(geometry, omega_star - omega_w)),
        "rate_nats": math.log1p(
            link["power"]
            * lam_b
            * float(beam_gain(geometry, omega_star - omega_b)) ** 2
            / sigma_b2
        ),
    }
    if geometry.num_antennas >= 2:
        null = alloc_mod.null_steer_index(
            geometry, omega_b, omega_w, lam_b, sigma_b2, link["power"]
        )
        doc["null_steer_k"] = null.k
        doc["null_steer_cosine"] = null.steer_cosine
        doc["null_steer_rate_nats"] = null.rate
    _emit_doc(out, doc)


_COMMANDS = {
    "beam-pattern": _cmd_beam_pattern,
    "kl": _cmd_kl,
    "allocate": _cmd_allocate,
    "scaling": _cmd_scaling,
    "antenna-bound": _cmd_antenna_bound,
    "simulate-detector": _cmd_simulate_detector,
    "figure-nats-vs-na": _cmd_figure_nats_vs_na,
    "figure-nats-vs-n": _cmd_figure_nats_vs_n,
    "steer": _cmd_steer,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertmimo",
        description="Covert-link analysis for MIMO AWGN channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="JSON config file")
        cmd.add_argument("--out", required=True, help="output path (.csv or .json)")
        cmd.add_argument("--seed", type=int, help="64-bit RNG seed")
        cmd.add_argument("--trials", type=int, help="Monte Carlo trials")
        cmd.add_argument("--na-range", dest="na_range", help="start:stop:step")
        cmd.add_argument(
            "--n-range", dest="n_range", help="log-spaced start:stop:count"
        )
        cmd.add_argument("--nw", help="comma list of adversary antenna counts")
        cmd.add_argument("--points", type=int, help="grid points for beam-pattern")
        cmd.add_argument(
            "--real-input",
            dest="real_input",
            action="store_true",
            help="report scaling constants in the real-channel convention",
        )
        cmd.add_argument(
            "--no-plot",
            dest="no_plot",
            action="store_true",
            help="skip the chart next to curve outputs",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        out = Path(args.out)
        if out.suffix not in (".csv", ".json"):
            raise InvalidInputError(
                f"output extension must be .csv or .json: {out}"
            )
        _COMMANDS[args.command](args, cfg, out)
    except CovertMimoError as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # pragma: no cover - defensive surface
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

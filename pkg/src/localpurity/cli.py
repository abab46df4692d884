"""Command line interface.

Subcommands:

* ``exact``       closed-form purity moments as exact rationals plus decimals
* ``mc``          Monte Carlo estimates (canonical chain or shell power sums)
* ``sweep-beta``  mean subsystem purity versus beta, against the small-beta line
* ``scaling``     balanced-cut moments versus the large-N asymptote
* ``selftest``    cross-engine consistency checks

Options resolve as: built-in defaults, overridden by a --config file (TOML or
JSON mapping of option names to values), overridden by explicit flags.  Every
run writes a JSON manifest next to its output (or into $LOCALPURITY_OUT_DIR
when printing to stdout) with the argv, the resolved options, the seed, the
package version, the wall time, and sha256 checksums of everything written.
Re-running the recorded argv reproduces the output bytes exactly; Monte Carlo
commands need the recorded seed passed back via --seed.

Exit codes: 0 success, 2 invalid input, 3 sampler diagnostic failure,
4 internal cross-check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from decimal import Context
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .ensembles import (
    EnsembleConfig,
    McConfig,
    SamplerDiagnosticError,
    estimate_avg_power_sums_shell,
    mc_moment_canonical,
    substream,
)
from .selftest import run_selftest
from .weingarten import (
    BipartitionDims,
    beta_convergence_radius,
    closed_m1,
    closed_m2_spectrum,
    cumulant2,
    m1_high_temperature,
)

OUT_DIR_ENV = "LOCALPURITY_OUT_DIR"

SCHEMA_EXACT = "localpurity.exact.v1"
SCHEMA_MC = "localpurity.mc.v1"
SCHEMA_SWEEP = "localpurity.sweep-beta.v1"
SCHEMA_SCALING = "localpurity.scaling.v1"
SCHEMA_SELFTEST = "localpurity.selftest.v1"
SCHEMA_MANIFEST = "localpurity.manifest.v1"

_DECIMAL15 = Context(prec=15)


def _decimal(value: Fraction) -> str:
    """Exactly rounded 15-significant-digit decimal rendering of a rational."""
    return str(
        _DECIMAL15.divide(Decimal(value.numerator), Decimal(value.denominator))
    )


def _parse_x(text: str, N: int) -> Fraction:
    """Global purity from a CLI token: a rational, 'pure', or 'mixed'."""
    if text == "pure":
        return Fraction(1)
    if text == "mixed":
        return Fraction(1, N)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse purity {text!r}: {exc}") from None


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if p.suffix == ".json":
        cfg = json.loads(p.read_text())
    elif p.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        cfg = tomllib.loads(p.read_text())
    else:
        raise ValueError(f"config file must end in .toml or .json, got {p.name}")
    if not isinstance(cfg, dict):
        raise ValueError(f"config file must hold a table of options, got {type(cfg).__name__}")
    return cfg


def _resolve(args: argparse.Namespace, spec: dict[str, tuple]) -> dict[str, Any]:
    """Merge defaults, --config values, and explicit flags (flags win).

    spec maps option name to (default, converter); the converter is applied
    to config-file values only, since argparse already converted the flags.
    """
    config = _load_config(getattr(args, "config", None))
    unknown = set(config) - set(spec)
    if unknown:
        raise ValueError(f"unknown config option(s): {', '.join(sorted(unknown))}")
    resolved: dict[str, Any] = {}
    for key, (default, conv) in spec.items():
        cli_value = getattr(args, key)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in config:
            resolved[key] = conv(config[key]) if conv is not None else config[key]
        else:
            resolved[key] = default
    return resolved


def _require(resolved: dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if resolved[k] is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ValueError(f"missing required option(s): {flags}")


def _pick_seed(value: Optional[int]) -> int:
    """The given seed, or a fresh OS-entropy one; either way it gets recorded."""
    if value is not None:
        return int(value)
    return int(np.random.SeedSequence().entropy % 2**63)


def _child_seed(seed: int, index: int) -> int:
    """Derived per-run seed: independent streams from one recorded master."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"cannot parse integer list {text!r}: {exc}") from None


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"cannot parse number list {text!r}: {exc}") from None


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(lines: list[str], out: Optional[str]) -> tuple[str, str]:
    """Write output lines to --out or stdout; returns (destination, sha256)."""
    data = ("\n".join(lines) + "\n").encode()
    digest = hashlib.sha256(data).hexdigest()
    if out is not None:
        path = Path(out)
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return str(path), digest
    sys.stdout.write(data.decode())
    return "stdout", digest


def _write_manifest(
    command: str,
    argv: Sequence[str],
    resolved: dict[str, Any],
    seeds: list[int],
    started: float,
    dest: str,
    digest: str,
    out: Optional[str],
) -> Path:
    manifest = {
        "schema": SCHEMA_MANIFEST,
        "command": command,
        "argv": list(argv),
        "resolved_config": {k: _jsonable(v) for k, v in resolved.items()},
        "seeds": seeds,
        "version": __version__,
        "wall_time_s": round(time.monotonic() - started, 6),
        "outputs": {dest: "sha256:" + digest},
    }
    if out is not None:
        target = Path(str(out) + ".manifest.json")
    else:
        base = Path(os.environ.get(OUT_DIR_ENV, "."))
        base.mkdir(parents=True, exist_ok=True)
        target = base / f"{command}.manifest.json"
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return target


def _degenerate_power_sums(N: int, x: Fraction) -> Optional[tuple[Fraction, Fraction]]:
    # at the simplex endpoints the spectrum is pinned, so p3 and p4 are too
    if x == 1:
        return Fraction(1), Fraction(1)
    if x == Fraction(1, N):
        return Fraction(1, N**2), Fraction(1, N**3)
    return None


# ---------------------------------------------------------------------------
# exact


def _cmd_exact(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    r = _resolve(
        args,
        {
            "na": (None, int),
            "nb": (None, int),
            "x": (None, str),
            "k": (1, int),
            "beta": (None, str),
            "avg_p3": (None, str),
            "avg_p4": (None, str),
            "format": ("csv", str),
            "out": (None, str),
        },
    )
    _require(r, "na", "nb", "x")
    dims = BipartitionDims(r["na"], r["nb"])
    N = dims.n
    x = _parse_x(str(r["x"]), N)
    if r["k"] not in (1, 2):
        raise ValueError(f"k must be 1 or 2 for the exact command, got {r['k']}")

    pinned = _degenerate_power_sums(N, x)
    if r["avg_p3"] is not None and r["avg_p4"] is not None:
        p34: Optional[tuple[Fraction, Fraction]] = (
            Fraction(str(r["avg_p3"])),
            Fraction(str(r["avg_p4"])),
        )
    elif pinned is not None:
        p34 = pinned
    else:
        p34 = None

    rows: list[tuple[str, Fraction]] = [("m1", closed_m1(dims, x))]
    if r["k"] == 2:
        if p34 is None:
            raise ValueError(
                "the second moment at a generic x needs --avg-p3 and --avg-p4 "
                "(estimate them with: localpurity mc --estimator power-sums)"
            )
        rows.append(("m2", closed_m2_spectrum(dims, x, *p34)))
        rows.append(("k2", cumulant2(dims, x, *p34)))
    if r["beta"] is not None:
        beta = Fraction(str(r["beta"]))
        if p34 is None:
            raise ValueError(
                "the beta correction at a generic x needs --avg-p3 and --avg-p4 "
                "(estimate them with: localpurity mc --estimator power-sums)"
            )
        rows.append(("m1_beta", m1_high_temperature(dims, x, beta, *p34)))
        radius = beta_convergence_radius(dims, x)
        if abs(float(beta)) > radius:
            print(
                f"warning: |beta| = {abs(float(beta))} exceeds the small-beta "
                f"convergence radius {radius:.6g}; the expansion is unreliable",
                file=sys.stderr,
            )

    header = f"# schema: {SCHEMA_EXACT}"
    meta = f"# na={dims.n_a} nb={dims.n_b} x={x} k={r['k']}"
    if r["format"] == "csv":
        lines = [header, meta, "quantity,numerator,denominator,decimal"]
        for name, value in rows:
            lines.append(
                f"{name},{value.numerator},{value.denominator},{_decimal(value)}"
            )
    elif r["format"] == "jsonl":
        lines = [json.dumps({"schema": SCHEMA_EXACT, "na": dims.n_a, "nb": dims.n_b, "x": str(x), "k": r["k"]})]
        for name, value in rows:
            lines.append(
                json.dumps(
                    {
                        "quantity": name,
                        "numerator": str(value.numerator),
                        "denominator": str(value.denominator),
                        "decimal": _decimal(value),
                    }
                )
            )
    else:
        raise ValueError(f"unknown format {r['format']!r}, expected csv or jsonl")

    dest, digest = _emit(lines, r["out"])
    _write_manifest("exact", argv, {**r, "x": x}, [], started, dest, digest, r["out"])
    return 0


# ---------------------------------------------------------------------------
# mc


def _mc_spec() -> dict[str, tuple]:
    return {
        "na": (None, int),
        "nb": (None, int),
        "x": (None, str),
        "beta": (0.0, float),
        "seed": (None, int),
        "samples": (20000, int),
        "burn_in": (1000, int),
        "thinning": (1, int),
        "step_scale": (1.0, float),
        "shell_eps": (1e-3, float),
        "format": ("jsonl", str),
        "out": (None, str),
    }


def _mc_config(r: dict[str, Any]) -> McConfig:
    return McConfig(
        burn_in=r["burn_in"],
        n_samples=r["samples"],
        thinning=r["thinning"],
        step_scale=r["step_scale"],
    )


def _cmd_mc(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    spec = _mc_spec()
    spec["estimator"] = ("canonical", str)
    spec["k"] = (1, int)
    r = _resolve(args, spec)
    _require(r, "na", "nb", "x")
    dims = BipartitionDims(r["na"], r["nb"])
    x = float(_parse_x(str(r["x"]), dims.n))
    seed = _pick_seed(r["seed"])
    r["seed"] = seed
    mc = _mc_config(r)

    records: list[dict[str, Any]] = []
    common = {
        "schema": SCHEMA_MC,
        "estimator": r["estimator"],
        "na": dims.n_a,
        "nb": dims.n_b,
        "x": x,
        "beta": r["beta"],
        "seed": seed,
        "samples": r["samples"],
        "burn_in": r["burn_in"],
        "thinning": r["thinning"],
        "shell_eps": r["shell_eps"],
    }
    if r["estimator"] == "canonical":
        config = EnsembleConfig(
            dims=dims,
            x=x,
            beta=r["beta"],
            seed=seed,
            shell_eps=r["shell_eps"],
            mc=mc,
        )
        est = mc_moment_canonical(config, k=r["k"])
        records.append(
            {**common, "quantity": f"moment_{r['k']}", "k": r["k"], **est.as_json_dict()}
        )
    elif r["estimator"] == "power-sums":
        p3, p4 = estimate_avg_power_sums_shell(
            dims, x, r["shell_eps"], mc, substream(seed)
        )
        records.append({**common, "quantity": "avg_p3", **p3.as_json_dict()})
        records.append({**common, "quantity": "avg_p4", **p4.as_json_dict()})
    else:
        raise ValueError(
            f"unknown estimator {r['estimator']!r}, expected canonical or power-sums"
        )

    if r["format"] == "jsonl":
        lines = [json.dumps(rec) for rec in records]
    elif r["format"] == "csv":
        lines = [
            f"# schema: {SCHEMA_MC}",
            f"# estimator={r['estimator']} na={dims.n_a} nb={dims.n_b} x={x!r} "
            f"beta={r['beta']!r} seed={seed}",
            "quantity,mean,stderr,n,autocorr_note",
        ]
        for rec in records:
            note = rec.get("autocorr_note") or ""
            lines.append(
                f"{rec['quantity']},{rec['mean']!r},{rec['stderr']!r},{rec['n']},{note}"
            )
    else:
        raise ValueError(f"unknown format {r['format']!r}, expected csv or jsonl")

    dest, digest = _emit(lines, r["out"])
    _write_manifest("mc", argv, r, [seed], started, dest, digest, r["out"])
    return 0


# ---------------------------------------------------------------------------
# sweep-beta


def _cmd_sweep_beta(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    spec = _mc_spec()
    spec["betas"] = (None, str)
    spec["format"] = ("csv", str)
    del spec["beta"]
    r = _resolve(args, spec)
    _require(r, "na", "nb", "x", "betas")
    dims = BipartitionDims(r["na"], r["nb"])
    x_frac = _parse_x(str(r["x"]), dims.n)
    x = float(x_frac)
    betas = _parse_float_list(str(r["betas"]))
    if not betas:
        raise ValueError("betas must list at least one value")
    seed = _pick_seed(r["seed"])
    r["seed"] = seed
    mc = _mc_config(r)

    pinned = _degenerate_power_sums(dims.n, x_frac)
    if pinned is not None:
        p3_mean, p4_mean = pinned
    else:
        p3, p4 = estimate_avg_power_sums_shell(
            dims, x, r["shell_eps"], mc, substream(seed, 0)
        )
        p3_mean, p4_mean = Fraction(p3.mean), Fraction(p4.mean)

    radius = beta_convergence_radius(dims, x)
    over = [b for b in betas if abs(b) > radius]
    if over:
        print(
            f"warning: |beta| > {radius:.6g} (small-beta convergence radius) "
            f"for beta in {over}; the linear prediction is unreliable there",
            file=sys.stderr,
        )

    results = []
    for i, beta in enumerate(betas):
        config = EnsembleConfig(
            dims=dims,
            x=x,
            beta=beta,
            seed=_child_seed(seed, i + 1),
            shell_eps=r["shell_eps"],
            mc=mc,
        )
        est = mc_moment_canonical(config, k=1)
        prediction = float(m1_high_temperature(dims, x_frac, beta, p3_mean, p4_mean))
        results.append((beta, est, prediction))

    if r["format"] == "csv":
        lines = [
            f"# schema: {SCHEMA_SWEEP}",
            f"# na={dims.n_a} nb={dims.n_b} x={x!r} seed={seed} "
            f"beta_radius={radius!r}",
        ]
        lines.append("beta,m1_estimate,m1_stderr,m1_prediction,beta_in_radius")
        for beta, est, prediction in results:
            lines.append(
                f"{beta!r},{est.mean!r},{est.stderr!r},{prediction!r},"
                f"{int(abs(beta) <= radius)}"
            )
    elif r["format"] == "jsonl":
        lines = []
        for beta, est, prediction in results:
            lines.append(
                json.dumps(
                    {
                        "schema": SCHEMA_SWEEP,
                        "na": dims.n_a,
                        "nb": dims.n_b,
                        "x": x,
                        "seed": seed,
                        "beta": beta,
                        "m1_estimate": est.mean,
                        "m1_stderr": est.stderr,
                        "m1_prediction": prediction,
                        "beta_in_radius": bool(abs(beta) <= radius),
                        "autocorr_note": est.autocorr_note,
                    }
                )
            )
    else:
        raise ValueError(f"unknown format {r['format']!r}, expected csv or jsonl")

    dest, digest = _emit(lines, r["out"])
    _write_manifest(
        "sweep-beta", argv, {**r, "betas": betas}, [seed], started, dest, digest, r["out"]
    )
    return 0


# ---------------------------------------------------------------------------
# scaling


def _cmd_scaling(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    r = _resolve(
        args,
        {
            "x": (None, str),
            "ns": (None, str),
            "k": (1, int),
            "format": ("csv", str),
            "out": (None, str),
        },
    )
    _require(r, "x", "ns")
    sizes = _parse_int_list(str(r["ns"]))
    if not sizes:
        raise ValueError("ns must list at least one total dimension")
    if r["k"] not in (1, 2):
        raise ValueError(f"k must be 1 or 2 for the scaling command, got {r['k']}")

    rows = []
    for N in sizes:
        root = math.isqrt(N)
        if root * root != N:
            raise ValueError(
                f"scaling uses balanced bipartitions, so N must be a perfect "
                f"square; got {N}"
            )
        dims = BipartitionDims(root, root)
        x = _parse_x(str(r["x"]), N)
        if r["k"] == 1:
            moment = closed_m1(dims, x)
        else:
            pinned = _degenerate_power_sums(N, x)
            if pinned is None:
                raise ValueError(
                    "k=2 scaling is exact only at x = pure or x = mixed; for a "
                    "generic x estimate the moment with the mc command"
                )
            moment = closed_m2_spectrum(dims, x, *pinned)
        asymptote = ((1.0 + float(x)) / math.sqrt(N)) ** r["k"]
        deviation = abs(float(moment) / asymptote - 1.0)
        rows.append((N, moment, asymptote, deviation))

    if r["format"] == "csv":
        lines = [
            f"# schema: {SCHEMA_SCALING}",
            f"# x={r['x']} k={r['k']}",
            "n_total,moment,asymptote,rel_deviation",
        ]
        for N, moment, asymptote, deviation in rows:
            lines.append(f"{N},{_decimal(moment)},{asymptote!r},{deviation!r}")
    elif r["format"] == "jsonl":
        lines = []
        for N, moment, asymptote, deviation in rows:
            lines.append(
                json.dumps(
                    {
                        "schema": SCHEMA_SCALING,
                        "x": str(r["x"]),
                        "k": r["k"],
                        "n_total": N,
                        "moment": _decimal(moment),
                        "asymptote": asymptote,
                        "rel_deviation": deviation,
                    }
                )
            )
    else:
        raise ValueError(f"unknown format {r['format']!r}, expected csv or jsonl")

    dest, digest = _emit(lines, r["out"])
    _write_manifest("scaling", argv, r, [], started, dest, digest, r["out"])
    return 0


# ---------------------------------------------------------------------------
# selftest


def _cmd_selftest(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = time.monotonic()
    r = _resolve(args, {"seed": (None, int), "out": (None, str)})
    seed = _pick_seed(r["seed"])
    r["seed"] = seed
    results = run_selftest(seed=seed)
    lines = [f"# schema: {SCHEMA_SELFTEST}"]
    for res in results:
        if res.passed:
            lines.append(f"PASS {res.name}")
        else:
            lines.append(f"FAIL {res.name}: {res.detail}")
    n_pass = sum(res.passed for res in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    dest, digest = _emit(lines, r["out"])
    _write_manifest("selftest", argv, r, [seed], started, dest, digest, r["out"])
    return 0 if n_pass == len(results) else 4


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON file of option defaults")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=["csv", "jsonl"], help="output format")


def _add_dims(p: argparse.ArgumentParser) -> None:
    p.add_argument("--na", type=int, help="dimension of subsystem A (na <= nb)")
    p.add_argument("--nb", type=int, help="dimension of subsystem B")


def _add_mc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="RNG seed (auto-generated if absent)")
    p.add_argument("--samples", type=int, help="number of kept Monte Carlo samples")
    p.add_argument("--burn-in", type=int, help="discarded equilibration sweeps")
    p.add_argument("--thinning", type=int, help="keep every thinning-th sweep")
    p.add_argument("--step-scale", type=float, help="proposal step multiplier")
    p.add_argument("--shell-eps", type=float, help="half-width of the purity shell")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localpurity",
        description="Moments of subsystem purity for bipartite quantum states.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="closed-form moments as exact rationals")
    _add_dims(p)
    p.add_argument("--x", help="global purity: a rational like 3/5, 'pure', or 'mixed'")
    p.add_argument("--k", type=int, help="highest moment to print (1 or 2)")
    p.add_argument("--beta", help="also print the small-beta corrected first moment")
    p.add_argument("--avg-p3", help="ensemble average of Tr Lambda^3 (rational)")
    p.add_argument("--avg-p4", help="ensemble average of Tr Lambda^4 (rational)")
    _add_common(p)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("mc", help="Monte Carlo estimates")
    _add_dims(p)
    p.add_argument("--x", help="global purity: a number, 'pure', or 'mixed'")
    p.add_argument(
        "--estimator",
        choices=["canonical", "power-sums"],
        help="canonical: beta-weighted moment; power-sums: avg p3 and p4",
    )
    p.add_argument("--k", type=int, help="moment order (canonical estimator)")
    p.add_argument("--beta", type=float, help="canonical weight exp(-beta purity_A)")
    _add_mc_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser(
        "sweep-beta", help="mean subsystem purity versus beta, with predictions"
    )
    _add_dims(p)
    p.add_argument("--x", help="global purity: a number, 'pure', or 'mixed'")
    p.add_argument(
        "--betas",
        help="comma-separated beta values; write --betas=-0.2,0,0.2 when the "
        "first one is negative",
    )
    _add_mc_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep_beta)

    p = sub.add_parser(
        "scaling", help="balanced-cut moments against the large-N asymptote"
    )
    p.add_argument("--x", help="global purity: a rational, 'pure', or 'mixed'")
    p.add_argument("--ns", help="comma-separated total dimensions (perfect squares)")
    p.add_argument("--k", type=int, help="moment order (1 or 2)")
    _add_common(p)
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("selftest", help="cross-engine consistency checks")
    p.add_argument("--seed", type=int, help="seed for the Monte Carlo smoke checks")
    p.add_argument("--config", help="TOML or JSON file of option defaults")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    tokens = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(tokens)
    try:
        return args.func(args, tokens)
    except SamplerDiagnosticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

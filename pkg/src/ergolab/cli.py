"""Command-line runner: build, verify, and report on witness systems.

    ergolab krengel|podvigin|alpern|verify|report --config <path> [--out <dir>]

The config is one JSON object; unknown keys are rejected and all
rationals are "p/q" strings.  Each run writes witness.json (the system
document), rows.csv (the command's table, see reports.py for the fixed
column orders), manifest.json (config echo, artifact list, verdict,
wall clock, engine, thread count) and, for tables with a ratio column,
ratios.svg.  A `seed` key is accepted and echoed for reproducibility
bookkeeping; the pipelines themselves are deterministic and ignore it.

Exit codes: 0 = all exact checks passed; 1 = the run was well-formed
but construction or verification failed (the manifest and stderr carry
the first failing check); 2 = config or IO error.

Config keys by command:

  krengel:  rate (required), J (required), masses?, targets?,
            height_cap?, tol?, wiring?, n_cap?
  podvigin: rate (required), masses (required), multiplier?, delta?,
            eps_schedule?, retry_cap?
  alpern:   heights (required), masses (required), tol?, n? (else the
            least feasible n is searched: start?, step?, cap?), wiring?
  verify:   witness (required; path to a witness.json of any kind)
  report:   witness (required; regenerates rows.csv/ratios.svg from it)

Every command also accepts command? (must match the subcommand), out?
(output directory, overridden by --out) and seed?.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

from . import alpern, krengel, podvigin, reports
from .checks import CheckFailure, VerificationError
from .rates import Rate, Unsatisfiable
from .rational import parse_rational
from .windows import default_engine
from .windows.compiled import thread_count

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

COMMANDS = ("krengel", "podvigin", "alpern", "verify", "report")

_PIPELINE_ERRORS = (VerificationError, krengel.PlanTooLarge,
                    podvigin.RetryCapExceeded, Unsatisfiable,
                    alpern.CoprimalityError, alpern.InfeasibleError,
                    alpern.ToleranceError)


class ConfigError(Exception):
    """Malformed configuration or unreadable input (exit code 2)."""


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return doc


def _check_keys(cfg: dict, allowed: set, command: str) -> None:
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(
            f"unknown config keys for {command}: {sorted(extra)}")
    got = cfg.get("command")
    if got is not None and got != command:
        raise ConfigError(f"config names command {got!r}, invoked {command!r}")


def _rational(cfg: dict, key: str, default=None) -> Optional[Fraction]:
    if key not in cfg:
        return default
    try:
        return parse_rational(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None


def _rational_list(cfg: dict, key: str) -> Optional[Tuple[Fraction, ...]]:
    if key not in cfg:
        return None
    raw = cfg[key]
    if not isinstance(raw, list):
        raise ConfigError(f"config key {key!r} must be a list of rationals")
    try:
        return tuple(parse_rational(x) for x in raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from None


def _integer(cfg: dict, key: str, default=None, minimum=None):
    if key not in cfg:
        return default
    raw = cfg[key]
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"config key {key!r} must be an integer")
    if minimum is not None and raw < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}")
    return raw


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing required config key {key!r}")
    return cfg[key]


def _rate(cfg: dict) -> Rate:
    try:
        return Rate.from_config(_require(cfg, "rate"))
    except ValueError as exc:
        raise ConfigError(f"config key 'rate': {exc}") from None


def _wiring(cfg: dict) -> str:
    wiring = cfg.get("wiring", "round_robin")
    if wiring not in alpern.WIRINGS:
        raise ConfigError(f"config key 'wiring' must be one of "
                          f"{list(alpern.WIRINGS)}, got {wiring!r}")
    return wiring


def _run_krengel(cfg: dict):
    _check_keys(cfg, {"command", "out", "seed", "rate", "J", "masses",
                      "targets", "height_cap", "tol", "wiring", "n_cap"},
                "krengel")
    psi = _rate(cfg)
    J = _integer(cfg, "J", minimum=2)
    if J is None:
        raise ConfigError("missing required config key 'J'")
    plan = krengel.select_heights(
        psi, J,
        targets=_rational_list(cfg, "targets"),
        masses=_rational_list(cfg, "masses"),
        height_cap=_integer(cfg, "height_cap", 10 ** 7, minimum=2))
    witness = krengel.build_witness(
        plan,
        tol=_rational(cfg, "tol"),
        wiring=_wiring(cfg),
        n_cap=_integer(cfg, "n_cap", 10 ** 9, minimum=1))
    rows, failures = krengel.verify_krengel(witness, strict=False)
    return (witness.to_doc(), reports.krengel_csv(rows), failures,
            {"n": witness.n, "heights": list(plan.heights)})


def _run_podvigin(cfg: dict):
    _check_keys(cfg, {"command", "out", "seed", "rate", "masses",
                      "multiplier", "delta", "eps_schedule", "retry_cap"},
                "podvigin")
    psi = _rate(cfg)
    masses = _rational_list(cfg, "masses")
    if masses is None:
        raise ConfigError("missing required config key 'masses'")
    try:
        spec = podvigin.ComponentSpec.build(
            masses, multiplier=_integer(cfg, "multiplier", 10, minimum=1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    delta = _rational(cfg, "delta", Fraction(1, 8))
    retry_cap = _integer(cfg, "retry_cap", 2 ** 20, minimum=1)
    eps_schedule = _rational_list(cfg, "eps_schedule")

    state = podvigin.init_components(spec)
    failures: List[CheckFailure] = []
    if eps_schedule is not None and len(eps_schedule) != spec.J:
        raise ConfigError(f"eps_schedule needs {spec.J} values, "
                          f"got {len(eps_schedule)}")
    if not 0 < delta < 1:
        raise ConfigError("delta must be in (0, 1)")
    for j in range(1, spec.J + 1):
        eps = eps_schedule[j - 1] if eps_schedule is not None \
            else (spec.c_stage(j) - spec.c) * delta
        podvigin.stage(state, psi, eps, retry_cap)
    try:
        final = podvigin.recheck_all(state, psi)
    except VerificationError as err:
        failures.extend(err.failures)
        final = ()
    rows, div_failures = podvigin.verify_divergence(state, psi, strict=False)
    failures.extend(div_failures)
    witness = podvigin.PodviginWitness(spec, psi, state, final, tuple(rows))
    return (witness.to_doc(), reports.divergence_csv(rows), failures,
            {"length": state.merged.length,
             "refinements": [rec.r for rec in state.history]})


def _run_alpern(cfg: dict):
    _check_keys(cfg, {"command", "out", "seed", "heights", "masses", "n",
                      "tol", "start", "step", "cap", "wiring"}, "alpern")
    raw_heights = _require(cfg, "heights")
    if (not isinstance(raw_heights, list)
            or any(isinstance(h, bool) or not isinstance(h, int)
                   for h in raw_heights)):
        raise ConfigError("config key 'heights' must be a list of integers")
    heights = tuple(raw_heights)
    masses = _rational_list(cfg, "masses")
    if masses is None:
        raise ConfigError("missing required config key 'masses'")
    tol = _rational(cfg, "tol", Fraction(0))
    wiring = _wiring(cfg)
    n = _integer(cfg, "n", minimum=1)
    if n is None:
        n = alpern.min_feasible_n(
            heights, masses, tol,
            start=_integer(cfg, "start", minimum=1),
            step=_integer(cfg, "step", 1, minimum=1),
            cap=_integer(cfg, "cap", 10 ** 9, minimum=1))
    solution = alpern.solve_multiplicities(heights, masses, n, tol)
    doc = alpern.witness_doc(solution, masses, tol, wiring)
    failures = alpern.verify_witness(doc)
    return (doc, reports.alpern_csv(solution, masses), failures,
            {"n": solution.n})


def _witness_kind(doc: dict) -> str:
    kind = doc.get("kind")
    if kind not in ("krengel", "podvigin", "alpern"):
        raise ConfigError(f"unknown witness kind {kind!r}")
    return kind


def _run_verify(cfg: dict):
    _check_keys(cfg, {"command", "out", "seed", "witness"}, "verify")
    doc = _load_json(_require(cfg, "witness"))
    kind = _witness_kind(doc)
    verifier = {"krengel": krengel.verify_witness,
                "podvigin": podvigin.verify_witness,
                "alpern": alpern.verify_witness}[kind]
    try:
        failures = verifier(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed {kind} witness: {exc!r}") from None
    return doc, reports.failures_csv(failures), failures, {"witness_kind": kind}


def _run_report(cfg: dict):
    _check_keys(cfg, {"command", "out", "seed", "witness"}, "report")
    doc = _load_json(_require(cfg, "witness"))
    kind = _witness_kind(doc)
    try:
        if kind == "krengel":
            witness = krengel.KrengelWitness.from_doc(doc)
            rows, failures = krengel.verify_krengel(witness, strict=False)
            csv_text = reports.krengel_csv(rows)
        elif kind == "podvigin":
            rows, failures = podvigin.stored_divergence(doc)
            csv_text = reports.divergence_csv(rows)
        else:
            solution = alpern.AlpernSolution.from_doc(doc["solution"])
            targets = [parse_rational(a) for a in doc["targets"]]
            failures = alpern.verify_witness(doc)
            csv_text = reports.alpern_csv(solution, targets)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed {kind} witness: {exc!r}") from None
    return doc, csv_text, failures, {"witness_kind": kind}


_RUNNERS = {
    "krengel": _run_krengel,
    "podvigin": _run_podvigin,
    "alpern": _run_alpern,
    "verify": _run_verify,
    "report": _run_report,
}


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def run(command: str, config_path: str,
        out_override: Optional[str] = None) -> int:
    """Execute one subcommand; returns the process exit code."""
    try:
        cfg = _load_json(config_path)
        if "seed" in cfg and (isinstance(cfg["seed"], bool)
                              or not isinstance(cfg["seed"], int)):
            raise ConfigError("config key 'seed' must be an integer")
        out_raw = out_override if out_override is not None \
            else cfg.get("out", ".")
        if not isinstance(out_raw, str):
            raise ConfigError("config key 'out' must be a string path")
        outdir = Path(out_raw)
        t0 = time.perf_counter()
        try:
            witness_doc, csv_text, failures, extra = _RUNNERS[command](cfg)
        except _PIPELINE_ERRORS as exc:
            wall = f"{time.perf_counter() - t0:.3f}"
            manifest = reports.RunManifest(
                command=command, config=cfg, artifacts={},
                verdict="fail", first_failure=str(exc),
                failure_count=1, wall_clock_s=wall,
                engine=default_engine(), threads=thread_count(),
                extra={"aborted": type(exc).__name__})
            try:
                outdir.mkdir(parents=True, exist_ok=True)
                _write(outdir / "manifest.json",
                       reports.manifest_json_bytes(manifest))
            except ConfigError as werr:
                print(f"error: {werr}", file=sys.stderr)
            print(f"FAIL {command}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        wall = f"{time.perf_counter() - t0:.3f}"

        header = csv_text.split("\n", 1)[0].split(",")
        svg = None
        if "j" in header and "ratio" in header:
            svg = reports.emit_plot(csv_text)
        artifacts = {"witness": "witness.json", "rows": "rows.csv",
                     "manifest": "manifest.json"}
        if svg is not None:
            artifacts["plot"] = "ratios.svg"
        manifest = reports.RunManifest(
            command=command, config=cfg, artifacts=artifacts,
            verdict="fail" if failures else "pass",
            first_failure=str(failures[0]) if failures else None,
            failure_count=len(failures), wall_clock_s=wall,
            engine=default_engine(), threads=thread_count(), extra=extra)

        outdir.mkdir(parents=True, exist_ok=True)
        _write(outdir / "witness.json", reports.witness_json_bytes(witness_doc))
        _write(outdir / "rows.csv", csv_text.encode("utf-8"))
        if svg is not None:
            _write(outdir / "ratios.svg", svg.encode("utf-8"))
        _write(outdir / "manifest.json", reports.manifest_json_bytes(manifest))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if failures:
        for failure in failures:
            print(f"FAIL {failure}", file=sys.stderr)
        return EXIT_FAIL
    print(f"PASS {command}: artifacts in {outdir}")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergolab",
        description="exact-arithmetic witnesses of arbitrarily slow "
                    "averaging along a cycle")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "krengel": "select tower heights against a rate and verify the cycle",
        "podvigin": "merge components stagewise and verify divergence ratios",
        "alpern": "solve tower multiplicities for target masses",
        "verify": "re-verify a stored witness document from scratch",
        "report": "regenerate rows.csv and ratios.svg from a stored witness",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True,
                       help="path to the JSON experiment config")
        p.add_argument("--out", default=None,
                       help="output directory (default: config 'out' or .)")
    args = parser.parse_args(argv)
    return run(args.command, args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``macpp {simulate,fit,validate,scenarios}``.

Every command writes a ``manifest.json`` holding the fully resolved
configuration. Passing that manifest back through ``--config`` reproduces
the command's artifacts byte for byte.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .diagnostics import expected_counts, thomas_min_contrast
from .errors import ConfigError, InitializationError, MacppError
from .geometry import convex_hull, window_from_dict
from .inference import McmcConfig, dumps, run_chains, summary_report, combine
from .model import ModelGraph, ParamVector, check
from .patterns import read_pattern_csv, write_pattern_csv
from .priors import PriorSpec
from .simulate import (SCENARIOS, get_scenario, run_scenario, simulate_pattern,
                       write_report_csv)

log = logging.getLogger("macpp")

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_window = {
    "oneOf": [
        {"type": "object", "additionalProperties": False,
         "required": ["type", "xmin", "xmax", "ymin", "ymax"],
         "properties": {"type": {"const": "rect"}, "xmin": _num, "xmax": _num, "ymin": _num, "ymax": _num}},
        {"type": "object", "additionalProperties": False, "required": ["type", "vertices"],
         "properties": {"type": {"const": "polygon"},
                        "vertices": {"type": "array", "minItems": 3,
                                     "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}}},
        {"type": "object", "additionalProperties": False, "required": ["type"],
         "properties": {"type": {"const": "hull"}}},
    ]
}
_taxa = {
    "type": "array", "minItems": 1,
    "items": {"type": "object", "additionalProperties": False, "required": ["name", "role"],
              "properties": {"name": {"type": "string", "minLength": 1},
                             "role": {"enum": ["parent", "offspring", "unrelated"]},
                             "parent": {"type": "string"}}},
}
_by_taxon = {"type": "object", "additionalProperties": _pos}
_params = {"type": "object", "additionalProperties": False,
           "properties": {k: _by_taxon for k in ("alpha", "bandwidth", "lambda_parent", "lambda_unrelated")}}
_gamma = {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2}
_priors = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "gamma_alpha": _gamma, "gamma_parent": _gamma, "gamma_unrelated": _gamma,
        "bandwidth": {"oneOf": [
            {"enum": ["half_normal", "uniform", "lognormal_flat", "lognormal_tight"]},
            {"type": "object", "additionalProperties": False, "required": ["family", "sigma"],
             "properties": {"family": {"const": "half_normal"}, "sigma": _pos}},
            {"type": "object", "additionalProperties": False, "required": ["family", "lo", "hi"],
             "properties": {"family": {"const": "uniform"}, "lo": {"type": "number", "minimum": 0}, "hi": _pos}},
            {"type": "object", "additionalProperties": False, "required": ["family", "mu", "sigma"],
             "properties": {"family": {"const": "lognormal"}, "mu": _num, "sigma": _pos}},
        ]},
    },
}
_mcmc = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "n_iterations": {"type": "integer", "minimum": 1}, "n_burnin": {"type": "integer", "minimum": 0},
        "thin": {"type": "integer", "minimum": 1}, "n_chains": {"type": "integer", "minimum": 1},
        "mc_integral_samples": {"type": "integer", "minimum": 1},
        "proposal_sd": {"oneOf": [{"type": "null"}, _pos, _by_taxon]},
        "seed": _int, "mass_method": {"enum": ["auto", "mc"]},
    },
}
_nsp = {"type": "object", "additionalProperties": False,
        "properties": {"q": _pos, "r_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}}}
_common = {"units": {"type": "string"}, "seed": _int}

SCHEMAS = {
    "simulate": {"type": "object", "additionalProperties": False,
                 "properties": {**_common, "scenario": _int, "window": _window, "taxa": _taxa, "params": _params}},
    "fit": {"type": "object", "additionalProperties": False,
            "properties": {**_common, "scenario": _int, "window": _window, "taxa": _taxa, "priors": _priors,
                           "mcmc": _mcmc, "pattern": {"type": "string"}, "clip": {"type": "boolean"},
                           "with_nsp": {"type": "boolean"}, "nsp": _nsp}},
    "validate": {"type": "object", "additionalProperties": False,
                 "properties": {**_common, "summary": {"type": "string"}, "pattern": {"type": "string"},
                                "params": _params, "clip": {"type": "boolean"},
                                "mc_integral_samples": {"type": "integer", "minimum": 1}}},
    "scenarios": {"type": "object", "additionalProperties": False,
                  "properties": {**_common, "ids": {"type": "array", "items": _int, "minItems": 1},
                                 "n_datasets": {"type": "integer", "minimum": 2}, "priors": _priors,
                                 "mcmc": _mcmc, "with_nsp": {"type": "boolean"}, "nsp": _nsp}},
}


def validate_config(command: str, cfg: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{where}: {e.message}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    return cfg


def load_config(path, command: str) -> dict:
    """Read a JSON config, or the ``config`` block of a manifest written by ``command``."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and "macpp_manifest" in data:
        if data.get("command") != command:
            raise ConfigError(f"manifest {path} was written by {data.get('command')!r}, not {command!r}")
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj), encoding="utf-8")


def _manifest(command: str, cfg: dict, outputs: list[str]) -> dict:
    return {"macpp_manifest": 1, "command": command, "version": __version__,
            "config": cfg, "outputs": sorted(outputs)}


def _graph(cfg: dict) -> ModelGraph:
    try:
        return check(ModelGraph.from_dict(cfg["taxa"]))
    except MacppError as exc:
        raise ConfigError(f"taxa: {exc}") from None


def _scenario_defaults(cfg: dict) -> dict:
    """Fill window/taxa/params from a built-in scenario when ``scenario`` is set."""
    if "scenario" not in cfg:
        return cfg
    try:
        s = get_scenario(cfg["scenario"])
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    out = dict(cfg)
    out.setdefault("window", s.window().to_dict())
    out.setdefault("taxa", s.graph().to_dict())
    return out


# ---------------------------------------------------------------- simulate

def cmd_simulate(cfg: dict, out: Path) -> int:
    cfg = _scenario_defaults(cfg)
    if "scenario" in cfg and "params" not in cfg:
        cfg["params"] = get_scenario(cfg["scenario"]).params().to_dict()
    cfg.setdefault("seed", 0)
    validate_config("simulate", cfg)
    for key in ("window", "taxa", "params"):
        if key not in cfg:
            raise ConfigError(f"{key}: required (or give --scenario)")
    if cfg["window"]["type"] == "hull":
        raise ConfigError("window.type: 'hull' is only meaningful when fitting observed data")
    graph = _graph(cfg)
    window = window_from_dict(cfg["window"])
    params = ParamVector.from_dict(cfg["params"])
    try:
        params.check(graph)
    except MacppError as exc:
        raise ConfigError(f"params: {exc}") from None
    pattern = simulate_pattern(graph, params, window, cfg["seed"])
    out.mkdir(parents=True, exist_ok=True)
    write_pattern_csv(pattern, out / "pattern.csv")
    validation = expected_counts(pattern, graph, params, seed=cfg["seed"])
    manifest = _manifest("simulate", cfg, ["pattern.csv"])
    manifest.update({"counts": pattern.counts(), "expected_counts": validation.to_dict(),
                     "window": window.to_dict()})
    _write_json(out / "manifest.json", manifest)
    log.info("simulated %d points: %s", len(pattern), pattern.counts())
    return EXIT_OK


# ---------------------------------------------------------------- fit

def _read_observed(path: str, cfg: dict, graph: ModelGraph):
    wcfg = cfg["window"]
    if wcfg["type"] == "hull":
        # analysis window = convex hull of every observed location
        try:
            raw = np.loadtxt(path, delimiter=",", skiprows=1, usecols=(1, 2), ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if len(raw) < 3:
            raise ConfigError("window.type hull needs at least 3 observed points")
        window = convex_hull(raw)
    else:
        window = window_from_dict(wcfg)
    try:
        return read_pattern_csv(path, window, taxa=graph.taxa, clip=cfg.get("clip", False))
    except MacppError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_fit(cfg: dict, out: Path) -> int:
    cfg = _scenario_defaults(cfg)
    cfg.setdefault("seed", 0)
    cfg.setdefault("priors", {})
    cfg.setdefault("mcmc", {})
    validate_config("fit", cfg)
    for key in ("window", "taxa", "pattern"):
        if key not in cfg:
            raise ConfigError(f"{key}: required")
    graph = _graph(cfg)
    pattern, dropped = _read_observed(cfg["pattern"], cfg, graph)
    spec = PriorSpec.from_dict(cfg["priors"])
    try:
        mcmc = McmcConfig(**{**cfg["mcmc"], "seed": cfg["mcmc"].get("seed", cfg["seed"])})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mcmc: {exc}") from None
    workers = int(os.environ.get("MACPP_THREADS", "1") or 1)
    try:
        chains = run_chains(pattern, graph, spec, mcmc, workers=workers)
    except InitializationError as exc:
        log.error("initialization failed: %s", exc)
        return EXIT_NUMERIC
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if len(chains) == 1:
        chains[0].write_csv(out / "samples.csv")
        outputs.append("samples.csv")
    else:
        for c in chains:
            name = f"samples_chain{c.chain}.csv"
            c.write_csv(out / name)
            outputs.append(name)
    post = combine(chains) if len(chains) > 1 else chains[0]
    point = ParamVector.from_flat(graph, post.means())
    validation = expected_counts(pattern, graph, point, n_samples=mcmc.mc_integral_samples, seed=mcmc.seed)
    extra = {
        "command": "fit", "config": cfg, "taxa": graph.to_dict(), "window": pattern.window.to_dict(),
        "counts": pattern.counts(), "dropped_points": dropped,
        "point_estimate": point.to_dict(), "validation": validation.to_dict(),
    }
    if cfg.get("with_nsp"):
        nsp_opts = cfg.get("nsp", {})
        extra["nsp_baseline"] = {
            t: thomas_min_contrast(pattern, taxon=t, **nsp_opts).to_dict() for t in graph.offspring
            if pattern.count(t) >= 2
        }
    report = summary_report(chains, extra)
    _write_json(out / "summary.json", report)
    outputs.append("summary.json")
    _write_json(out / "manifest.json", _manifest("fit", cfg, outputs))
    for flag in report["flags"]:
        log.warning(flag)
    return EXIT_OK


# ---------------------------------------------------------------- validate

def cmd_validate(cfg: dict, out: Path) -> int:
    cfg.setdefault("seed", 0)
    validate_config("validate", cfg)
    for key in ("summary", "pattern"):
        if key not in cfg:
            raise ConfigError(f"{key}: required")
    try:
        summary = json.loads(Path(cfg["summary"]).read_text(encoding="utf-8"))
        graph = check(ModelGraph.from_dict(summary["taxa"]))
        window = window_from_dict(summary["window"])
    except (OSError, json.JSONDecodeError, KeyError, MacppError) as exc:
        raise ConfigError(f"summary {cfg['summary']}: not a fit summary ({exc})") from None
    try:
        pattern, _ = read_pattern_csv(cfg["pattern"], window, taxa=graph.taxa, clip=cfg.get("clip", False))
    except MacppError as exc:
        raise ConfigError(f"artifact mismatch: {exc}") from None
    params = ParamVector.from_dict(cfg["params"] if "params" in cfg else summary["point_estimate"])
    try:
        params.check(graph)
    except MacppError as exc:
        raise ConfigError(f"artifact mismatch: {exc}") from None
    n_mc = cfg.get("mc_integral_samples", 1000)
    validation = expected_counts(pattern, graph, params, n_samples=n_mc, seed=cfg["seed"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "validation.json", {"command": "validate", "config": cfg,
                                          "validation": validation.to_dict()})
    _write_json(out / "manifest.json", _manifest("validate", cfg, ["validation.json"]))
    return EXIT_OK


# ---------------------------------------------------------------- scenarios

def parse_ids(text: str) -> list[int]:
    """``"1..12"``, ``"1,3,5"`` or a mix such as ``"1..3,7"``."""
    ids = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        elif part:
            ids.append(int(part))
    return ids


def cmd_scenarios(cfg: dict, out: Path) -> int:
    cfg.setdefault("seed", 0)
    cfg.setdefault("ids", [1])
    cfg.setdefault("n_datasets", 100)
    cfg.setdefault("priors", {})
    cfg.setdefault("mcmc", {})
    cfg.setdefault("with_nsp", False)
    validate_config("scenarios", cfg)
    bad = [i for i in cfg["ids"] if i not in SCENARIOS]
    if bad:
        raise ConfigError(f"ids: unknown scenario(s) {bad}; valid ids are 1..{len(SCENARIOS)}")
    spec = PriorSpec.from_dict(cfg["priors"])
    try:
        mcmc = McmcConfig(**cfg["mcmc"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mcmc: {exc}") from None
    nsp_opts = cfg.get("nsp") or None
    reports = []
    for sid in cfg["ids"]:
        log.info("scenario %d: %d datasets", sid, cfg["n_datasets"])
        reports.append(run_scenario(get_scenario(sid), cfg["n_datasets"], mcmc, seed=cfg["seed"], spec=spec,
                                    with_nsp=cfg["with_nsp"], nsp_options=nsp_opts))
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(reports, out / "report.csv")
    detail = {
        "command": "scenarios", "config": cfg,
        "scenarios": [{"id": r.scenario.id, "failure_fraction": r.failure_fraction,
                       "nsp_failure_fraction": r.nsp_failure_fraction if r.with_nsp else None,
                       "parameters": r.aggregate(),
                       "errors": [{"dataset": d.index, "error": d.error} for d in r.results if not d.ok]}
                      for r in reports],
    }
    _write_json(out / "report.json", _json_safe(detail))
    _write_json(out / "manifest.json", _manifest("scenarios", cfg, ["report.csv", "report.json"]))
    return EXIT_OK


def _json_safe(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="macpp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"macpp {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON config or a manifest from a previous run")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", "-o", type=Path, default=Path("."), help="output directory")
        return sp

    s = common(sub.add_parser("simulate", help="simulate a multitype pattern"))
    s.add_argument("--scenario", type=int, help="built-in scenario id (1..12)")

    f = common(sub.add_parser("fit", help="fit the model by MCMC"))
    f.add_argument("--pattern", type=Path)
    f.add_argument("--scenario", type=int, help="take window and taxa from a built-in scenario")
    f.add_argument("--chains", type=int)
    f.add_argument("--iterations", type=int)
    f.add_argument("--burnin", type=int)
    f.add_argument("--clip", action="store_true", help="drop out-of-window rows instead of failing")
    f.add_argument("--with-nsp", action="store_true", help="add the Thomas minimum-contrast baseline")

    v = common(sub.add_parser("validate", help="observed vs expected counts"))
    v.add_argument("--summary", type=Path)
    v.add_argument("--pattern", type=Path)
    v.add_argument("--params", type=Path, help="JSON parameter file to use instead of the posterior means")
    v.add_argument("--clip", action="store_true")

    c = common(sub.add_parser("scenarios", help="run the simulation benchmark"))
    c.add_argument("--ids", help="e.g. 1..12 or 1,3,5")
    c.add_argument("--n", type=int, dest="n_datasets")
    c.add_argument("--chains", type=int)
    c.add_argument("--iterations", type=int)
    c.add_argument("--burnin", type=int)
    c.add_argument("--with-nsp", action="store_true")
    return p


def _apply_flags(args, cfg: dict) -> dict:
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cmd = args.command
    if cmd in ("simulate", "fit") and args.scenario is not None:
        cfg["scenario"] = args.scenario
    if cmd in ("fit", "validate"):
        if args.pattern is not None:
            cfg["pattern"] = str(args.pattern.resolve())
        if args.clip:
            cfg["clip"] = True
    if cmd in ("fit", "scenarios"):
        mcmc = cfg.setdefault("mcmc", {})
        for flag, key in (("chains", "n_chains"), ("iterations", "n_iterations"), ("burnin", "n_burnin")):
            if getattr(args, flag) is not None:
                mcmc[key] = getattr(args, flag)
        if args.with_nsp:
            cfg["with_nsp"] = True
    if cmd == "fit" and args.seed is not None:
        cfg["mcmc"]["seed"] = args.seed
    if cmd == "validate":
        if args.summary is not None:
            cfg["summary"] = str(args.summary.resolve())
        if args.params is not None:
            try:
                cfg["params"] = json.loads(args.params.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read params {args.params}: {exc}") from None
    if cmd == "scenarios":
        if args.ids is not None:
            try:
                cfg["ids"] = parse_ids(args.ids)
            except ValueError:
                raise ConfigError(f"--ids: cannot parse {args.ids!r}") from None
        if args.n_datasets is not None:
            cfg["n_datasets"] = args.n_datasets
    return cfg


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "validate": cmd_validate, "scenarios": cmd_scenarios}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_flags(args, load_config(args.config, args.command))
        return COMMANDS[args.command](cfg, args.out)
    except InitializationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MacppError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())

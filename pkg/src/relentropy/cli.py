"""Command-line front end.

Every run takes its parameters from an optional JSON config (``--config``),
overridden by ``--seed``, ``--param NAME=VALUE`` and ``--tol NAME=VALUE``.
Reports are written to ``--out`` as ``report.json`` plus one CSV.  Exit
status: 0 when every enabled check passes, 1 when one fails, 2 for an invalid
config and 3 for I/O errors.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import click
import numpy as np

from .config import Tolerances
from .cpmaps import random_channel, random_operation
from .errors import ConfigInvalid, ImagesNotConverging, UnknownCommand
from .projectors import build_strongly_consistent, criterion_profile
from .scenarios import (
    GibbsModel,
    config_hash,
    converges,
    cp_preservation_experiment,
    gen_block_sums,
    gen_counterexample,
    gen_dominated,
    gibbs_tail_check,
    identity_suite,
    moment_bounded_sequence,
    rotation_channels,
    varying_map_experiment,
)
from .entropy import relative_entropy

CONFIG_VERSION = 1
CONFIG_KEYS = {"version", "command", "kind", "seed", "params", "tolerances"}

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

# name -> {param: (type, default, help)}
SCHEMAS = {
    "check-identities": {
        "d": (int, 6, "operator dimension"),
        "instances": (int, 200, "number of random tuples"),
        "c": (float, 2.0, "scaling constant for the scaling identities"),
    },
    "criterion": {
        "d": (int, 8, "operator dimension"),
        "n_max": (int, 16, "last sequence index"),
        "c": (float, 0.5, "domination constant of the generated pair"),
        "n0": (int, 0, "first index of the supremum over n"),
        "eps": (float, 1e-3, "threshold for the weak-form witness"),
        "m_min": (int, 0, "smallest projector rank m"),
        "m_max": (int, -1, "largest projector rank m (-1 means d)"),
    },
    "scenario:dominated": {
        "d": (int, 8, "operator dimension"),
        "n_max": (int, 32, "last sequence index"),
        "c": (float, 0.5, "domination constant"),
        "gap_tol": (float, 1e-8, "convergence tolerance on |D_n - D_0|"),
    },
    "scenario:block-sums": {
        "d": (int, 16, "operator dimension"),
        "n_max": (int, 32, "last sequence index"),
        "k": (int, 8, "number of orthogonal blocks"),
        "block_dim": (int, 2, "dimension of each block"),
        "in_tol": (float, 1e-8, "component gap tolerance"),
        "out_tol": (float, 1e-6, "summed gap tolerance"),
    },
    "scenario:gibbs": {
        "d": (int, 64, "truncation dimension"),
        "beta": (float, 1.0, "inverse temperature"),
        "n_max": (int, 48, "last sequence index"),
        "alpha": (float, 3.0, "weight exponent: level n carries E_n^-alpha"),
        "gap_tol": (float, 1e-3, "tolerance on |D_N - D_0| against the Gibbs state"),
    },
    "scenario:counterexample": {
        "d": (int, 64, "truncation dimension"),
        "beta": (float, 1.0, "inverse temperature"),
        "n_max": (int, 48, "last sequence index"),
        "n_start": (int, 2, "first excited level used"),
        "residual_tol": (float, 1e-8, "tolerance against the closed form"),
    },
    "experiment:cp-preserve": {
        "d": (int, 8, "input dimension"),
        "d_out": (int, -1, "output dimension (-1 means d)"),
        "n_max": (int, 32, "last sequence index"),
        "c": (float, 0.5, "domination constant of the input pair"),
        "map": (str, "channel", "channel or operation"),
        "n_kraus": (int, 3, "number of Kraus operators"),
        "in_tol": (float, 1e-8, "input gap tolerance"),
        "out_tol": (float, 1e-6, "image gap tolerance"),
        "profiles": (bool, False, "also compute tail profiles on both sides"),
    },
    "experiment:varying-maps": {
        "d": (int, 8, "input dimension"),
        "n_max": (int, 32, "last sequence index"),
        "c": (float, 0.5, "domination constant of the input pair"),
        "n_kraus": (int, 3, "number of Kraus operators"),
        "mode": (str, "rotation", "rotation (converging maps) or alternating (not converging)"),
        "in_tol": (float, 1e-8, "input gap tolerance"),
        "out_tol": (float, 1e-6, "image gap tolerance"),
    },
}

SCENARIO_KINDS = ("dominated", "block-sums", "gibbs", "counterexample")
EXPERIMENT_KINDS = ("cp-preserve", "varying-maps")


def _coerce(kind, value, name):
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes"):
                return True
            if str(value).lower() in ("0", "false", "no"):
                return False
            raise ValueError(value)
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"parameter {name!r} expects {kind.__name__}, got {value!r}") from exc


def _split_pairs(pairs, what):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigInvalid(f"{what} must look like NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path, command, kind=None):
    """Read and validate a config document.  Returns ``(seed, params, tolerances)``."""
    if path is None:
        return None, {}, {}
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown config field(s): {', '.join(sorted(unknown))}")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigInvalid(f"config version must be {CONFIG_VERSION}")
    if "command" in doc and doc["command"] != command:
        raise ConfigInvalid(f"config is for {doc['command']!r}, not {command!r}")
    if "kind" in doc and kind is not None and doc["kind"] != kind:
        raise ConfigInvalid(f"config is for kind {doc['kind']!r}, not {kind!r}")
    params = doc.get("params", {})
    tols = doc.get("tolerances", {})
    if not isinstance(params, dict) or not isinstance(tols, dict):
        raise ConfigInvalid("params and tolerances must be objects")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigInvalid("seed must be an integer")
    return seed, params, tols


def resolve_run(schema_name, config_path, seed, param_pairs, tol_pairs, command, kind=None):
    """Merge defaults, config file and command-line overrides into one validated record."""
    schema = SCHEMAS[schema_name]
    cfg_seed, cfg_params, cfg_tols = load_config(config_path, command, kind)
    raw = dict(cfg_params)
    raw.update(_split_pairs(param_pairs, "--param"))
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigInvalid(f"unknown parameter(s) for {schema_name}: {', '.join(sorted(unknown))}")
    params = {name: default for name, (_, default, _) in schema.items()}
    for name, value in raw.items():
        params[name] = _coerce(schema[name][0], value, name)
    tol_raw = dict(cfg_tols)
    tol_raw.update(_split_pairs(tol_pairs, "--tol"))
    try:
        tol = Tolerances().replace(**tol_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc
    seed = seed if seed is not None else (cfg_seed if cfg_seed is not None else 0)
    record = {
        "version": CONFIG_VERSION,
        "command": command,
        "kind": kind,
        "seed": seed,
        "params": params,
        "tolerances": {k: tol.as_dict()[k] for k in sorted(tol_raw)},
    }
    return seed, params, tol, record


def _fmt(x) -> str:
    x = float(x)
    return "inf" if math.isinf(x) else repr(x)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(out_dir, record, summary, csv_name, csv_text, passed, started):
    doc = {
        "config": record,
        "config_hash": config_hash(record),
        "passed": bool(passed),
        "summary": summary,
    }
    out = Path(out_dir)
    _write_atomic(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_atomic(out / csv_name, csv_text)
    status = "PASS" if passed else "FAIL"
    click.echo(f"{status} {record['command']}{'/' + record['kind'] if record['kind'] else ''} "
               f"-> {out} ({time.perf_counter() - started:.2f}s)")
    return EXIT_OK if passed else EXIT_FAILED


def _run(fn):
    """Map library and I/O errors onto exit statuses."""
    try:
        code = fn()
    except ConfigInvalid as exc:
        click.echo(f"invalid config: {exc}", err=True)
        code = EXIT_CONFIG
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        code = EXIT_IO
    sys.exit(code)


def common_options(f):
    f = click.option("--tol", "tol_pairs", multiple=True, metavar="NAME=VALUE",
                     help="Override a tolerance (repeatable).")(f)
    f = click.option("--param", "param_pairs", multiple=True, metavar="NAME=VALUE",
                     help="Override a run parameter (repeatable).")(f)
    f = click.option("--out", "out_dir", default="out", show_default=True, type=click.Path(),
                     help="Directory for report.json and the CSV.")(f)
    f = click.option("--seed", type=int, default=None, help="Random seed (default 0).")(f)
    f = click.option("--config", "config_path", type=click.Path(), default=None,
                     help="JSON run config with a version field.")(f)
    return f


@click.group()
def main():
    """Relative-entropy convergence diagnostics."""


@main.command("check-identities")
@common_options
def check_identities_cmd(config_path, seed, out_dir, param_pairs, tol_pairs):
    """Evaluate the scaling and additivity relations on random tuples."""

    def go():
        started = time.perf_counter()
        seed_, p, tol, record = resolve_run("check-identities", config_path, seed, param_pairs, tol_pairs,
                                            "check-identities")
        reports = identity_suite(seed_, p["d"], p["instances"], p["c"], tol=tol)
        rows, violations, worst = [], 0, 0.0
        for i, rep in enumerate(reports):
            for r in rep.results:
                if r.applicable and not r.passed:
                    violations += 1
                if r.applicable and r.residual is not None:
                    worst = max(worst, (abs(r.residual) if r.kind == "eq" else r.residual) / r.scale)
                rows.append([i, r.name, r.kind, int(r.applicable), _fmt(r.lhs), _fmt(r.rhs),
                             "" if r.residual is None else _fmt(r.residual), int(r.passed)])
        summary = {"instances": p["instances"], "violations": violations, "max_scaled_residual": _fmt(worst)}
        text = _csv(["instance", "identity", "kind", "applicable", "lhs", "rhs", "residual", "passed"], rows)
        return _emit(out_dir, record, summary, "identities.csv", text, violations == 0, started)

    _run(go)


@main.command("criterion")
@common_options
def criterion_cmd(config_path, seed, out_dir, param_pairs, tol_pairs):
    """Tail profile of a generated dominated pair over its spectral projector family."""

    def go():
        started = time.perf_counter()
        seed_, p, tol, record = resolve_run("criterion", config_path, seed, param_pairs, tol_pairs, "criterion")
        if not 0 <= p["n0"] <= p["n_max"]:
            raise ConfigInvalid("n0 must lie in [0, n_max]")
        rhos, sigmas, _ = gen_dominated(seed_, p["d"], p["n_max"], p["c"], tol=tol)
        m_max = p["d"] if p["m_max"] < 0 else p["m_max"]
        fam = build_strongly_consistent(sigmas, p["m_min"], m_max, tol)
        prof = criterion_profile(rhos, sigmas, fam, p["n0"], p["eps"], tol)
        mono = prof.non_increasing()
        summary = {
            "non_increasing": mono,
            "witness": None if prof.witness is None else {"m": prof.witness[0], "n0": prof.witness[1]},
            "b_direction_n0": prof.b_direction_n0,
            "d_gap_final": _fmt(abs(prof.d_full[-1] - prof.d_full[0])),
        }
        return _emit(out_dir, record, summary, "criterion.csv", prof.to_csv(),
                     mono and prof.witness is not None, started)

    _run(go)


def _scenario_dominated(seed, p, tol):
    rhos, sigmas, margin = gen_dominated(seed, p["d"], p["n_max"], p["c"], tol=tol)
    d = [relative_entropy(r, s, tol) for r, s in zip(rhos, sigmas)]
    gaps = [abs(x - d[0]) for x in d]
    ok = margin >= -1e-10 and converges(gaps[1:], p["gap_tol"])
    rows = [[n, _fmt(d[n]), _fmt(gaps[n]), _fmt(rhos.distances[n]), _fmt(sigmas.distances[n])]
            for n in range(len(d))]
    summary = {"domination_margin": _fmt(margin), "gap_final": _fmt(gaps[-1]), "converged": ok}
    return ok, summary, _csv(["n", "D", "gap", "rho_distance", "sigma_distance"], rows)


def _scenario_blocks(seed, p, tol):
    sc = gen_block_sums(seed, p["d"], p["n_max"], p["k"], p["block_dim"], tol=tol)
    rows, worst = [], 0.0
    comp = [[relative_entropy(r, s, tol) for r, s in zip(rs, ss)] for rs, ss in zip(sc.rhos, sc.sigmas)]
    total = [relative_entropy(r, s, tol) for r, s in zip(sc.rho_sum, sc.sigma_sum)]
    for n in range(p["n_max"] + 1):
        parts = sum(c[n] for c in comp)
        worst = max(worst, abs(total[n] - parts))
        rows.append([n, _fmt(total[n]), _fmt(parts), _fmt(total[n] - parts)])
    comp_gaps = [abs(c[-1] - c[0]) for c in comp]
    sum_gap = abs(total[-1] - total[0])
    hyp = all(g <= p["in_tol"] for g in comp_gaps)
    ok = worst <= 1e-9 and (not hyp or sum_gap <= p["out_tol"])
    summary = {"additivity_residual": _fmt(worst), "component_gap_max": _fmt(max(comp_gaps)),
               "sum_gap": _fmt(sum_gap), "hypothesis_met": hyp}
    return ok, summary, _csv(["n", "D_sum", "sum_of_D", "residual"], rows)


def _scenario_gibbs(seed, p, tol):
    model = GibbsModel.oscillator(p["d"], p["beta"])
    rhos = moment_bounded_sequence(model, p["n_max"], p["alpha"], tol=tol)
    weights = np.asarray(model.energies) + 1.0
    rep = gibbs_tail_check(model, rhos, weights, gap_tol=p["gap_tol"], tol=tol)
    rows = [[n, _fmt(v), _fmt(abs(v - rep.d_limit))] for n, v in enumerate(rep.d_values)]
    ok = rep.tail_ok and rep.converged
    summary = {"energy_bound": _fmt(rep.energy_bound), "tail_ok": rep.tail_ok,
               "gap_final": _fmt(rep.gap), "converged": rep.converged}
    return ok, summary, _csv(["n", "D", "gap"], rows)


def _scenario_counterexample(seed, p, tol):
    model = GibbsModel.oscillator(p["d"], p["beta"])
    _, rep = gen_counterexample(model, p["n_max"], p["n_start"], tol)
    rows = [[n, _fmt(e), _fmt(a), _fmt(b), _fmt(a - b), _fmt(g), _fmt(gc), _fmt(me)]
            for n, e, a, b, g, gc, me in zip(rep.ns, rep.energies, rep.d_computed, rep.d_closed,
                                             rep.gaps, rep.gaps_closed, rep.mean_energy)]
    gap_err = max(abs(a - b) for a, b in zip(rep.gaps, rep.gaps_closed))
    ok = rep.max_residual <= p["residual_tol"] and gap_err <= p["residual_tol"]
    summary = {"max_residual": _fmt(rep.max_residual), "max_gap_error": _fmt(gap_err),
               "gap_final": _fmt(rep.gaps[-1]), "d_limit": _fmt(rep.d_limit)}
    return ok, summary, _csv(["n", "E_n", "D", "D_closed", "residual", "gap", "gap_closed", "mean_energy"], rows)


SCENARIOS = {
    "dominated": _scenario_dominated,
    "block-sums": _scenario_blocks,
    "gibbs": _scenario_gibbs,
    "counterexample": _scenario_counterexample,
}


@main.command("scenario")
@click.argument("kind", type=click.Choice(SCENARIO_KINDS))
@common_options
def scenario_cmd(kind, config_path, seed, out_dir, param_pairs, tol_pairs):
    """Generate a scenario and check its stated convergence behaviour."""

    def go():
        started = time.perf_counter()
        seed_, p, tol, record = resolve_run(f"scenario:{kind}", config_path, seed, param_pairs, tol_pairs,
                                            "scenario", kind)
        ok, summary, text = SCENARIOS[kind](seed_, p, tol)
        return _emit(out_dir, record, summary, "scenario.csv", text, ok, started)

    _run(go)


@main.command("experiment")
@click.argument("kind", type=click.Choice(EXPERIMENT_KINDS))
@common_options
def experiment_cmd(kind, config_path, seed, out_dir, param_pairs, tol_pairs):
    """Push a converging pair through completely positive maps."""

    def go():
        started = time.perf_counter()
        seed_, p, tol, record = resolve_run(f"experiment:{kind}", config_path, seed, param_pairs, tol_pairs,
                                            "experiment", kind)
        rhos, sigmas, _ = gen_dominated(seed_, p["d"], p["n_max"], p["c"], tol=tol)
        rng = np.random.default_rng(seed_ + 1)
        if kind == "cp-preserve":
            d_out = p["d"] if p["d_out"] < 0 else p["d_out"]
            if p["map"] not in ("channel", "operation"):
                raise ConfigInvalid("map must be 'channel' or 'operation'")
            make = random_channel if p["map"] == "channel" else random_operation
            phi = make(rng, p["d"], d_out, p["n_kraus"])
            rep = cp_preservation_experiment(rhos, sigmas, phi, p["in_tol"], p["out_tol"], p["profiles"],
                                             seed_, record, tol)
        else:
            if p["mode"] not in ("rotation", "alternating"):
                raise ConfigInvalid("mode must be 'rotation' or 'alternating'")
            base = random_channel(rng, p["d"], p["d"], p["n_kraus"])
            if p["mode"] == "rotation":
                phis, limit = rotation_channels(base, p["n_max"], seed=seed_), base
            else:
                other = random_channel(rng, p["d"], p["d"], p["n_kraus"])
                phis, limit = [base] + [base if n % 2 else other for n in range(1, p["n_max"] + 1)], base
            try:
                rep = varying_map_experiment(rhos, sigmas, phis, limit, p["in_tol"], p["out_tol"], False,
                                             seed_, record, tol)
            except ImagesNotConverging as exc:
                summary = {"images_converge": False, **(exc.report or {})}
                return _emit(out_dir, record, summary, "experiment.csv", _csv(["n"], []), False, started)
        summary = rep.to_dict()
        summary.pop("config")
        return _emit(out_dir, record, summary, "experiment.csv", rep.to_csv(), rep.passed, started)

    _run(go)


def describe_text(name: str) -> str:
    """Parameter schema and defaults of a command (``scenario`` and ``experiment`` list every kind).

    Raises
    ------
    UnknownCommand
        If ``name`` is not a command or ``command:kind`` pair.
    """
    if name in SCHEMAS:
        keys = [name]
    elif name in ("scenario", "experiment"):
        keys = [k for k in SCHEMAS if k.startswith(name + ":")]
    else:
        raise UnknownCommand(name)
    lines = []
    for key in keys:
        lines.append(f"{key}")
        for param, (kind, default, text) in SCHEMAS[key].items():
            lines.append(f"  {param:<14}{kind.__name__:<7}default={default!r:<12}{text}")
    if name in ("scenario", "experiment"):
        kinds = SCENARIO_KINDS if name == "scenario" else EXPERIMENT_KINDS
        lines.insert(0, f"kinds: {', '.join(kinds)}")
    lines.append("common flags: --config PATH, --seed N, --out DIR, --param NAME=VALUE, --tol NAME=VALUE")
    lines.append(f"tolerances: {', '.join(Tolerances().as_dict())}")
    return "\n".join(lines) + "\n"


@main.command("describe")
@click.argument("name")
def describe_cmd(name):
    """Print the parameter schema and defaults of a command."""
    try:
        click.echo(describe_text(name), nl=False)
    except UnknownCommand:
        click.echo(f"unknown command: {name}", err=True)
        sys.exit(EXIT_CONFIG)


if __name__ == "__main__":
    main()

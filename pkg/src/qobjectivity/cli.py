"""Command line interface.

Commands: ``check`` (objectivity verdict on a state file), ``schmidt``
(three-way Schmidt extraction), ``central-spin`` (echo time series),
``scenario`` (named demonstration states), ``sweep`` (echo minima across
block sizes). Exit codes: 0 pass/success, 1 analysis says no, 2 input error.

Reproducibility: every pseudo-random choice derives from the 64-bit --seed
through a PCG64 generator; reruns with identical flags produce byte-identical
CSV and JSON. Floats are rendered by ``repr``, which round-trips doubles.
"""

from __future__ import annotations

import json
import math

import click
import numpy as np
from click.core import ParameterSource

from . import central_spin as cs
from . import measurement_dynamics as md
from . import objectivity as obj
from . import quantum_state as qs
from .errors import NotSchmidtForm, QObjectivityError, ShapeError

_INPUT_ERRORS = (QObjectivityError, OSError, json.JSONDecodeError, KeyError, TypeError, ValueError)


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _load_state(path: str):
    objn = _load_json(path)
    if isinstance(objn, dict) and "amplitudes" in objn:
        return qs.ket_from_json(objn)
    if isinstance(objn, dict) and "matrix" in objn:
        return qs.density_from_json(objn)
    raise ShapeError("state JSON needs 'amplitudes' (ket) or 'matrix' (density)")


def _load_bases(path: str) -> list[qs.BranchBasis]:
    objn = _load_json(path)
    if not isinstance(objn, dict) or "bases" not in objn:
        raise ShapeError("bases JSON needs a 'bases' list")
    return [qs.basis_from_json(b) for b in objn["bases"]]


@click.group()
@click.option("--tol", type=float, default=1e-8, show_default=True,
              help="Verdict tolerance used by every command.")
@click.pass_context
def main(ctx, tol: float) -> None:
    """Objectivity analysis toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["tol"] = float(tol)


@main.command()
@click.argument("state_file", type=click.Path())
@click.argument("bases_file", type=click.Path())
@click.option("--out", type=click.Path(), default=None, help="Write the JSON report here.")
@click.pass_context
def check(ctx, state_file: str, bases_file: str, out: str | None) -> None:
    """Objectivity verdict for a tripartite state against branch bases."""
    tol = ctx.obj["tol"]
    try:
        state = _load_state(state_file)
        bases = _load_bases(bases_file)
        report = obj.check_objectivity(state, bases, tol=tol)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    _emit(_dump(report.to_json()), out)
    ctx.exit(0 if report.passed else 1)


@main.command()
@click.argument("state_file", type=click.Path())
@click.option("--out", type=click.Path(), default=None, help="Write the JSON result here.")
@click.pass_context
def schmidt(ctx, state_file: str, out: str | None) -> None:
    """Three-way Schmidt extraction of a pure tripartite state."""
    tol = ctx.obj["tol"]
    try:
        state = _load_state(state_file)
        if not isinstance(state, qs.Ket):
            raise ShapeError("schmidt needs a pure state (ket JSON)")
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    try:
        triple = obj.tripartite_schmidt(state)
    except NotSchmidtForm as exc:
        payload = {
            "error": "NotSchmidtForm",
            "detail": str(exc),
            "violation": exc.violation,
            "tolerance": tol,
        }
        _emit(_dump(payload), out)
        ctx.exit(1)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    payload = triple.to_json()
    payload["tolerance"] = tol
    _emit(_dump(payload), out)
    ctx.exit(0)


def _merged_params(ctx, config: str | None, flags: dict[str, object]) -> dict[str, object]:
    """Resolve flag values against an optional JSON config; explicit flags win."""
    merged = dict(flags)
    if config is None:
        return merged
    cfg = _load_json(config)
    if not isinstance(cfg, dict):
        raise ShapeError("config JSON must be an object")
    unknown = sorted(set(cfg) - set(flags))
    if unknown:
        raise ShapeError(f"config keys not understood: {unknown}")
    for name, value in cfg.items():
        if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
            merged[name] = value
    return merged


def _uniform_params(p: dict) -> cs.CentralSpinParams:
    params = cs.CentralSpinParams.uniform(
        n1=int(p["n1"]),
        n2=int(p["n2"]),
        mu_g=float(p["mu_g"]),
        mu_e=float(p["mu_e"]),
        g=float(p["g"]),
        e_gap=float(p["e_gap"]),
    )
    jitter = float(p["jitter"])
    if jitter != 0.0:
        rng = np.random.Generator(np.random.PCG64(int(p["seed"])))
        params.omega = params.omega + rng.uniform(-jitter, jitter, size=params.n)
    return params


def _grid(t_max: float, steps: int) -> np.ndarray:
    if steps < 1 or not math.isfinite(t_max) or t_max <= 0:
        raise ShapeError(f"need positive steps and t-max, got steps={steps}, t-max={t_max}")
    return np.linspace(0.0, float(t_max), int(steps))


def _csv_text(columns: list[tuple[str, np.ndarray]]) -> str:
    lines = [",".join(name for name, _ in columns)]
    rows = len(columns[0][1])
    for i in range(rows):
        lines.append(",".join(repr(float(col[i])) for _, col in columns))
    return "\n".join(lines) + "\n"


def _series_summary(series: cs.EchoSeries, tol: float) -> dict:
    def _minimum(values: np.ndarray) -> dict:
        idx = int(np.argmin(values))
        return {"value": float(values[idx]), "t": float(series.times[idx])}

    def _discrepancy(direct: np.ndarray, paper: np.ndarray) -> dict:
        gap = np.abs(direct - paper)
        idx = int(np.argmax(gap))
        return {"max_abs": float(gap[idx]), "t": float(series.times[idx])}

    revival = np.flatnonzero(
        (series.direct_block1 >= 1.0 - 1e-9) & (series.direct_block2 >= 1.0 - 1e-9)
    )
    return {
        "tolerance": tol,
        "n1": series.n1,
        "n2": series.n2,
        "min_echo_direct": {
            "block1": _minimum(series.direct_block1),
            "block2": _minimum(series.direct_block2),
        },
        "min_echo_paper": {
            "block1": _minimum(series.paper_block1),
            "block2": _minimum(series.paper_block2),
        },
        "paper_formula_discrepancy": {
            "block1": _discrepancy(series.direct_block1, series.paper_block1),
            "block2": _discrepancy(series.direct_block2, series.paper_block2),
        },
        "revival_times": [float(series.times[i]) for i in revival],
    }


@main.command("central-spin")
@click.option("--n1", type=int, default=25, show_default=True)
@click.option("--n2", type=int, default=25, show_default=True)
@click.option("--mu-g", "mu_g", type=float, default=1.0, show_default=True)
@click.option("--mu-e", "mu_e", type=float, default=1.2, show_default=True)
@click.option("--g", type=float, default=0.2, show_default=True)
@click.option("--e-gap", "e_gap", type=float, default=0.0, show_default=True)
@click.option("--t-max", "t_max", type=float, default=15.0, show_default=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jitter", type=float, default=0.0, show_default=True,
              help="Seeded uniform jitter added to each omega_i.")
@click.option("--config", type=click.Path(), default=None,
              help="JSON object of flag values; explicit flags win.")
@click.option("--out", type=click.Path(), default="echo_series.csv", show_default=True,
              help="CSV destination; the JSON summary goes to stdout.")
@click.pass_context
def central_spin(ctx, **flags) -> None:
    """Echo time series for the central-spin model (uniform spins by default)."""
    tol = ctx.obj["tol"]
    out = flags.pop("out")
    config = flags.pop("config")
    try:
        p = _merged_params(ctx, config, flags)
        params = _uniform_params(p)
        series = cs.echo_series(params, _grid(float(p["t_max"]), int(p["steps"])))
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    with open(out, "w", newline="\n") as fh:
        fh.write(_csv_text(series.columns()))
    summary = _series_summary(series, tol)
    summary["seed"] = int(p["seed"])
    summary["jitter"] = float(p["jitter"])
    summary["csv"] = out
    click.echo(_dump(summary), nl=False)
    ctx.exit(0)


@main.command()
@click.argument("name", type=click.Choice(["tipler", "degenerate-observer", "mixed-observer"]))
@click.option("--order", type=click.Choice(["xy", "yx"]), default="xy", show_default=True,
              help="Record-unitary order for the tipler scenario.")
@click.option("--out", type=click.Path(), default=None, help="Write the JSON report here.")
@click.pass_context
def scenario(ctx, name: str, order: str, out: str | None) -> None:
    """Named demonstration scenarios, reported as JSON."""
    tol = ctx.obj["tol"]
    if name == "tipler":
        payload = md.tipler_scenario(order).to_json()
    elif name == "degenerate-observer":
        payload = md.degenerate_observer_scenario()
    else:
        payload, _ = md.mixed_observer_scenario(tol=tol)
    payload["tolerance"] = tol
    _emit(_dump(payload), out)
    ctx.exit(0)


@main.command()
@click.option("--n-values", "n_values", type=str, default="1,2,4,8,16,32,50",
              show_default=True, help="Comma-separated block-1 sizes.")
@click.option("--mu-g", "mu_g", type=float, default=1.0, show_default=True)
@click.option("--mu-e", "mu_e", type=float, default=1.2, show_default=True)
@click.option("--g", type=float, default=0.2, show_default=True)
@click.option("--e-gap", "e_gap", type=float, default=0.0, show_default=True)
@click.option("--t-max", "t_max", type=float, default=15.0, show_default=True)
@click.option("--steps", type=int, default=600, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jitter", type=float, default=0.0, show_default=True)
@click.option("--config", type=click.Path(), default=None,
              help="JSON object of flag values; explicit flags win.")
@click.option("--out", type=click.Path(), default="echo_sweep.csv", show_default=True)
@click.pass_context
def sweep(ctx, **flags) -> None:
    """Echo minima across block sizes, one CSV row per size."""
    tol = ctx.obj["tol"]
    out = flags.pop("out")
    config = flags.pop("config")
    try:
        p = _merged_params(ctx, config, flags)
        sizes = [int(x) for x in str(p["n_values"]).split(",") if x.strip()]
        if not sizes or any(s < 1 for s in sizes):
            raise ShapeError(f"n-values must be positive integers, got {p['n_values']!r}")
        grid = _grid(float(p["t_max"]), int(p["steps"]))
        rows = []
        for n in sizes:
            q = dict(p)
            q["n1"], q["n2"] = n, 0
            params = _uniform_params(q)
            series = cs.echo_series(params, grid)
            gap = np.abs(series.direct_block1 - series.paper_block1)
            i_min = int(np.argmin(series.direct_block1))
            rows.append(
                (
                    n,
                    float(series.direct_block1[i_min]),
                    float(series.times[i_min]),
                    float(np.min(series.paper_block1)),
                    float(np.max(gap)),
                )
            )
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)

    header = ["n1", "min_echo_direct", "t_argmin", "min_echo_paper", "max_discrepancy"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join([str(row[0])] + [repr(v) for v in row[1:]]))
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    click.echo(
        _dump(
            {
                "tolerance": tol,
                "csv": out,
                "n_values": sizes,
                "seed": int(p["seed"]),
                "jitter": float(p["jitter"]),
            }
        ),
        nl=False,
    )
    ctx.exit(0)


if __name__ == "__main__":
    main()

"""``modalkit`` command-line interface.

Every option can also come from a flat ``key = value`` file passed with
``--config``; flags given on the command line win over the file.
"""
from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click
import numpy as np
from threadpoolctl import threadpool_limits

from ..datamatrix import DataMatrix, convergence_curve, remove_mean
from ..decomp import delta_decomposition, dft_decomposition, dmd, pod
from ..exceptions import ConjugatePairingError, DomainError, ShapeError
from ..filtering import design_fir, filter_rows
from ..mpod import FrequencySplitting, mpod
from ..synthdata import PoiseuilleParams, poiseuille_dataset, two_forcing_dataset
from .config import METHODS, THREADS_ENV, RunConfig, parse_config_file, thread_limit
from .exercises import EXERCISES
from .io import DatasetError, load_dataset, save_dataset, save_decomposition

log = logging.getLogger("modalkit")

USER_ERRORS = (DomainError, ShapeError, DatasetError, ConjugatePairingError, ValueError)


def _defaults_for(command: click.Command, flat: dict) -> dict:
    """Nest flat config values under every (sub)command that accepts them."""
    if isinstance(command, click.Group):
        return {name: _defaults_for(sub, flat) for name, sub in command.commands.items()}
    names = {p.name for p in command.params}
    return {k: v for k, v in flat.items() if k in names}


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        flat = parse_config_file(value)
    except (OSError, DomainError) as exc:
        raise click.BadParameter(str(exc), ctx=ctx, param=param) from exc
    ctx.default_map = _defaults_for(ctx.command, flat)
    return value


def _fail(exc: Exception):
    raise click.ClickException(str(exc)) from exc


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
              is_eager=True, expose_value=False, help="Flat key=value file of option defaults.")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx, verbose):
    """Modal decompositions of space-time data (POD, DFT, DMD, mPOD)."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if os.environ.get(THREADS_ENV):
        try:
            limit = thread_limit()
        except DomainError as exc:
            raise click.UsageError(str(exc)) from exc
        ctx.with_resource(threadpool_limits(limits=limit))


@main.group()
def generate():
    """Write a synthetic dataset."""


@generate.command("poiseuille")
@click.option("--W", "W", type=float, default=10.0, show_default=True, help="Womersley number.")
@click.option("--pA", "pA", type=float, default=60.0, show_default=True,
              help="Dimensionless forcing amplitude.")
@click.option("--n-y", type=int, default=2000, show_default=True)
@click.option("--n-t", type=int, default=200, show_default=True)
@click.option("--f-s", type=float, default=10.0, show_default=True,
              help="Dimensionless sampling frequency.")
@click.option("--n-modes", type=int, default=10, show_default=True,
              help="Eigenfunction terms kept.")
@click.option("--layout", type=click.Choice(["packed_binary", "per_snapshot_csv"]),
              default="packed_binary", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate_poiseuille(W, pA, n_y, n_t, f_s, n_modes, layout, out):
    """Pulsating Poiseuille profile from its eigenfunction expansion."""
    try:
        D = poiseuille_dataset(PoiseuilleParams(W, pA, n_y, n_t, f_s, n_modes))
        save_dataset(D, out, layout)
    except USER_ERRORS as exc:
        _fail(exc)
    click.echo(f"wrote {D.n_s}x{D.n_t} dataset to {out}")


@generate.command("two-forcing")
@click.option("--W1", "W1", type=float, default=1.0, show_default=True)
@click.option("--W2", "W2", type=float, default=4.0, show_default=True)
@click.option("--pA", "pA", type=float, default=60.0, show_default=True)
@click.option("--pA2", "pA2", type=float, default=None,
              help="Second forcing amplitude (default: balanced leading response).")
@click.option("--n-y", type=int, default=2000, show_default=True)
@click.option("--n-t", type=int, default=1000, show_default=True)
@click.option("--f-s", type=float, default=10.0, show_default=True)
@click.option("--n-modes", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate_two_forcing(W1, W2, pA, pA2, n_y, n_t, f_s, n_modes, out):
    """Two windowed forcings; also writes each forcing alone under F1/ and F2/."""
    try:
        p = PoiseuilleParams(W1, pA, n_y, n_t, f_s, n_modes)
        D, F1, F2 = two_forcing_dataset(W1, W2, p=p, p_hat_A2=pA2)
        save_dataset(D, out)
        save_dataset(F1, Path(out) / "F1")
        save_dataset(F2, Path(out) / "F2")
    except USER_ERRORS as exc:
        _fail(exc)
    click.echo(f"wrote {D.n_s}x{D.n_t} dataset to {out}")


def _load(path, remove: bool) -> DataMatrix:
    D = load_dataset(path)
    if remove:
        D, _ = remove_mean(D)
    return D


def run_method(D: DataMatrix, cfg: RunConfig):
    if cfg.method == "pod":
        return pod(D)
    if cfg.method == "dft":
        return dft_decomposition(D).sorted()
    if cfg.method == "dmd":
        return dmd(D, rank=cfg.rank).sorted()
    if cfg.method == "delta":
        return delta_decomposition(D)
    split = (FrequencySplitting(((0.0, D.f_s / 2),)) if cfg.bands is None
             else FrequencySplitting.parse(cfg.bands))
    return mpod(D, split, fir_order=cfg.fir_order, mode=cfg.bank_mode)


@main.command()
@click.option("--data", type=click.Path(exists=True), required=True,
              help="Dataset directory or manifest.")
@click.option("--method", type=click.Choice(METHODS), default="pod", show_default=True)
@click.option("--bands", default=None, help="mPOD bands in Hz, e.g. 0:10,290:320.")
@click.option("--fir-order", type=int, default=211, show_default=True)
@click.option("--bank-mode", type=click.Choice(["fir", "ideal"]), default="fir",
              show_default=True)
@click.option("--rank", type=int, default=None, help="DMD truncation rank.")
@click.option("--n-modes", type=int, default=10, show_default=True,
              help="Number of modes exported.")
@click.option("--remove-mean/--keep-mean", default=False, show_default=True)
@click.option("--convergence/--no-convergence", default=True, show_default=True,
              help="Also export the Frobenius convergence curve.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def decompose(data, method, bands, fir_order, bank_mode, rank, n_modes, remove_mean,
              convergence, out):
    """Decompose a dataset and export CSV tables."""
    try:
        cfg = RunConfig(method, bands, fir_order, bank_mode, n_modes, remove_mean, out, rank)
        D = _load(data, remove_mean)
        result = run_method(D, cfg)
        files = save_decomposition(result, out, data=D if convergence else None,
                                   n_modes=n_modes, f_s=D.f_s)
    except USER_ERRORS as exc:
        _fail(exc)
    click.echo(f"{method}: wrote {len(files)} files to {out}")


@main.command("filter")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--kind", type=click.Choice(["lowpass", "highpass", "bandpass"]),
              default="lowpass", show_default=True)
@click.option("--cutoff", required=True,
              help="Cutoff in Hz; two comma-separated values for bandpass.")
@click.option("--order", type=int, default=211, show_default=True)
@click.option("--window", type=click.Choice(["hamming", "hann", "rect"]), default="hamming",
              show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def filter_cmd(data, kind, cutoff, order, window, out):
    """Filter every time series of a dataset (periodic convolution)."""
    try:
        D = load_dataset(data)
        cutoffs = [float(c) / D.f_s for c in cutoff.split(",")]
        h = design_fir(kind, cutoffs, order, window)
        save_dataset(filter_rows(D, h), out)
    except USER_ERRORS as exc:
        _fail(exc)
    click.echo(f"wrote filtered dataset to {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--method", type=click.Choice(METHODS), default="pod", show_default=True)
@click.option("--bands", default=None)
@click.option("--fir-order", type=int, default=211, show_default=True)
@click.option("--norm", type=click.Choice(["fro", "spectral"]), default="fro",
              show_default=True)
@click.option("--max-rank", type=int, default=10, show_default=True)
@click.option("--remove-mean/--keep-mean", default=False, show_default=True)
def energy(data, method, bands, fir_order, norm, max_rank, remove_mean):
    """Print per-mode energies and the convergence curve."""
    try:
        cfg = RunConfig(method, bands, fir_order, "fir", max_rank, remove_mean)
        D = _load(data, remove_mean)
        result = run_method(D, cfg)
        dec = getattr(result, "decomposition", result)
        ranks = range(min(max_rank, dec.n_modes) + 1)
        curve = convergence_curve(D, dec, ranks, norm=norm)
    except USER_ERRORS as exc:
        _fail(exc)
    total = float(np.vdot(D.values, D.values).real)
    click.echo("r,sigma,energy_fraction,E")
    click.echo(f"0,,,{curve[0]:.10g}")
    for r in range(1, len(curve)):
        s = dec.sigma[r - 1]
        click.echo(f"{r},{s:.10g},{s ** 2 / total:.10g},{curve[r]:.10g}")


def _exercise_command(number: int):
    func = EXERCISES[number]

    @click.option("--out", type=click.Path(file_okay=False), default=None,
                  help="Directory for CSV artifacts.")
    def command(out):
        checks = func(None if out is None else Path(out))
        for check in checks:
            click.echo(check.line())
        failed = [c for c in checks if not c.passed]
        if failed:
            click.echo(f"exercise{number}: {len(failed)} check(s) failed", err=True)
            sys.exit(1)
        click.echo(f"exercise{number}: all {len(checks)} checks passed")

    command.__doc__ = (func.__doc__ or "").strip().splitlines()[0]
    return main.command(f"exercise{number}")(command)


for _n in EXERCISES:
    _exercise_command(_n)


if __name__ == "__main__":  # pragma: no cover
    main()

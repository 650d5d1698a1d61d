"""Command-line interface.

Every pipeline stage is a subcommand writing into a shared ``--output-dir``.
Configuration comes from an optional TOML file (``--config``); every key in
it can be overridden by a same-named flag. Exit codes: 0 success, 2 bad
configuration, 3 bad data, 4 stages run out of order.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import __version__
from .pipeline import (
    ConfigError,
    DataError,
    PipelineSettings,
    StageOrderError,
    load_settings,
    run_pipeline,
    stage_classify_fields,
    stage_classify_mobility,
    stage_disambiguate,
    stage_fill_countries,
    stage_ingest,
    stage_metrics_citations,
    stage_metrics_flows,
    stage_metrics_fnbd,
    stage_metrics_nmr,
    stage_sensitivity_fnbd,
    stage_sensitivity_nmr,
    stage_sensitivity_padding,
    stage_synth_generate,
    stage_synth_score,
)
from .synth import GeneratorConfig

logger = logging.getLogger(__name__)


def _csv_numbers(cast):
    def callback(ctx, param, value):
        if value is None:
            return None
        try:
            return tuple(cast(part) for part in str(value).split(",") if part != "")
        except ValueError:
            raise click.BadParameter(f"expected comma-separated values, got {value!r}")

    return callback


_SETTINGS_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                 help="TOML configuration file."),
    click.option("--output-dir", required=True, type=click.Path(path_type=Path),
                 help="Directory shared by all stages."),
    click.option("--corpus", type=click.Path(path_type=Path), default=None,
                 help="Input corpus (CSV or JSONL)."),
    click.option("--gazetteer", type=click.Path(path_type=Path), default=None,
                 help="Gazetteer CSV; defaults to the packaged one."),
    click.option("--asjc-map", type=click.Path(path_type=Path), default=None,
                 help="Subject-code table CSV; defaults to the packaged one."),
    click.option("--focal-country", default=None, help="Alpha-2 focal country code."),
    click.option("--snapshot-year", type=int, default=None),
    click.option("--max-countries", type=int, default=None,
                 help="Suspicion threshold: distinct countries."),
    click.option("--max-publications", type=int, default=None,
                 help="Suspicion threshold: distinct publications."),
    click.option("--w-affiliation-similarity", type=float, default=None),
    click.option("--w-country-overlap", type=float, default=None),
    click.option("--w-subject-overlap", type=float, default=None),
    click.option("--w-year-proximity", type=float, default=None),
    click.option("--cut-threshold", type=float, default=None,
                 help="Distance cut for splitting suspicious identities."),
    click.option("--alpha", type=float, default=None,
                 help="Fixed multidisciplinary threshold (excludes target share)."),
    click.option("--target-multidisciplinary-share", type=float, default=None,
                 help="Calibrate alpha to hit this share (excludes --alpha)."),
    click.option("--padding", type=int, default=None,
                 help="Years of presence padding for population estimates."),
    click.option("--min-support", type=float, default=None,
                 help="Minimum discipline population for a reliable balance value."),
    click.option("--seed", type=int, default=None),
    click.option("--exclusion-proportions", default=None, callback=_csv_numbers(float),
                 help="Comma-separated exclusion proportions, e.g. 0,0.2,0.4."),
    click.option("--runs-per-proportion", type=int, default=None),
    click.option("--paddings", default=None, callback=_csv_numbers(int),
                 help="Comma-separated paddings for the sweep, e.g. 1,2,3,4,5."),
    click.option("--include-transient-flows/--no-include-transient-flows", default=None),
    click.option("--flow-measure", type=click.Choice(["movers", "moves"]), default=None),
]


def settings_options(fn):
    for option in reversed(_SETTINGS_OPTIONS):
        fn = option(fn)
    return fn


def _build_settings(config_path, output_dir, overrides) -> PipelineSettings:
    try:
        return load_settings(config_path, output_dir, overrides)
    except ConfigError as exc:
        _fail(exc, 2)


def _fail(exc, code: int) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _execute(stage_fn, settings, *args) -> None:
    try:
        stage_fn(settings, *args)
    except StageOrderError as exc:
        _fail(exc, 4)
    except ConfigError as exc:
        _fail(exc, 2)
    except DataError as exc:
        _fail(exc, 3)


def _stage_command(group, name, stage_fn, help_text):
    @group.command(name=name, help=help_text)
    @settings_options
    def command(config_path, output_dir, **overrides):
        settings = _build_settings(config_path, output_dir, overrides)
        _execute(stage_fn, settings)

    return command


@click.group()
@click.version_option(version=__version__, prog_name="scimigrate")
@click.option("--verbose", is_flag=True, help="Log progress at INFO level.")
def main(verbose):
    """Measure international scholarly migration from authorship records."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


_stage_command(main, "ingest", stage_ingest,
               "Parse and validate the corpus; write the cleaned copy.")
_stage_command(main, "fill-countries", stage_fill_countries,
               "Infer missing countries from affiliation text.")
_stage_command(main, "disambiguate", stage_disambiguate,
               "Split suspicious author identities and write revised IDs.")
_stage_command(main, "classify-fields", stage_classify_fields,
               "Assign each author a major field of science.")
_stage_command(main, "classify-mobility", stage_classify_mobility,
               "Build mobility profiles and write per-author labels.")


@main.group()
def metrics():
    """Migration metrics computed from classified corpora."""


_stage_command(metrics, "nmr", stage_metrics_nmr,
               "Yearly net migration rate for the focal country.")
_stage_command(metrics, "fnbd", stage_metrics_fnbd,
               "Fractional net brain drain per discipline.")
_stage_command(metrics, "citations", stage_metrics_citations,
               "Citation classes of migrants by partner country.")
_stage_command(metrics, "flows", stage_metrics_flows,
               "Origin-destination flow network by major field.")


@main.group()
def sensitivity():
    """Robustness studies over data exclusion and padding choices."""


_stage_command(sensitivity, "nmr", stage_sensitivity_nmr,
               "Net migration rate under random record exclusion.")
_stage_command(sensitivity, "fnbd", stage_sensitivity_fnbd,
               "Brain-drain balance under random record exclusion.")
_stage_command(sensitivity, "padding", stage_sensitivity_padding,
               "Net migration rate across presence paddings.")


@main.group()
def synth():
    """Synthetic corpora with known ground truth."""


@synth.command(name="generate", help="Generate a labeled synthetic corpus and its truth file.")
@settings_options
@click.option("--single-paper", type=int, default=150, show_default=True)
@click.option("--non-mover", type=int, default=400, show_default=True)
@click.option("--immigrant", type=int, default=100, show_default=True)
@click.option("--emigrant", type=int, default=150, show_default=True)
@click.option("--return-migrant", type=int, default=100, show_default=True)
@click.option("--transient", type=int, default=50, show_default=True)
@click.option("--non-focal", type=int, default=50, show_default=True)
@click.option("--start-year", type=int, default=1996, show_default=True)
@click.option("--end-year", type=int, default=2020, show_default=True)
@click.option("--suspicious-fraction", type=float, default=0.0, show_default=True)
@click.option("--missing-country-fraction", type=float, default=0.0, show_default=True)
@click.option("--citation-sigma", type=float, default=0.25, show_default=True)
def synth_generate(config_path, output_dir, single_paper, non_mover, immigrant, emigrant,
                   return_migrant, transient, non_focal, start_year, end_year,
                   suspicious_fraction, missing_country_fraction, citation_sigma,
                   **overrides):
    settings = _build_settings(config_path, output_dir, overrides)
    try:
        generator_config = GeneratorConfig(
            counts={
                "single_paper": single_paper,
                "non_mover": non_mover,
                "immigrant": immigrant,
                "emigrant": emigrant,
                "return_migrant": return_migrant,
                "transient": transient,
                "non_focal": non_focal,
            },
            start_year=start_year,
            end_year=end_year,
            focal=settings.focal_country,
            suspicious_fraction=suspicious_fraction,
            missing_country_fraction=missing_country_fraction,
            citation_sigma=citation_sigma,
            seed=settings.seed,
        )
    except ValueError as exc:
        _fail(exc, 2)
    _execute(stage_synth_generate, settings, generator_config)


@synth.command(name="score", help="Score pipeline outputs against a generator truth file.")
@settings_options
@click.option("--truth", type=click.Path(path_type=Path), default=None,
              help="Truth JSONL; defaults to truth.jsonl in the output directory.")
def synth_score(config_path, output_dir, truth, **overrides):
    settings = _build_settings(config_path, output_dir, overrides)
    _execute(stage_synth_score, settings, truth)


@main.command(name="run", help="Run ingest through metrics in order.")
@settings_options
def run_all(config_path, output_dir, **overrides):
    settings = _build_settings(config_path, output_dir, overrides)
    _execute(run_pipeline, settings)


if __name__ == "__main__":
    main()

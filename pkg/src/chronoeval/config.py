"""Experiment configuration: flat INI-style key=value files with sections.

Every key can be overridden on the command line with ``--set section.key=value``.
The output directory can also be overridden through the CHRONOEVAL_OUTPUT_DIR
environment variable.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .classify import TrainParams
from .resample import PROCEDURES, XVAL_STRAT_RAND, SEQ_2_1_10SEMI
from .stats import METRICS

ENV_OUTPUT_DIR = "CHRONOEVAL_OUTPUT_DIR"

RANDOMIZED_PROCEDURES = (XVAL_STRAT_RAND, SEQ_2_1_10SEMI)


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    datasets: dict[str, Path]
    seed: int
    output_dir: Path
    block_size: int = 10_000
    procedures: tuple[str, ...] = PROCEDURES
    metrics: tuple[str, ...] = METRICS
    params: TrainParams = field(default_factory=TrainParams)
    window_fraction: float = 0.5
    aggregate: str = "mean"
    parallelism: int = 0           # 0 = all available cores
    classifier: str = "two_plane"  # or "external"
    predictions: dict[str, Path] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.datasets:
            raise ConfigError("no datasets configured")
        for name, path in self.datasets.items():
            if not Path(path).exists():
                raise ConfigError(f"dataset {name!r}: file not found: {path}")
        unknown = [p for p in self.procedures if p not in PROCEDURES]
        if unknown:
            raise ConfigError(f"unknown procedures: {unknown}; known: {list(PROCEDURES)}")
        if self.seed is None and any(p in RANDOMIZED_PROCEDURES for p in self.procedures):
            raise ConfigError("a seed is mandatory when randomized procedures are configured")
        bad_metrics = [m for m in self.metrics if m not in METRICS]
        if bad_metrics:
            raise ConfigError(f"unknown metrics: {bad_metrics}; known: {list(METRICS)}")
        if self.aggregate not in ("mean", "pooled"):
            raise ConfigError(f"aggregate must be 'mean' or 'pooled', not {self.aggregate!r}")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if not 0 < self.window_fraction <= 1:
            raise ConfigError("window_fraction must be in (0, 1]")
        if self.params.lam <= 0:
            raise ConfigError("lambda must be > 0")
        if self.params.epochs < 1 or self.params.bins_per_axis < 1 or self.params.min_df < 1:
            raise ConfigError("epochs, bins_per_axis and min_df must be >= 1")
        if self.classifier not in ("two_plane", "external"):
            raise ConfigError(f"classifier must be 'two_plane' or 'external', not {self.classifier!r}")
        if self.classifier == "external":
            missing = [d for d in self.datasets if d not in self.predictions]
            if missing:
                raise ConfigError(f"external classifier needs a [predictions] entry for: {missing}")
            for name, path in self.predictions.items():
                if not Path(path).exists():
                    raise ConfigError(f"predictions {name!r}: file not found: {path}")

    def echo(self) -> dict:
        """Plain-dict snapshot for the manifest."""
        return {
            "datasets": {k: str(v) for k, v in sorted(self.datasets.items())},
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "block_size": self.block_size,
            "procedures": list(self.procedures),
            "metrics": list(self.metrics),
            "classifier": self.classifier,
            "lambda": self.params.lam,
            "epochs": self.params.epochs,
            "bins_per_axis": self.params.bins_per_axis,
            "min_df": self.params.min_df,
            "max_ngram": self.params.max_ngram,
            "window_fraction": self.window_fraction,
            "aggregate": self.aggregate,
            "predictions": {k: str(v) for k, v in sorted(self.predictions.items())},
        }


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in raw.split(",") if s.strip())


def load_config(path: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Parse an INI config, apply key=value overrides, validate."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, option = key.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), option.strip(), value.strip())

    if not parser.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    exp = parser["experiment"]

    seed_raw = exp.get("seed")
    if seed_raw is None:
        raise ConfigError("experiment.seed is required")
    try:
        seed = int(seed_raw)
    except ValueError:
        raise ConfigError(f"experiment.seed must be an integer, got {seed_raw!r}") from None

    out_raw = os.environ.get(ENV_OUTPUT_DIR) or exp.get("output_dir")
    if not out_raw:
        raise ConfigError("experiment.output_dir is required (or set CHRONOEVAL_OUTPUT_DIR)")

    if not parser.has_section("datasets") or not parser["datasets"]:
        raise ConfigError(f"{path}: missing or empty [datasets] section")
    base = path.parent
    datasets = {name: (base / p).resolve() if not Path(p).is_absolute() else Path(p)
                for name, p in parser["datasets"].items()}
    predictions = {}
    if parser.has_section("predictions"):
        predictions = {name: (base / p).resolve() if not Path(p).is_absolute() else Path(p)
                       for name, p in parser["predictions"].items()}

    cls = parser["classifier"] if parser.has_section("classifier") else {}
    try:
        params = TrainParams(
            lam=float(cls.get("lambda", 1e-4)),
            epochs=int(cls.get("epochs", 10)),
            bins_per_axis=int(cls.get("bins_per_axis", 7)),
            min_df=int(cls.get("min_df", 5)),
            max_ngram=int(cls.get("max_ngram", 2)),
        )
        cfg = ExperimentConfig(
            datasets=datasets,
            seed=seed,
            output_dir=Path(out_raw),
            block_size=int(exp.get("block_size", 10_000)),
            procedures=_split_list(exp.get("procedures", ",".join(PROCEDURES))),
            metrics=_split_list(exp.get("metrics", ",".join(METRICS))),
            params=params,
            window_fraction=float(exp.get("window_fraction", 0.5)),
            aggregate=exp.get("aggregate", "mean"),
            parallelism=int(exp.get("parallelism", 0)),
            classifier=str(cls.get("kind", "two_plane")),
            predictions=predictions,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: bad value: {exc}") from None
    cfg.validate()
    return cfg

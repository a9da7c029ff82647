"""End-to-end experiment orchestration and file outputs.

Stages: load corpora, compute gold standards, run every configured
estimation procedure on every in-set, then derive the error analyses.
Independent (dataset, in-set, procedure) tasks may run in parallel; results
are collected in a fixed order and written by a single collector, so output
files are byte-identical for a given config and seed regardless of the
parallelism degree.  manifest.json records the config echo, versions, and
per-stage wall-clock times (timings necessarily vary between runs; every
other output file is deterministic).
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__, resample, stats
from .classify import external_prediction_factory, load_external_predictions, two_plane_factory
from .config import ExperimentConfig
from .corpus import InOutPair, TimeOrderedCorpus, load_corpus, partition
from .features import TermMatrix
from .resample import build_plan, corpus_term_matrix
from .seeding import derive_seed
from .stats import EvaluationRecord

GOLD_TASK = "__gold__"

OUTPUT_FILES = (
    "gold.csv",
    "estimates.csv",
    "errors.csv",
    "medians.csv",
    "quartiles.csv",
    "relerr.csv",
    "friedman.json",
    "wilcoxon.csv",
)


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class DatasetState:
    name: str
    corpus: TimeOrderedCorpus
    pairs: list[InOutPair]
    tm: TermMatrix | None = None
    predictions: np.ndarray | None = None


# Worker state is inherited by forked pool processes; one pool per dataset.
_WORKER: dict = {}


def _run_task(key: tuple[int, str]) -> tuple[tuple[int, str], dict]:
    k, proc = key
    ds: DatasetState = _WORKER["ds"]
    cfg: ExperimentConfig = _WORKER["cfg"]
    pair = next(p for p in ds.pairs if p.inset_index == k)
    if ds.predictions is not None:
        factory = external_prediction_factory(ds.predictions)
    else:
        factory = two_plane_factory(ds.tm, np.asarray(ds.corpus.labels()), cfg.params)
    if proc == GOLD_TASK:
        g = resample.gold(
            ds.corpus, pair, cfg.params, tm=ds.tm, model_factory=factory,
            seed=derive_seed(cfg.seed, ds.name, k),
        )
        return key, {"alpha": g.alpha, "f1bar": g.f1_bar,
                     "in_size": g.in_size, "out_size": g.out_size}
    labels_in = ds.corpus.labels()[: pair.in_size]
    plan = build_plan(proc, pair.in_size, labels=labels_in,
                      seed=derive_seed(cfg.seed, ds.name, k, proc),
                      window_fraction=cfg.window_fraction)
    est = resample.estimate(ds.corpus, pair, plan, cfg.params, tm=ds.tm,
                            model_factory=factory, aggregate=cfg.aggregate)
    return key, {"alpha": est.alpha, "f1bar": est.f1_bar,
                 "n_elements": est.n_elements, "alpha_undefined": est.alpha_undefined}


def _map_tasks(keys: list[tuple[int, str]], workers: int) -> list[tuple[tuple[int, str], dict]]:
    if workers <= 1 or len(keys) <= 1:
        return [_run_task(k) for k in keys]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(workers, len(keys)), mp_context=ctx) as ex:
        return list(ex.map(_run_task, keys))


@dataclass
class ExperimentResult:
    output_dir: Path
    gold: dict[tuple[str, int], dict] = field(default_factory=dict)
    estimates: dict[tuple[str, int, str], dict] = field(default_factory=dict)
    records: list[EvaluationRecord] = field(default_factory=list)
    stage_seconds: dict[str, float] = field(default_factory=dict)


def _load_stage(cfg: ExperimentConfig) -> dict[str, DatasetState]:
    states: dict[str, DatasetState] = {}
    for name in sorted(cfg.datasets):
        corp = load_corpus(cfg.datasets[name], name=name)
        pairs = partition(corp, cfg.block_size)
        state = DatasetState(name, corp, pairs)
        if cfg.classifier == "external":
            state.predictions = load_external_predictions(cfg.predictions[name], len(corp))
        else:
            state.tm = corpus_term_matrix(corp, cfg.params.max_ngram)
        states[name] = state
    return states


def build_records(
    gold: dict[tuple[str, int], dict],
    estimates: dict[tuple[str, int, str], dict],
    metrics: Sequence[str],
) -> list[EvaluationRecord]:
    """Join Est with Gold into EvaluationRecords, skipping undefined values."""
    records = []
    for (name, k, proc), est in sorted(estimates.items()):
        g = gold.get((name, k))
        if g is None:
            continue
        for metric in metrics:
            if est.get(metric) is None or g.get(metric) is None:
                continue
            records.append(
                EvaluationRecord(proc, name, k, metric, est[metric], g[metric])
            )
    return records


def _write_gold_csv(path: Path, gold: dict[tuple[str, int], dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "inset_index", "alpha", "f1bar", "in_size", "out_size"])
        for (name, k), g in sorted(gold.items()):
            w.writerow([name, k, _fmt(g["alpha"]), _fmt(g["f1bar"]), g["in_size"], g["out_size"]])


def _write_estimates_csv(path: Path, estimates: dict, metrics: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "inset_index", "procedure", "metric", "est",
                    "n_elements", "n_undefined"])
        for (name, k, proc), est in sorted(estimates.items()):
            for metric in metrics:
                undef = est["alpha_undefined"] if metric == "alpha" else 0
                w.writerow([name, k, proc, metric, _fmt(est[metric]),
                            est["n_elements"], undef])


def _write_errors_csv(path: Path, records: list[EvaluationRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "procedure", "dataset", "inset_index",
                    "est", "gold", "err", "abs_err", "rel_err"])
        for r in sorted(records, key=lambda r: (r.metric, r.procedure_id, r.dataset, r.inset_index)):
            w.writerow([r.metric, r.procedure_id, r.dataset, r.inset_index,
                        _fmt(r.est), _fmt(r.gold), _fmt(r.err), _fmt(r.abs_err),
                        _fmt(r.rel_err)])


def read_gold_csv(path: Path) -> dict[tuple[str, int], dict]:
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out[(row["dataset"], int(row["inset_index"]))] = {
                "alpha": float(row["alpha"]) if row["alpha"] else None,
                "f1bar": float(row["f1bar"]) if row["f1bar"] else None,
                "in_size": int(row["in_size"]),
                "out_size": int(row["out_size"]),
            }
    return out


def read_estimates_csv(path: Path) -> dict[tuple[str, int, str], dict]:
    out: dict[tuple[str, int, str], dict] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["dataset"], int(row["inset_index"]), row["procedure"])
            entry = out.setdefault(key, {"n_elements": int(row["n_elements"]),
                                         "alpha_undefined": 0})
            entry[row["metric"]] = float(row["est"]) if row["est"] else None
            if row["metric"] == "alpha":
                entry["alpha_undefined"] = int(row["n_undefined"])
    return out


def read_errors_csv(path: Path) -> list[EvaluationRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(EvaluationRecord(
                row["procedure"], row["dataset"], int(row["inset_index"]),
                row["metric"], float(row["est"]), float(row["gold"]),
            ))
    return records


def analyze(
    records: list[EvaluationRecord],
    procedures: Sequence[str],
    metrics: Sequence[str],
    out_dir: Path,
) -> None:
    """Derive medians, relative-error classes, Friedman-Nemenyi, Wilcoxon."""
    med = stats.median_errors(records)
    datasets = sorted({r.dataset for r in records})

    with open(out_dir / "medians.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "dataset", *procedures])
        for metric in metrics:
            for ds in datasets:
                row = [med.cells.get((metric, p, ds)) for p in procedures]
                w.writerow([metric, ds, *[_fmt(c.median if c else None) for c in row]])
            w.writerow([metric, "Median",
                        *[_fmt(med.procedure_medians.get((metric, p))) for p in procedures]])

    with open(out_dir / "quartiles.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "procedure", "dataset", "q1", "median", "q3", "n"])
        for (metric, proc, ds), c in sorted(med.cells.items()):
            w.writerow([metric, proc, ds, _fmt(c.q1), _fmt(c.median), _fmt(c.q3), c.n])

    by_mp: dict[tuple[str, str], list[EvaluationRecord]] = {}
    by_mpd: dict[tuple[str, str, str], list[EvaluationRecord]] = {}
    for r in records:
        by_mp.setdefault((r.metric, r.procedure_id), []).append(r)
        by_mpd.setdefault((r.metric, r.procedure_id, r.dataset), []).append(r)
    with open(out_dir / "relerr.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "procedure", "dataset", "small", "moderate", "large",
                    "n", "excluded_nonpositive_gold"])
        for metric in metrics:
            for proc in procedures:
                rows = [("all", by_mp.get((metric, proc), []))]
                rows += [(ds, by_mpd.get((metric, proc, ds), [])) for ds in datasets]
                for ds, recs in rows:
                    b = stats.relative_error_classes(recs)
                    w.writerow([metric, proc, ds, _fmt(b.small), _fmt(b.moderate),
                                _fmt(b.large), b.n_included, b.n_excluded_nonpositive_gold])

    # one AvgAbsErr value per (dataset, procedure) feeds the rank tests
    if len(procedures) < 2:
        raise ValueError(
            f"Friedman test needs at least 2 procedures to rank, got {len(procedures)}"
        )
    friedman_out = {}
    wilcoxon_rows = []
    for metric in metrics:
        matrix = np.full((len(datasets), len(procedures)), np.nan)
        for i, ds in enumerate(datasets):
            for j, proc in enumerate(procedures):
                recs = by_mpd.get((metric, proc, ds))
                if recs:
                    matrix[i, j] = float(np.mean([r.abs_err for r in recs]))
        if len(datasets) < 2:
            # ranks over a single dataset carry no test; record why
            friedman_out[metric] = {
                "procedures": list(procedures),
                "n_datasets": len(datasets),
                "skipped": "Friedman test needs at least 2 datasets",
            }
        else:
            fr = stats.friedman(matrix, procedures)
            cd05 = stats.nemenyi_cd(len(procedures), len(datasets), 0.05)
            cd01 = stats.nemenyi_cd(len(procedures), len(datasets), 0.01)
            friedman_out[metric] = {
                "procedures": list(procedures),
                "n_datasets": len(datasets),
                "avg_ranks": [round(float(x), 6) for x in fr.avg_ranks],
                "chi2": round(fr.chi2, 6),
                "p_chi2": round(fr.p_chi2, 9),
                "iman_davenport": round(fr.iman_davenport, 6) if np.isfinite(fr.iman_davenport) else None,
                "p_iman_davenport": round(fr.p_iman_davenport, 9),
                "cd_05": round(cd05, 6),
                "cd_01": round(cd01, 6),
                "significant_pairs_05": fr.significant_pairs(cd05),
                "significant_pairs_01": fr.significant_pairs(cd01),
            }
        for i, pa in enumerate(procedures):
            for pb in procedures[i + 1:]:
                col_a = matrix[:, procedures.index(pa)]
                col_b = matrix[:, procedures.index(pb)]
                both = ~np.isnan(col_a) & ~np.isnan(col_b)
                res = stats.wilcoxon(col_a[both], col_b[both])
                tier = "1%" if res.p_two_sided <= 0.01 else ("5%" if res.p_two_sided <= 0.05 else "ns")
                wilcoxon_rows.append([metric, pa, pb, res.n, res.w,
                                      _fmt(res.p_two_sided), _fmt(res.p_one_sided),
                                      res.direction or "", tier])
    with open(out_dir / "friedman.json", "w", encoding="utf-8") as fh:
        json.dump(friedman_out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "wilcoxon.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "procedure_a", "procedure_b", "n", "w",
                    "p_two_sided", "p_one_sided", "direction", "significance"])
        w.writerows(wilcoxon_rows)


def _write_manifest(out_dir: Path, cfg: ExperimentConfig, stage_seconds: dict[str, float],
                    status: str, failed_stage: str | None = None, error: str | None = None) -> None:
    manifest = {
        "tool": "chronoeval",
        "version": __version__,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "stages": [{"name": k, "seconds": round(v, 3)} for k, v in stage_seconds.items()],
        "status": status,
    }
    if failed_stage:
        manifest["failed_stage"] = failed_stage
        manifest["error"] = error
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the full pipeline; write all output files plus manifest.json."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = cfg.parallelism if cfg.parallelism > 0 else (os.cpu_count() or 1)
    result = ExperimentResult(out_dir)
    timings = result.stage_seconds
    stage = "load"
    try:
        t0 = time.perf_counter()
        states = _load_stage(cfg)
        timings["load"] = time.perf_counter() - t0

        stage = "gold"
        t0 = time.perf_counter()
        for name, ds in states.items():
            _WORKER.update(ds=ds, cfg=cfg)
            keys = [(p.inset_index, GOLD_TASK) for p in ds.pairs]
            for (k, _), payload in _map_tasks(keys, workers):
                result.gold[(name, k)] = payload
        _write_gold_csv(out_dir / "gold.csv", result.gold)
        timings["gold"] = time.perf_counter() - t0

        stage = "estimate"
        t0 = time.perf_counter()
        for name, ds in states.items():
            _WORKER.update(ds=ds, cfg=cfg)
            keys = [(p.inset_index, proc) for p in ds.pairs for proc in cfg.procedures]
            for (k, proc), payload in _map_tasks(keys, workers):
                result.estimates[(name, k, proc)] = payload
        _write_estimates_csv(out_dir / "estimates.csv", result.estimates, cfg.metrics)
        timings["estimate"] = time.perf_counter() - t0

        stage = "analyze"
        t0 = time.perf_counter()
        # re-read the emitted CSVs so the analysis is a pure function of the
        # published 6-decimal artifacts (staged reruns then match exactly)
        result.records = build_records(
            read_gold_csv(out_dir / "gold.csv"),
            read_estimates_csv(out_dir / "estimates.csv"),
            cfg.metrics,
        )
        _write_errors_csv(out_dir / "errors.csv", result.records)
        analyze(result.records, list(cfg.procedures), list(cfg.metrics), out_dir)
        timings["analyze"] = time.perf_counter() - t0
    except Exception as exc:
        _write_manifest(out_dir, cfg, timings, "FAILED", stage, str(exc))
        raise StageFailure(stage, exc) from exc
    _write_manifest(out_dir, cfg, timings, "ok")
    return result


# ---------------------------------------------------------------------------
# report rendering

def render_report(out_dir: Path) -> str:
    """Markdown summary of medians.csv in the shape of the error tables."""
    medians_path = Path(out_dir) / "medians.csv"
    if not medians_path.exists():
        raise FileNotFoundError(f"required file not found: {medians_path} (run 'analyze' first)")
    rows = list(csv.reader(open(medians_path, encoding="utf-8", newline="")))
    header, body = rows[0], rows[1:]
    procs = header[2:]
    lines = []
    for metric in dict.fromkeys(r[0] for r in body):
        lines.append(f"## Median errors ({metric})")
        lines.append("")
        lines.append("| dataset | " + " | ".join(procs) + " |")
        lines.append("|" + "---|" * (len(procs) + 1))
        for r in body:
            if r[0] != metric:
                continue
            cells = [f"{float(v):.3f}" if v else "" for v in r[2:]]
            name = f"**{r[1]}**" if r[1] == "Median" else r[1]
            lines.append(f"| {name} | " + " | ".join(cells) + " |")
        lines.append("")
    fj = Path(out_dir) / "friedman.json"
    if fj.exists():
        data = json.loads(fj.read_text(encoding="utf-8"))
        lines.append("## Friedman average ranks")
        lines.append("")
        for metric, entry in sorted(data.items()):
            if "skipped" in entry:
                lines.append(f"- {metric}: skipped ({entry['skipped']})")
                continue
            ranked = sorted(zip(entry["procedures"], entry["avg_ranks"]), key=lambda t: t[1])
            lines.append(f"- {metric} (CD at 5% = {entry['cd_05']:.2f}): "
                         + ", ".join(f"{p}={r:.2f}" for p, r in ranked))
        lines.append("")
    return "\n".join(lines)

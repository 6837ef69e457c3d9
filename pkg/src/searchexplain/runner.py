"""Pipeline stages and the end-to-end evaluation run."""

from __future__ import annotations

import json
import logging
import platform
import time
from contextlib import ExitStack
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import RunConfig
from .dataset import DatasetSplit, read_jsonl
from .genclient import (
    ConfigError,
    GenerationRequest,
    GenerationResult,
    aggregate_inference_time,
    generate_batch,
    write_results,
)
from .metrics import (
    SynonymTable,
    bertscore,
    bleu,
    corpus_aggregate,
    load_embeddings,
    meteor_align,
    meteor_score,
    normalize_tokenize,
    rouge1,
)
from .mockserver import MockServer
from .prompts import TEMPLATE_VERSION, FormattedExample, batch_format, write_examples
from .report import ResultsRow, render_table, save_figure

log = logging.getLogger(__name__)

REPORT_FORMATS = ("markdown", "csv", "json")
REPORT_SUFFIX = {"markdown": "md", "csv": "csv", "json": "json"}


class PipelineError(Exception):
    """A fatal error tagged with the stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class SampleScore:
    record_id: int
    status: str
    rouge1_p: float | None = None
    rouge1_r: float | None = None
    rouge1_f: float | None = None
    bleu: float | None = None
    meteor: float | None = None
    meteor_matches: int | None = None
    meteor_chunks: int | None = None
    bertscore_p: float | None = None
    bertscore_r: float | None = None
    bertscore_f: float | None = None

    def metric_values(self) -> dict[str, float | None]:
        return {
            "meteor": self.meteor,
            "rouge1": self.rouge1_f,
            "bertscore": self.bertscore_f,
            "bleu": self.bleu,
        }


def load_split(config: RunConfig, name: str | None = None) -> DatasetSplit:
    path = config.dataset.split_path(name)
    try:
        return read_jsonl(path, name=name or config.dataset.split)
    except FileNotFoundError:
        raise PipelineError("dataset", f"split file not found: {path}") from None
    except ValueError as exc:
        raise PipelineError("dataset", str(exc)) from None


def limit_split(split: DatasetSplit, config: RunConfig) -> DatasetSplit:
    """Truncate to the sample limit. An explicit limit larger than the split is
    a configuration error; the default limit just caps."""
    if config.limit is not None and config.limit > len(split.records):
        raise PipelineError(
            "dataset", f"sample limit {config.limit} exceeds {split.name} split size {len(split.records)}"
        )
    return DatasetSplit(split.name, split.records[: config.effective_limit])


def format_stage(split: DatasetSplit, config: RunConfig) -> list[FormattedExample]:
    try:
        return batch_format(split, config.style, config.templates)
    except ValueError as exc:
        raise PipelineError("prompts", str(exc)) from None


def generate_stage(examples: Sequence[FormattedExample], config: RunConfig) -> list[GenerationResult]:
    gen = config.generation
    try:
        reqs = [
            GenerationRequest(
                record_id=ex.record_id,
                input_text=ex.input_text,
                max_new_tokens=gen.max_new_tokens,
                temperature=gen.temperature,
                stop_sequences=gen.stop,
            )
            for ex in examples
        ]
    except ConfigError as exc:
        raise PipelineError("generate", str(exc)) from None
    with ExitStack() as stack:
        endpoint = config.endpoint
        if config.mock is not None:
            script = config.mock
            if config.mock_reply_targets:
                script = replace(script, responses={ex.input_text: ex.target_text for ex in examples})
            server = stack.enter_context(MockServer(script))
            endpoint = replace(endpoint, base_url=server.url)
        results = generate_batch(reqs, endpoint)
    failed = sum(not r.ok for r in results)
    if failed:
        log.warning("%d of %d generations failed", failed, len(results))
    return results


def score_stage(
    examples: Sequence[FormattedExample],
    results: Sequence[GenerationResult],
    config: RunConfig,
) -> list[SampleScore]:
    metrics = config.metrics
    metrics.check()
    by_id = {r.record_id: r for r in results}
    missing = [ex.record_id for ex in examples if ex.record_id not in by_id]
    if missing:
        raise PipelineError("score", f"no generation for record {missing[0]}")
    try:
        synonyms = SynonymTable.load(metrics.synonyms) if metrics.synonyms else None
    except ValueError as exc:
        raise PipelineError("score", str(exc)) from None
    embeddings = {}
    if metrics.bertscore:
        try:
            embeddings = load_embeddings(metrics.embeddings)
        except ValueError as exc:
            raise PipelineError("score", str(exc)) from None

    scores = []
    for ex in examples:
        result = by_id[ex.record_id]
        if not result.ok:
            # failed generations count as zero rather than being dropped
            zero = 0.0
            scores.append(
                SampleScore(
                    record_id=ex.record_id,
                    status=result.status,
                    rouge1_p=zero if metrics.rouge1 else None,
                    rouge1_r=zero if metrics.rouge1 else None,
                    rouge1_f=zero if metrics.rouge1 else None,
                    bleu=zero if metrics.bleu else None,
                    meteor=zero if metrics.meteor else None,
                    meteor_matches=0 if metrics.meteor else None,
                    meteor_chunks=0 if metrics.meteor else None,
                    bertscore_p=zero if metrics.bertscore else None,
                    bertscore_r=zero if metrics.bertscore else None,
                    bertscore_f=zero if metrics.bertscore else None,
                )
            )
            continue
        cand = normalize_tokenize(result.output_text)
        ref = normalize_tokenize(ex.target_text)
        fields: dict = {"record_id": ex.record_id, "status": result.status}
        if metrics.rouge1:
            r1 = rouge1(cand, ref)
            fields.update(rouge1_p=r1.precision, rouge1_r=r1.recall, rouge1_f=r1.f)
        if metrics.bleu:
            fields["bleu"] = bleu(cand, ref, metrics.bleu_max_n)
        if metrics.meteor:
            alignment = meteor_align(cand, ref, synonyms)
            fields.update(
                meteor=meteor_score(alignment, len(cand), len(ref)),
                meteor_matches=len(alignment.pairs),
                meteor_chunks=alignment.chunk_count,
            )
        if metrics.bertscore:
            try:
                c_emb = embeddings[(ex.record_id, "candidate")]
                r_emb = embeddings[(ex.record_id, "reference")]
            except KeyError as exc:
                raise PipelineError(
                    "score", f"embedding file has no {exc.args[0][1]} entry for record {ex.record_id}"
                ) from None
            if list(c_emb.tokens) != cand:
                log.warning("record %d: candidate embedding tokens differ from the generation", ex.record_id)
            try:
                bs = bertscore(c_emb, r_emb)
            except ValueError as exc:
                raise PipelineError("score", f"record {ex.record_id}: {exc}") from None
            fields.update(bertscore_p=bs.precision, bertscore_r=bs.recall, bertscore_f=bs.f)
        scores.append(SampleScore(**fields))
    return scores


def write_scores(scores: Sequence[SampleScore], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in scores:
            fh.write(json.dumps(asdict(s), sort_keys=True))
            fh.write("\n")


def read_scores(path: Path) -> list[SampleScore]:
    with open(path, encoding="utf-8") as fh:
        return [SampleScore(**json.loads(line)) for line in fh if line.strip()]


def results_row(
    scores: Sequence[SampleScore], results: Sequence[GenerationResult], config: RunConfig
) -> ResultsRow:
    try:
        means = corpus_aggregate([s.metric_values() for s in scores])
    except ValueError as exc:
        raise PipelineError("score", str(exc)) from None
    return ResultsRow(
        label=config.label,
        architecture=config.architecture,
        parameters=config.parameters,
        meteor=means.get("meteor"),
        rouge1=means.get("rouge1"),
        bertscore=means.get("bertscore"),
        bleu=means.get("bleu"),
        inference_time=aggregate_inference_time(results),
        sample_count=len(scores),
        training_time=config.training_time,
    )


def write_reports(rows: Sequence[ResultsRow], out_dir: Path, stem: str = "results") -> list[Path]:
    paths = []
    for fmt in REPORT_FORMATS:
        path = out_dir / f"{stem}.{REPORT_SUFFIX[fmt]}"
        path.write_text(render_table(rows, fmt), encoding="utf-8")
        paths.append(path)
    paths.append(save_figure(rows, out_dir / f"{stem}.png"))
    return paths


def write_manifest(config: RunConfig, out_dir: Path, counts: dict, endpoint_identity: str) -> Path:
    manifest = {
        "tool": "searchexplain",
        "version": __version__,
        "python": platform.python_version(),
        "config_source": str(config.source) if config.source else None,
        "config_sha256": config.digest(),
        "config": config.to_dict(),
        "seed": config.seed,
        "prompt": {
            "style": config.style.value,
            "template": config.templates.get(config.style),
            "template_version": TEMPLATE_VERSION,
        },
        "endpoint": endpoint_identity,
        "counts": counts,
        "created_unix": int(time.time()),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def endpoint_identity(config: RunConfig) -> str:
    if config.mock is not None:
        return f"mock:{config.mock.mode}/{config.endpoint.model_id}"
    return f"{config.endpoint.base_url}/{config.endpoint.model_id}"


def run_eval(config: RunConfig) -> ResultsRow:
    """Dataset -> prompts -> generations -> scores -> reports, in *config.out*."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    config.metrics.check()

    split = limit_split(load_split(config), config)
    examples = format_stage(split, config)
    write_examples(examples, out / "prompts.jsonl")
    log.info("formatted %d examples (%s)", len(examples), config.style.value)

    results = generate_stage(examples, config)
    write_results(results, out / "generations.jsonl")

    scores = score_stage(examples, results, config)
    write_scores(scores, out / "scores.jsonl")

    row = results_row(scores, results, config)
    write_reports([row], out)
    (out / "row.json").write_text(json.dumps(row.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(
        config,
        out,
        {
            "formatted": len(examples),
            "generated": len(results),
            "failed": sum(not r.ok for r in results),
            "scored": len(scores),
        },
        endpoint_identity(config),
    )
    return row

"""Command-line entry point.

Every pipeline subcommand reads ``--config`` and lets flags override it.
Exit status: 0 success, 1 pipeline failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_config
from .dataset import build_dataset
from .dump import DumpError
from .genclient import ConfigError, read_results, write_results
from .mockserver import MODES, MockScript, MockServer
from .prompts import read_examples, write_examples
from .report import ReportError, load_rows, render_table
from .runner import (
    REPORT_FORMATS,
    PipelineError,
    endpoint_identity,
    format_stage,
    generate_stage,
    limit_split,
    load_split,
    results_row,
    run_eval,
    score_stage,
    write_manifest,
    write_reports,
    write_scores,
)

log = logging.getLogger("searchexplain")

STYLE_CHOICES = ("natural", "instruction", "sep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: usage error: {message}\n")


def _common(config_required: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", required=config_required, type=Path, help="run config (TOML)")
    p.add_argument("--limit", type=int, help="number of test samples (default 1000)")
    p.add_argument("--style", choices=STYLE_CHOICES, help="prompt representation")
    p.add_argument("--endpoint", help="base URL of an OpenAI-compatible server")
    p.add_argument("--model", help="model id sent to the endpoint")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=REPORT_FORMATS, default="markdown", help="table printed to stdout")
    p.add_argument("--seed", type=int, help="split seed (unsigned 64-bit)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="searchexplain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("build-dataset", parents=[common], help="dump -> train/dev/test JSONL")
    p.add_argument("--dump", type=Path, help="MediaWiki XML dump (.xml, .xml.gz, .xml.bz2)")

    sub.add_parser("format-prompts", parents=[common], help="test split -> prompts.jsonl")

    p = sub.add_parser("generate", parents=[common], help="prompts.jsonl -> generations.jsonl")
    p.add_argument("--prompts", type=Path, help="formatted prompts (default <out>/prompts.jsonl)")

    p = sub.add_parser("score", parents=[common], help="generations -> scores.jsonl + results")
    p.add_argument("--prompts", type=Path)
    p.add_argument("--generations", type=Path)

    p = sub.add_parser("report", parents=[_common(config_required=False)], help="render result rows")
    p.add_argument("rows", nargs="+", type=Path, help="row.json or results.json files")

    sub.add_parser("run", parents=[common], help="full pipeline")

    p = sub.add_parser("mock-server", parents=[_common(config_required=False)], help="serve the mock endpoint")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--text", help="constant reply for fixed-text mode")
    p.add_argument("--responses", type=Path, help="prompts.jsonl whose targets answer matching inputs")
    p.add_argument("--fail-times", type=int)
    p.add_argument("--fail-status", type=int)
    p.add_argument("--delay", type=float, help="seconds to sleep per request in delay mode")
    return parser


def _config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    return cfg.with_overrides(
        limit=args.limit,
        style=args.style,
        endpoint=args.endpoint,
        model=args.model,
        out=str(args.out) if args.out else None,
        seed=args.seed,
    )


def cmd_build_dataset(args, cfg: RunConfig) -> int:
    dump = args.dump or cfg.dataset.dump
    if dump is None:
        raise ConfigError("no dump given: set [dataset] dump or pass --dump")
    out = args.out or cfg.dataset.dir
    if out is None:
        raise ConfigError("no dataset directory: set [dataset] dir or pass --out")
    try:
        card = build_dataset(dump, out, cfg.split_config(), dump_id=cfg.dataset.dump_id)
    except (DumpError, OSError) as exc:
        raise PipelineError("ingest", str(exc)) from None
    except ValueError as exc:
        raise PipelineError("dataset", str(exc)) from None
    print(json.dumps(card["counts"], sort_keys=True))
    return 0


def cmd_format_prompts(args, cfg: RunConfig) -> int:
    split = limit_split(load_split(cfg), cfg)
    examples = format_stage(split, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_examples(examples, cfg.out / "prompts.jsonl")
    print(f"{len(examples)} prompts -> {cfg.out / 'prompts.jsonl'}")
    return 0


def _read_prompts(path: Path):
    try:
        return read_examples(path)
    except FileNotFoundError:
        raise PipelineError("prompts", f"prompt file not found: {path}") from None
    except ValueError as exc:
        raise PipelineError("prompts", str(exc)) from None


def cmd_generate(args, cfg: RunConfig) -> int:
    examples = _read_prompts(args.prompts or cfg.out / "prompts.jsonl")
    results = generate_stage(examples, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_results(results, cfg.out / "generations.jsonl")
    failed = sum(not r.ok for r in results)
    print(f"{len(results)} generations ({failed} failed) -> {cfg.out / 'generations.jsonl'}")
    return 0


def cmd_score(args, cfg: RunConfig) -> int:
    examples = _read_prompts(args.prompts or cfg.out / "prompts.jsonl")
    gen_path = args.generations or cfg.out / "generations.jsonl"
    try:
        results = read_results(gen_path)
    except FileNotFoundError:
        raise PipelineError("score", f"generation file not found: {gen_path}") from None
    except ValueError as exc:
        raise PipelineError("score", str(exc)) from None
    scores = score_stage(examples, results, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_scores(scores, cfg.out / "scores.jsonl")
    row = results_row(scores, results, cfg)
    (cfg.out / "row.json").write_text(json.dumps(row.to_json(), indent=2, sort_keys=True) + "\n")
    write_reports([row], cfg.out)
    write_manifest(
        cfg, cfg.out, {"formatted": len(examples), "generated": len(results), "scored": len(scores)},
        endpoint_identity(cfg),
    )
    print(render_table([row], args.format), end="")
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    try:
        rows = load_rows(args.rows)
    except FileNotFoundError as exc:
        raise PipelineError("report", f"results file not found: {exc.filename}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise PipelineError("report", f"bad results file: {exc}") from None
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_reports(rows, args.out)
    print(render_table(rows, args.format), end="")
    return 0


def cmd_run(args, cfg: RunConfig) -> int:
    row = run_eval(cfg)
    print(render_table([row], args.format), end="")
    return 0


def cmd_mock_server(args, cfg: RunConfig) -> int:
    script = cfg.mock or MockScript()
    overrides = {
        "mode": args.mode,
        "text": args.text,
        "fail_times": args.fail_times,
        "fail_status": args.fail_status,
        "delay": args.delay,
    }
    script = replace(script, **{k: v for k, v in overrides.items() if v is not None})
    if args.responses is not None:
        examples = _read_prompts(args.responses)
        script = replace(script, responses={ex.input_text: ex.target_text for ex in examples})
    server = MockServer(script, host=args.host, port=args.port)
    print(f"mock endpoint ({script.mode}) listening on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


COMMANDS = {
    "build-dataset": cmd_build_dataset,
    "format-prompts": cmd_format_prompts,
    "generate": cmd_generate,
    "score": cmd_score,
    "report": cmd_report,
    "run": cmd_run,
    "mock-server": cmd_mock_server,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"searchexplain {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"searchexplain {args.command}: error {exc}", file=sys.stderr)
        return 1
    except ReportError as exc:
        print(f"searchexplain {args.command}: error [report] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration: a TOML file with one table per pipeline stage.

Relative paths are resolved against the config file's directory. Command-line
flags are applied on top with :meth:`RunConfig.with_overrides`.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataset import SplitConfig
from .genclient import ConfigError, EndpointConfig, RetryPolicy
from .mockserver import MockScript
from .prompts import PromptStyle, TemplateSet

DEFAULT_LIMIT = 1000


@dataclass(frozen=True)
class DatasetSection:
    dir: Path | None = None
    split: str = "test"
    dump: Path | None = None
    dump_id: str | None = None
    train_fraction: str = "0.8"
    dev_fraction: str = "0.1"
    test_fraction: str = "0.1"

    def split_path(self, name: str | None = None) -> Path:
        if self.dir is None:
            raise ConfigError("[dataset] dir is not set")
        return self.dir / f"{name or self.split}.jsonl"


@dataclass(frozen=True)
class MetricsSection:
    rouge1: bool = True
    bleu: bool = True
    meteor: bool = True
    bertscore: bool = False
    embeddings: Path | None = None
    synonyms: Path | None = None
    bleu_max_n: int = 4

    def check(self) -> None:
        if self.bertscore and self.embeddings is None:
            raise ConfigError("BERTScore is enabled but [metrics] embeddings path is not set")
        if self.bertscore and not self.embeddings.exists():
            raise ConfigError(f"BERTScore embedding file not found: {self.embeddings}")
        if self.synonyms is not None and not self.synonyms.exists():
            raise ConfigError(f"synonym table not found: {self.synonyms}")


@dataclass(frozen=True)
class GenerationSection:
    max_new_tokens: int = 32
    temperature: float = 0.0
    stop: tuple[str, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    label: str = "model"
    architecture: str = "-"
    parameters: str = "-"
    training_time: float | None = None
    out: Path = Path("runs/latest")
    limit: int | None = None
    seed: int = 0
    style: PromptStyle = PromptStyle.NATURAL
    templates: TemplateSet = field(default_factory=TemplateSet)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    endpoint: EndpointConfig = field(default_factory=lambda: EndpointConfig("http://127.0.0.1:8000", "default"))
    generation: GenerationSection = field(default_factory=GenerationSection)
    mock: MockScript | None = None
    mock_reply_targets: bool = False
    metrics: MetricsSection = field(default_factory=MetricsSection)
    source: Path | None = None

    @property
    def effective_limit(self) -> int:
        return DEFAULT_LIMIT if self.limit is None else self.limit

    def split_config(self) -> SplitConfig:
        ds = self.dataset
        return SplitConfig(
            Fraction(ds.train_fraction), Fraction(ds.dev_fraction), Fraction(ds.test_fraction), self.seed
        )

    def with_overrides(
        self,
        limit: int | None = None,
        style: str | None = None,
        endpoint: str | None = None,
        model: str | None = None,
        out: str | None = None,
        seed: int | None = None,
    ) -> "RunConfig":
        cfg = self
        if limit is not None:
            if limit < 1:
                raise ConfigError("--limit must be positive")
            cfg = replace(cfg, limit=limit)
        if style is not None:
            cfg = replace(cfg, style=PromptStyle.parse(style))
        if endpoint is not None:
            # an explicit endpoint replaces the in-process mock
            cfg = replace(cfg, endpoint=replace(cfg.endpoint, base_url=endpoint), mock=None)
        if model is not None:
            cfg = replace(cfg, endpoint=replace(cfg.endpoint, model_id=model))
        if out is not None:
            cfg = replace(cfg, out=Path(out))
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = replace(cfg, seed=seed)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        """JSON-safe view used for the manifest and its hash."""

        def clean(value):
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, PromptStyle):
                return value.value
            if isinstance(value, dict):
                return {str(k): clean(v) for k, v in value.items()}
            if isinstance(value, (list, tuple)):
                return [clean(v) for v in value]
            return value

        return {
            "run": {
                "label": self.label,
                "architecture": self.architecture,
                "parameters": self.parameters,
                "training_time": self.training_time,
                "out": str(self.out),
                "limit": self.effective_limit,
                "seed": self.seed,
            },
            "dataset": clean(asdict(self.dataset)),
            "prompt": {"style": self.style.value, "templates": self.templates.as_dict()},
            "endpoint": {
                "base_url": self.endpoint.base_url,
                "model": self.endpoint.model_id,
                "api_key_env": self.endpoint.api_key_env,
                "timeout": self.endpoint.timeout,
                "max_concurrent": self.endpoint.max_concurrent,
                "retry": asdict(self.endpoint.retry),
                **clean(asdict(self.generation)),
            },
            "mock": None
            if self.mock is None
            else {**clean(asdict(self.mock)), "reply": "targets" if self.mock_reply_targets else None},
            "metrics": clean(asdict(self.metrics)),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_KNOWN = {
    "run": {"label", "architecture", "parameters", "training_time", "out", "limit", "seed"},
    "dataset": {"dir", "split", "dump", "dump_id", "train_fraction", "dev_fraction", "test_fraction"},
    "prompt": {"style", "templates"},
    "endpoint": {
        "base_url", "model", "api_key_env", "timeout", "max_concurrent",
        "max_new_tokens", "temperature", "stop", "retry",
    },
    "mock": {"mode", "text", "reply", "fail_times", "fail_status", "fail_matching", "delay"},
    "metrics": {"rouge1", "bleu", "meteor", "bertscore", "embeddings", "synonyms", "bleu_max_n"},
}


def _check_keys(data: dict) -> None:
    for section, body in data.items():
        if section not in _KNOWN:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        unknown = set(body) - _KNOWN[section]
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in [{section}]")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    _check_keys(data)
    base = path.resolve().parent

    def p(value) -> Path | None:
        if value is None:
            return None
        value = Path(value)
        return value if value.is_absolute() else base / value

    run = data.get("run", {})
    ds = data.get("dataset", {})
    prompt = data.get("prompt", {})
    ep = data.get("endpoint", {})
    mk = data.get("mock")
    mt = data.get("metrics", {})

    try:
        retry = RetryPolicy(**ep.get("retry", {}))
        endpoint = EndpointConfig(
            base_url=ep.get("base_url", "http://127.0.0.1:8000"),
            model_id=ep.get("model", "default"),
            api_key_env=ep.get("api_key_env"),
            timeout=float(ep.get("timeout", 60.0)),
            max_concurrent=int(ep.get("max_concurrent", 4)),
            retry=retry,
        )
        generation = GenerationSection(
            max_new_tokens=int(ep.get("max_new_tokens", 32)),
            temperature=float(ep.get("temperature", 0.0)),
            stop=tuple(ep.get("stop", ())),
        )
        mock = None
        reply_targets = False
        if mk is not None:
            reply = mk.get("reply")
            if reply not in (None, "targets"):
                raise ConfigError(f"[mock] reply must be 'targets', got {reply!r}")
            reply_targets = reply == "targets"
            mock = MockScript(
                mode=mk.get("mode", "echo"),
                text=mk.get("text"),
                fail_times=int(mk.get("fail_times", 0)),
                fail_status=int(mk.get("fail_status", 429)),
                fail_matching=mk.get("fail_matching"),
                delay=float(mk.get("delay", 0.0)),
            )
        limit = run.get("limit")
        cfg = RunConfig(
            label=str(run.get("label", "model")),
            architecture=str(run.get("architecture", "-")),
            parameters=str(run.get("parameters", "-")),
            training_time=run.get("training_time"),
            out=p(run.get("out", "runs/latest")),
            limit=None if limit is None else int(limit),
            seed=int(run.get("seed", 0)),
            style=PromptStyle.parse(prompt.get("style", "natural")),
            templates=TemplateSet.from_mapping(prompt.get("templates")),
            dataset=DatasetSection(
                dir=p(ds.get("dir")),
                split=ds.get("split", "test"),
                dump=p(ds.get("dump")),
                dump_id=ds.get("dump_id"),
                train_fraction=str(ds.get("train_fraction", "0.8")),
                dev_fraction=str(ds.get("dev_fraction", "0.1")),
                test_fraction=str(ds.get("test_fraction", "0.1")),
            ),
            endpoint=endpoint,
            generation=generation,
            mock=mock,
            mock_reply_targets=reply_targets,
            metrics=MetricsSection(
                rouge1=bool(mt.get("rouge1", True)),
                bleu=bool(mt.get("bleu", True)),
                meteor=bool(mt.get("meteor", True)),
                bertscore=bool(mt.get("bertscore", False)),
                embeddings=p(mt.get("embeddings")),
                synonyms=p(mt.get("synonyms")),
                bleu_max_n=int(mt.get("bleu_max_n", 4)),
            ),
            source=path,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None
    if cfg.limit is not None and cfg.limit < 1:
        raise ConfigError("[run] limit must be positive")
    return cfg

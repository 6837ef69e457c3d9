"""Client for OpenAI-compatible chat-completions endpoints.

Requests run on a bounded thread pool; each one is retried with exponential
backoff on rate limiting, server errors and transport failures.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import httpx

log = logging.getLogger(__name__)

OK = "ok"
FAILED = "failed"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    base_backoff: float = 0.5
    multiplier: float = 2.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError("retry.max_attempts must be >= 1")
        if self.base_backoff < 0 or self.multiplier < 1:
            raise ConfigError("retry backoff must be non-negative with multiplier >= 1")

    def delay(self, attempt: int) -> float:
        """Sleep before retry number *attempt* (1 = first retry)."""
        return self.base_backoff * self.multiplier ** (attempt - 1)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_id: str
    api_key_env: str | None = None
    timeout: float = 60.0
    max_concurrent: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ConfigError("max_concurrent must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    @property
    def url(self) -> str:
        base = self.base_url.rstrip("/")
        if base.endswith("/v1"):
            base = base[:-3]
        return f"{base}/v1/chat/completions"

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env) if self.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers


@dataclass(frozen=True)
class GenerationRequest:
    record_id: int
    input_text: str
    max_new_tokens: int = 32
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be >= 1")
        if self.temperature < 0:
            raise ConfigError("temperature must be non-negative")

    def payload(self, model_id: str) -> dict:
        body = {
            "model": model_id,
            "messages": [{"role": "user", "content": self.input_text}],
            "max_tokens": self.max_new_tokens,
            "temperature": self.temperature,
        }
        if self.stop_sequences:
            body["stop"] = list(self.stop_sequences)
        return body


@dataclass(frozen=True)
class GenerationResult:
    record_id: int
    output_text: str
    latency: float
    status: str = OK
    reason: str | None = None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    attempts: int = 1
    backoffs: tuple[float, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status == OK

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "status": self.status,
            "reason": self.reason,
            "output_text": self.output_text,
            "latency": self.latency,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "attempts": self.attempts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GenerationResult":
        return cls(
            record_id=int(obj["record_id"]),
            output_text=obj.get("output_text") or "",
            latency=float(obj["latency"]),
            status=obj["status"],
            reason=obj.get("reason"),
            prompt_tokens=obj.get("prompt_tokens"),
            completion_tokens=obj.get("completion_tokens"),
            attempts=int(obj.get("attempts", 1)),
        )


class _Retryable(Exception):
    pass


class _Fatal(Exception):
    pass


def _parse_response(resp: httpx.Response) -> tuple[str, int | None, int | None]:
    try:
        body = resp.json()
        content = body["choices"][0]["message"]["content"]
        if not isinstance(content, str):
            raise TypeError("content is not a string")
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise _Fatal(f"protocol: {exc}") from None
    usage = body.get("usage") or {}
    return content, usage.get("prompt_tokens"), usage.get("completion_tokens")


def _attempt(client: httpx.Client, req: GenerationRequest, config: EndpointConfig):
    try:
        resp = client.post(config.url, json=req.payload(config.model_id), headers=config.headers())
    except httpx.TimeoutException as exc:
        raise _Retryable(f"timeout: {exc}") from None
    except httpx.TransportError as exc:
        raise _Retryable(f"connect: {exc}") from None
    if resp.status_code in (401, 403):
        raise _Fatal(f"auth: HTTP {resp.status_code}")
    if resp.status_code == 429 or resp.status_code >= 500:
        raise _Retryable(f"http: HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise _Fatal(f"http: HTTP {resp.status_code}")
    return _parse_response(resp)


def generate(
    req: GenerationRequest,
    config: EndpointConfig,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> GenerationResult:
    """Send one request, retrying transient failures.

    Latency is client wall clock from the first attempt to the final
    response, backoff included. Failures come back as a result with
    ``status == "failed"``; nothing is raised.
    """
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=config.timeout)
    backoffs: list[float] = []
    start = time.perf_counter()
    reason = None
    attempt = 0
    try:
        for attempt in range(1, config.retry.max_attempts + 1):
            try:
                text, ptoks, ctoks = _attempt(client, req, config)
            except _Fatal as exc:
                reason = str(exc)
                break
            except _Retryable as exc:
                reason = str(exc)
                if attempt == config.retry.max_attempts:
                    break
                delay = config.retry.delay(attempt)
                log.info("record %s attempt %d failed (%s); retrying in %.3fs",
                         req.record_id, attempt, reason, delay)
                backoffs.append(delay)
                sleep(delay)
                continue
            return GenerationResult(
                record_id=req.record_id,
                output_text=text,
                latency=time.perf_counter() - start,
                prompt_tokens=ptoks,
                completion_tokens=ctoks,
                attempts=attempt,
                backoffs=tuple(backoffs),
            )
    finally:
        if own_client:
            client.close()
    log.warning("record %s failed after %d attempts: %s", req.record_id, attempt, reason)
    return GenerationResult(
        record_id=req.record_id,
        output_text="",
        latency=time.perf_counter() - start,
        status=FAILED,
        reason=reason,
        attempts=attempt,
        backoffs=tuple(backoffs),
    )


def generate_batch(
    reqs: Sequence[GenerationRequest],
    config: EndpointConfig,
    sleep: Callable[[float], None] = time.sleep,
) -> list[GenerationResult]:
    """Run *reqs* with at most ``config.max_concurrent`` in flight; results
    come back in request order."""
    if not reqs:
        return []
    limits = httpx.Limits(max_connections=config.max_concurrent,
                          max_keepalive_connections=config.max_concurrent)
    with httpx.Client(timeout=config.timeout, limits=limits) as client:
        with ThreadPoolExecutor(max_workers=config.max_concurrent) as pool:
            return list(pool.map(lambda r: generate(r, config, client, sleep), reqs))


def aggregate_inference_time(results: Sequence[GenerationResult]) -> float:
    """Total latency in seconds over successful generations."""
    return sum(r.latency for r in results if r.ok)


def write_results(results: Sequence[GenerationResult], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False))
            fh.write("\n")


def read_results(path: str | os.PathLike) -> list[GenerationResult]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(GenerationResult.from_json(json.loads(line)))
                except (KeyError, ValueError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad generation record: {exc}") from None
    return out

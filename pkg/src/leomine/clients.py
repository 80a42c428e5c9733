"""Adapters for remote sentiment and OCR services.

Every response is cached on disk, one JSON file per entry named by the
SHA-256 of the input (text or image bytes).  A fixture directory has the
same layout, so :func:`replay_fixture` can serve a whole run offline.
Credentials are read from the environment at call time and never stored.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import httpx

from ._io import content_hash
from .sentiment import SUM_TOLERANCE, SentimentScore
from .speedtest import OcrDocument

__all__ = [
    "AuthError",
    "CacheEntry",
    "ClientError",
    "DiskCache",
    "FixtureMiss",
    "ImageUnavailable",
    "MalformedResponse",
    "ProviderConfig",
    "RateLimiter",
    "RemoteOcrClient",
    "RemoteSentimentClient",
    "ReplayProvider",
    "SystemClock",
    "TransientExhausted",
    "VirtualClock",
    "remote_ocr",
    "remote_sentiment",
    "replay_fixture",
    "scores_from_payload",
]

log = logging.getLogger(__name__)


class ClientError(RuntimeError):
    pass


class AuthError(ClientError):
    pass


class MalformedResponse(ClientError):
    pass


class ImageUnavailable(ClientError):
    pass


class TransientExhausted(ClientError):
    def __init__(self, indices: Sequence[int], reason: str = ""):
        super().__init__(f"retries exhausted for items {list(indices)}: {reason}")
        self.indices = list(indices)


class FixtureMiss(ClientError):
    def __init__(self, key: str):
        super().__init__(f"no fixture entry for content hash {key}")
        self.key = key


# -- clocks and rate limiting ------------------------------------------------

class SystemClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Clock whose ``sleep`` only advances time; for tests."""

    def __init__(self, start: float = 0.0):
        self.t = start
        self.sleeps: list[float] = []

    def now(self) -> float:
        return self.t

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.sleeps.append(seconds)
            self.t += seconds


class RateLimiter:
    """At most ``rate`` requests in any half-open one-second window.

    Rates below one request per second are enforced as a minimum spacing of
    ``1 / rate`` seconds.
    """

    def __init__(self, rate: float, clock=None):
        if not rate > 0:
            raise ValueError("rate must be > 0")
        self.rate = rate
        self.clock = clock or SystemClock()
        self._limit = max(1, int(rate))
        self._spacing = 1.0 / rate if rate < 1 else 0.0
        self._issued: deque[float] = deque()
        self._lock = threading.Lock()
        self.history: list[float] = []

    def acquire(self) -> float:
        with self._lock:
            while True:
                now = self.clock.now()
                while self._issued and self._issued[0] <= now - 1.0:
                    self._issued.popleft()
                wait = 0.0
                if len(self._issued) >= self._limit:
                    wait = self._issued[0] + 1.0 - now
                if self._spacing and self.history:
                    wait = max(wait, self.history[-1] + self._spacing - now)
                if wait <= 0:
                    break
                self.clock.sleep(wait)
            self._issued.append(now)
            self.history.append(now)
            return now


# -- cache -------------------------------------------------------------------

@dataclass(frozen=True)
class CacheEntry:
    key: str
    provider: str
    payload: Any
    stored_at: float

    def to_json(self) -> str:
        return json.dumps({"key": self.key, "provider": self.provider,
                           "payload": self.payload, "stored_at": self.stored_at},
                          sort_keys=True, ensure_ascii=False)


class DiskCache:
    """One JSON file per entry, named ``<sha256>.json``.

    Entries are immutable: a second ``put`` for an existing key is ignored.
    Readers never see partial files because writes go through a rename.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str, provider: str | None = None) -> CacheEntry | None:
        p = self.path(key)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        entry = CacheEntry(data["key"], data["provider"], data["payload"], data["stored_at"])
        if provider is not None and entry.provider != provider:
            return None
        return entry

    def _lock(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def put(self, key: str, provider: str, payload: Any, stored_at: float | None = None) -> CacheEntry:
        entry = CacheEntry(key, provider, payload, time.time() if stored_at is None else stored_at)
        with self._lock(key):
            target = self.path(key)
            if target.exists():
                return self.get(key) or entry
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(entry.to_json())
            os.replace(tmp, target)
        return entry

    def keys(self) -> list[str]:
        if not self.directory.is_dir():
            return []
        return sorted(p.stem for p in self.directory.glob("*.json"))


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    credential_env: str
    max_rps: float = 5.0
    max_retries: int = 3
    backoff_ms: float = 200.0
    cache_dir: str | None = None
    batch_size: int = 10
    provider_id: str = "remote"
    timeout_s: float = 30.0

    def __post_init__(self):
        if not self.max_rps > 0:
            raise ValueError("max_rps must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def credential(self) -> str:
        value = os.environ.get(self.credential_env)
        if not value:
            raise AuthError(f"environment variable {self.credential_env} is not set")
        return value


def scores_from_payload(payload: Any) -> SentimentScore:
    """Map a ``{"positive", "negative", "neutral"}`` object to a score,
    renormalizing when the three do not sum to one.
    """
    try:
        values = [float(payload[k]) for k in ("positive", "negative", "neutral")]
    except (KeyError, TypeError, ValueError):
        raise MalformedResponse(f"bad score object: {payload!r}") from None
    if any(v < 0 or v != v for v in values):
        raise MalformedResponse(f"negative or NaN score: {payload!r}")
    total = sum(values)
    if total <= 0:
        raise MalformedResponse(f"scores sum to {total}")
    if abs(total - 1.0) <= SUM_TOLERANCE and all(v <= 1.0 for v in values):
        return SentimentScore(*values)
    log.warning("renormalizing scores summing to %r", total)
    pos, neg = values[0] / total, values[1] / total
    return SentimentScore(pos, neg, max(0.0, 1.0 - pos - neg))


class _Transient(Exception):
    pass


class _RemoteBase:
    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None,
                 clock=None):
        self.config = config
        self.clock = clock or SystemClock()
        self.limiter = RateLimiter(config.max_rps, self.clock)
        self.cache = DiskCache(config.cache_dir) if config.cache_dir else None
        self._http = httpx.Client(transport=transport, timeout=config.timeout_s)
        self.requests_sent = 0

    def close(self):
        self._http.close()

    def _post(self, **kwargs) -> Any:
        """POST with rate limiting and exponential backoff; returns parsed JSON."""
        attempt = 0
        while True:
            self.limiter.acquire()
            self.requests_sent += 1
            headers = {"Authorization": f"Bearer {self.config.credential()}"}
            try:
                resp = self._http.post(self.config.endpoint, headers=headers, **kwargs)
                if resp.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise _Transient(f"HTTP {resp.status_code}")
                if resp.status_code >= 400:
                    raise MalformedResponse(f"HTTP {resp.status_code}")
                try:
                    return resp.json()
                except ValueError:
                    raise MalformedResponse("response is not JSON") from None
            except (_Transient, httpx.TransportError) as exc:
                if attempt >= self.config.max_retries:
                    raise _Transient(str(exc)) from exc
                self.clock.sleep(self.config.backoff_ms / 1000.0 * 2 ** attempt)
                attempt += 1


class RemoteSentimentClient(_RemoteBase):
    """Sentiment provider backed by an HTTP scoring endpoint.

    Request: ``{"documents": [{"id": "0", "text": ...}, ...]}``.
    Response: ``{"documents": [{"id": "0", "scores": {"positive": ..,
    "negative": .., "neutral": ..}}, ...]}``.
    """

    @property
    def name(self) -> str:
        return self.config.provider_id

    def score(self, texts: Sequence[str]) -> list[SentimentScore]:
        """All-or-nothing scoring; raises on the first failed batch."""
        out = self.score_texts(texts)
        failed = [i for i, r in enumerate(out) if not isinstance(r, SentimentScore)]
        if failed:
            first = out[failed[0]]
            if isinstance(first, TransientExhausted):
                raise TransientExhausted(failed, str(first))
            raise first
        return out

    def score_texts(self, texts: Sequence[str]) -> list[SentimentScore | Exception]:
        texts = list(texts)
        results: list[SentimentScore | Exception | None] = [None] * len(texts)
        misses = []
        for i, text in enumerate(texts):
            entry = self.cache.get(content_hash(text), self.name) if self.cache else None
            if entry is not None:
                results[i] = scores_from_payload(entry.payload)
            else:
                misses.append(i)
        for start in range(0, len(misses), self.config.batch_size):
            batch = misses[start:start + self.config.batch_size]
            body = {"documents": [{"id": str(i), "text": texts[i]} for i in batch]}
            try:
                data = self._post(json=body)
            except _Transient as exc:
                err = TransientExhausted(batch, str(exc))
                for i in batch:
                    results[i] = err
                continue
            docs = data.get("documents") if isinstance(data, dict) else None
            if not isinstance(docs, list):
                raise MalformedResponse("response lacks a documents list")
            by_id = {str(d.get("id")): d for d in docs if isinstance(d, dict)}
            for i in batch:
                doc = by_id.get(str(i))
                if doc is None:
                    results[i] = MalformedResponse(f"no score for item {i}")
                    continue
                try:
                    score = scores_from_payload(doc.get("scores"))
                except MalformedResponse as exc:
                    results[i] = exc
                    continue
                results[i] = score
                if self.cache:
                    payload = {"positive": score.positive, "negative": score.negative,
                               "neutral": score.neutral}
                    self.cache.put(content_hash(texts[i]), self.name, payload)
        return results  # type: ignore[return-value]


def remote_sentiment(texts: Sequence[str], config: ProviderConfig,
                     transport: httpx.BaseTransport | None = None, clock=None) -> list[SentimentScore]:
    client = RemoteSentimentClient(config, transport, clock)
    try:
        return client.score(texts)
    finally:
        client.close()


def _read_image(ref: str | Path | bytes, http: httpx.Client) -> bytes:
    if isinstance(ref, bytes):
        return ref
    ref = str(ref)
    if ref.startswith(("http://", "https://")):
        try:
            resp = http.get(ref)
        except httpx.HTTPError as exc:
            raise ImageUnavailable(f"{ref}: {exc}") from None
        if resp.status_code != 200:
            raise ImageUnavailable(f"{ref}: HTTP {resp.status_code}")
        return resp.content
    try:
        return Path(ref).read_bytes()
    except OSError as exc:
        raise ImageUnavailable(f"{ref}: {exc.strerror}") from None


def _document(payload: Any, source_id: str) -> OcrDocument:
    if not isinstance(payload, dict):
        raise MalformedResponse("OCR response is not an object")
    try:
        return OcrDocument.from_dict({**payload, "source_id": payload.get("source_id", source_id)})
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponse(f"bad OCR document: {exc}") from None


class RemoteOcrClient(_RemoteBase):
    """OCR provider: POSTs image bytes, expects ``{width, height, tokens}``."""

    @property
    def name(self) -> str:
        return self.config.provider_id

    def ocr(self, image_ref: str | Path | bytes, source_id: str | None = None) -> OcrDocument:
        if isinstance(image_ref, (str, Path)) and str(image_ref).endswith(".json"):
            p = Path(image_ref)
            if not p.exists():
                raise ImageUnavailable(f"{p}: no such fixture")
            return _document(json.loads(p.read_text(encoding="utf-8")), source_id or p.stem)
        data = _read_image(image_ref, self._http)
        key = content_hash(data)
        source_id = source_id or key
        if self.cache:
            entry = self.cache.get(key, self.name)
            if entry is not None:
                return _document(entry.payload, source_id)
        try:
            payload = self._post(content=data)
        except _Transient as exc:
            raise TransientExhausted([0], str(exc)) from None
        doc = _document(payload, source_id)
        if self.cache:
            self.cache.put(key, self.name, payload)
        return doc


def remote_ocr(image_ref, config: ProviderConfig, transport=None, clock=None,
               source_id: str | None = None) -> OcrDocument:
    client = RemoteOcrClient(config, transport, clock)
    try:
        return client.ocr(image_ref, source_id)
    finally:
        client.close()


class ReplayProvider:
    """Serves sentiment scores and OCR documents from a fixture directory only.

    Any request whose content hash has no entry raises :class:`FixtureMiss`.
    """

    name = "replay"

    def __init__(self, directory: str | Path):
        self.cache = DiskCache(directory)
        self.requests = 0

    def _payload(self, key: str) -> Any:
        self.requests += 1
        entry = self.cache.get(key)
        if entry is None:
            raise FixtureMiss(key)
        return entry.payload

    def score_texts(self, texts: Sequence[str]) -> list[SentimentScore | Exception]:
        out: list[SentimentScore | Exception] = []
        for text in texts:
            try:
                out.append(scores_from_payload(self._payload(content_hash(text))))
            except ClientError as exc:
                out.append(exc)
        return out

    def ocr(self, image_ref: str | Path | bytes, source_id: str | None = None) -> OcrDocument:
        if isinstance(image_ref, bytes):
            data = image_ref
        else:
            try:
                data = Path(image_ref).read_bytes()
            except OSError as exc:
                raise ImageUnavailable(f"{image_ref}: {exc.strerror}") from None
        key = content_hash(data)
        return _document(self._payload(key), source_id or key)


def replay_fixture(directory: str | Path) -> ReplayProvider:
    return ReplayProvider(directory)

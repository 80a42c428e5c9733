"""Synthetic OCR layouts of speed-test screenshots.

Used by the fixture generator and by the extraction robustness tests.  The
renderers place tokens the way OCR reports them for the two common app
layouts: a single result card, and a result-history table.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime

from .speedtest import OcrDocument, OcrToken

WIDTH, HEIGHT = 720, 1280


@dataclass
class PlantedReport:
    download: str  # token text as shown, e.g. "105.4"
    download_unit: str | None = "Mbps"
    upload: str | None = None
    upload_unit: str | None = "Mbps"
    latency: str | None = None
    jitter: str | None = None
    packet_loss: str | None = None
    timestamp: datetime | None = None
    provider: str | None = None
    server: str | None = None


class _Canvas:
    def __init__(self, rng: random.Random | None, jitter: float):
        self.rng = rng
        self.jitter = jitter
        self.tokens: list[OcrToken] = []

    def put(self, text: str, x: float, y: float, h: float, char_w: float = 0.6) -> OcrToken:
        w = max(len(text), 1) * h * char_w
        if self.rng is not None and self.jitter:
            amp = self.jitter * h
            x += self.rng.uniform(-amp, amp)
            y += self.rng.uniform(-amp, amp)
        tok = OcrToken(text, max(x, 0.0), max(y, 0.0), w, h)
        self.tokens.append(tok)
        return tok

    def put_centered(self, text: str, cx: float, y: float, h: float, char_w: float = 0.6) -> OcrToken:
        w = max(len(text), 1) * h * char_w
        return self.put(text, cx - w / 2, y, h, char_w)


def render_simple(source_id: str, rep: PlantedReport, rng: random.Random | None = None,
                  jitter: float = 0.0, x0: float = 60.0) -> OcrDocument:
    """Single-result card: labels above large values, inline ping/jitter/loss."""
    c = _Canvas(rng, jitter)
    col2 = x0 + 320
    c.put("SPEEDTEST", 40, 40, 28)
    if rep.timestamp is not None:
        d = c.put(rep.timestamp.strftime("%Y-%m-%d"), 40, 100, 20)
        c.put(rep.timestamp.strftime("%H:%M"), d.right + 12, 100, 20)
    c.put("DOWNLOAD", x0, 200, 24)
    if rep.upload is not None:
        c.put("UPLOAD", col2, 200, 24)
    v = c.put(rep.download, x0, 250, 60)
    if rep.download_unit:
        c.put(rep.download_unit, v.right + 12, 268, 24)
    if rep.upload is not None:
        v = c.put(rep.upload, col2, 250, 60)
        if rep.upload_unit:
            c.put(rep.upload_unit, v.right + 12, 268, 24)
    if rep.latency is not None:
        c.put("Ping", x0, 380, 24)
        v = c.put(rep.latency, x0 + 100, 380, 24)
        c.put("ms", v.right + 8, 380, 24)
    if rep.jitter is not None:
        c.put("Jitter", col2, 380, 24)
        v = c.put(rep.jitter, col2 + 100, 380, 24)
        c.put("ms", v.right + 8, 380, 24)
    if rep.packet_loss is not None:
        p = c.put("Packet", x0, 440, 24)
        c.put("Loss", p.right + 10, 440, 24)
        v = c.put(rep.packet_loss, x0 + 200, 440, 24)
        c.put("%", v.right + 8, 440, 24)
    if rep.provider is not None:
        c.put("Provider", x0, 560, 24)
        c.put(rep.provider, x0 + 160, 560, 24)
    if rep.server is not None:
        c.put("Server", x0, 620, 24)
        prev = None
        for i, word in enumerate(rep.server.split()):
            prev = c.put(word, (x0 + 160) if i == 0 else prev.right + 12, 620, 24)
    return OcrDocument(source_id, WIDTH, HEIGHT, tuple(c.tokens))


def render_table(source_id: str, rows: list[PlantedReport], rng: random.Random | None = None,
                 jitter: float = 0.0, title: str | None = "Results",
                 units: tuple[str, str, str] | None = ("Mbps", "Mbps", "ms")) -> OcrDocument:
    """Result-history list: a header of metric labels, a unit row, one row per test."""
    c = _Canvas(rng, jitter)
    if title:
        c.put(title, 40, 40, 28)
    c.put("Date", 30, 120, 22)
    centers = []
    for label, x in (("DOWNLOAD", 230), ("UPLOAD", 380), ("PING", 520)):
        tok = c.put(label, x, 120, 22)
        centers.append(x + tok.w / 2)
    if units:
        for unit, cx in zip(units, centers):
            c.put_centered(unit, cx, 152, 18)
    for i, rep in enumerate(rows):
        y = 200 + 60 * i
        if rep.timestamp is not None:
            c.put(rep.timestamp.strftime("%Y-%m-%d"), 30, y, 22)
        for text, cx in zip((rep.download, rep.upload, rep.latency), centers):
            if text is not None:
                c.put_centered(text, cx, y, 22)
    return OcrDocument(source_id, WIDTH, HEIGHT, tuple(c.tokens))


def random_planted(rng: random.Random, *, table: bool = False, with_optional: bool = True) -> PlantedReport:
    """Random but plausible values, rendered with one decimal (speeds) or integers (ms)."""
    rep = PlantedReport(
        download=f"{rng.uniform(5, 400):.1f}",
        upload=f"{rng.uniform(1, 40):.1f}",
        latency=str(rng.randint(18, 140)),
        timestamp=datetime(2022, rng.randint(1, 12), rng.randint(1, 28), rng.randint(0, 23),
                           rng.randint(0, 59)),
    )
    if not table and with_optional:
        if rng.random() < 0.6:
            rep.jitter = str(rng.randint(1, 40))
        if rng.random() < 0.3:
            rep.packet_loss = f"{rng.uniform(0.1, 3.0):.1f}"
        rep.provider = "Starlink"
        if rng.random() < 0.5:
            rep.server = rng.choice(["Seattle, WA", "Denver, CO", "London", "Frankfurt"])
    return rep

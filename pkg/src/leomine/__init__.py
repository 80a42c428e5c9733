"""Mining community discussion of a LEO broadband service: sentiment peaks,
outage spikes, popular threads and speed-test trends.
"""
__version__ = "0.1.0"

from .sentiment import SentimentScore, StrongLabel, classify_strong, score_text  # noqa: E402
from .speedtest import OcrDocument, SpeedTestReport, extract  # noqa: E402

__all__ = ["OcrDocument", "SentimentScore", "SpeedTestReport", "StrongLabel", "__version__",
           "classify_strong", "extract", "score_text"]

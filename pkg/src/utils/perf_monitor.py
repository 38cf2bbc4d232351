"""
Risk Attitude - Performance Monitor

Times named pipeline stages (load, estimate, extract, diagnose, write) and
validation suites. Keeps count, min/max/last/avg and p50/p90/p99 over a
bounded window of samples per stage.

Thread-safe: all state behind a lock.
"""

import logging
import threading
import time
from collections import deque
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)


class PerfMonitor:
    """Tracks stage timing with percentiles.

    Usage:
        monitor = PerfMonitor()

        with monitor.time_stage("estimate") as ctx:
            series = expanding_moments(returns)
            ctx.items = len(series.entries)

        stats = monitor.get_stats()
    """

    _SAMPLE_WINDOW = 1000

    def __init__(self):
        self._lock = threading.Lock()
        self._start_time = time.monotonic()
        self._stages: Dict[str, Dict[str, Any]] = {}

    def record_timing(self, stage: str, duration_ms: float, items: int = 0) -> None:
        """Record a timing sample for a stage."""
        with self._lock:
            if stage not in self._stages:
                self._stages[stage] = {
                    "count": 0, "total_ms": 0.0, "total_items": 0,
                    "last_ms": 0.0,
                    "min_ms": float("inf"), "max_ms": 0.0,
                    "samples": deque(maxlen=self._SAMPLE_WINDOW),
                }
            s = self._stages[stage]
            s["count"] += 1
            s["total_ms"] += duration_ms
            s["last_ms"] = duration_ms
            s["total_items"] += items
            s["samples"].append(duration_ms)
            if duration_ms < s["min_ms"]:
                s["min_ms"] = duration_ms
            if duration_ms > s["max_ms"]:
                s["max_ms"] = duration_ms
        logger.debug("stage %s took %.2f ms (%d items)", stage, duration_ms, items)

    def time_stage(self, stage: str) -> "TimingContext":
        return TimingContext(self, stage)

    def get_stage_stats(self, stage: str) -> Optional[Dict[str, Any]]:
        with self._lock:
            s = self._stages.get(stage)
            if not s:
                return None
            return self._format_stage(stage, s)

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "elapsed_seconds": round(time.monotonic() - self._start_time, 3),
                "stages": {name: self._format_stage(name, s) for name, s in self._stages.items()},
            }

    @staticmethod
    def _percentiles(samples: deque) -> Dict[str, float]:
        if not samples:
            return {"p50_ms": 0, "p90_ms": 0, "p99_ms": 0}
        sorted_s = sorted(samples)
        n = len(sorted_s)
        return {
            "p50_ms": round(sorted_s[n * 50 // 100], 2),
            "p90_ms": round(sorted_s[min(n * 90 // 100, n - 1)], 2),
            "p99_ms": round(sorted_s[min(n * 99 // 100, n - 1)], 2),
        }

    @staticmethod
    def _format_stage(name: str, s: Dict[str, Any]) -> Dict[str, Any]:
        count = s["count"]
        return {
            "stage": name,
            "count": count,
            "avg_ms": round(s["total_ms"] / count, 2) if count else 0,
            "min_ms": round(s["min_ms"], 2) if s["min_ms"] != float("inf") else 0,
            "max_ms": round(s["max_ms"], 2),
            "last_duration_ms": round(s["last_ms"], 2),
            "total_items": s["total_items"],
            **PerfMonitor._percentiles(s.get("samples", deque())),
        }


class TimingContext:
    """Context manager for timing one stage run."""

    def __init__(self, monitor: PerfMonitor, stage: str):
        self._monitor = monitor
        self._stage = stage
        self._start: float = 0
        self.items: int = 0
        self.elapsed_ms: float = 0.0

    def __enter__(self) -> "TimingContext":
        self._start = time.monotonic()
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        self.elapsed_ms = (time.monotonic() - self._start) * 1000
        self._monitor.record_timing(self._stage, self.elapsed_ms, self.items)

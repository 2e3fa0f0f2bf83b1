# run_stats.py
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Tuple


@dataclass
class FailedPoint:
    index: int
    reason: str
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SweepStats:
    command: str = ""
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    points_total: int = 0
    computed: int = 0
    resumed: int = 0
    failed: int = 0

    failure_reasons: Counter[str] = field(default_factory=Counter)
    failed_items: List[FailedPoint] = field(default_factory=list)

    def record_total(self, n: int) -> None:
        self.points_total += n

    def record_computed(self, n: int = 1) -> None:
        self.computed += n

    def record_resumed(self, n: int = 1) -> None:
        self.resumed += n

    def record_failure(self, index: int, reason: str, **extra: Any) -> None:
        self.failed += 1
        self.failure_reasons[reason] += 1
        if len(self.failed_items) < 80:
            self.failed_items.append(FailedPoint(index=index, reason=reason, extra=extra))

    def top_failure_reasons(self, n: int = 12) -> List[Tuple[str, int]]:
        return self.failure_reasons.most_common(n)

    @property
    def complete(self) -> bool:
        return self.failed == 0 and self.computed + self.resumed == self.points_total

    def wall_clock(self, now: Optional[datetime] = None) -> float:
        now = now or datetime.now(timezone.utc)
        return (now - self.started_at).total_seconds()

    def summary_line(self) -> str:
        dur_s = int(self.wall_clock())
        return (
            f"Run summary: command={self.command or '-'} | points={self.points_total} | "
            f"computed={self.computed} | resumed={self.resumed} | failed={self.failed} | "
            f"duration={dur_s}s"
        )

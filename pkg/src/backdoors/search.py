"""Search statistics and detection outcomes shared by the SAT and CSP detectors."""

from __future__ import annotations

import time
from dataclasses import dataclass, field


@dataclass
class SearchStats:
    nodes_expanded: int = 0
    leaves: int = 0
    max_depth: int = 0
    elapsed: float = 0.0

    def visit(self, depth: int):
        self.nodes_expanded += 1
        if depth > self.max_depth:
            self.max_depth = depth

    def to_json(self) -> dict:
        return {
            "nodes": self.nodes_expanded,
            "leaves": self.leaves,
            "max_depth": self.max_depth,
            "elapsed_ms": round(self.elapsed * 1000.0, 3),
        }


class Timer:
    def __init__(self, stats: SearchStats):
        self.stats = stats

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.stats

    def __exit__(self, *exc):
        self.stats.elapsed = time.perf_counter() - self.t0
        return False


def assignment_key(tau) -> str:
    """Stable text form of an assignment, e.g. ``"1=0,4=1"``."""
    return ",".join(f"{v}={b}" for v, b in sorted(tau.items(), key=lambda kv: str(kv[0])))


@dataclass
class DetectionOutcome:
    backdoor: frozenset | None
    stats: SearchStats
    mode: str = "strong"
    classes: list = field(default_factory=list)
    k: int | None = None
    witnesses: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.backdoor is not None

    def sorted_backdoor(self) -> list:
        if self.backdoor is None:
            return []
        return sorted(self.backdoor, key=lambda v: (isinstance(v, str), v))

    def to_json(self) -> dict:
        out = {
            "found": self.found,
            "backdoor": self.sorted_backdoor(),
            "mode": self.mode,
            "class": list(self.classes),
        }
        out.update(self.stats.to_json())
        out["witnesses"] = dict(self.witnesses)
        out.update(self.extra)
        return out

"""
Per-stage wall-clock instrumentation.
"""
import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional

import numpy as np

STAGES = ('detect', 'track', 'landmark_quality')


class StageTimer:
    """Collects latency samples for the detect / track / landmark_quality stages."""

    def __init__(self):
        self.samples: Dict[str, List[float]] = {stage: [] for stage in STAGES}

    def record(self, stage: str, seconds: float) -> None:
        if stage not in self.samples:
            raise ValueError(f"stage must be one of {list(STAGES)}")
        self.samples[stage].append(float(seconds))

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(stage, time.perf_counter() - start)

    def report(self) -> Dict[str, Dict[str, Optional[float]]]:
        return timing_probe(self.samples)


def timing_probe(samples: Dict[str, List[float]]) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Mean and percentile latency per stage in milliseconds. Stages without
    samples report count 0 and None statistics.
    """
    report = {}
    for stage in STAGES:
        values = np.asarray(samples.get(stage, []), dtype=np.float64) * 1000.0
        if values.size == 0:
            report[stage] = {'count': 0, 'mean_ms': None, 'p50_ms': None, 'p95_ms': None}
            continue
        report[stage] = {
            'count': int(values.size),
            'mean_ms': float(values.mean()),
            'p50_ms': float(np.percentile(values, 50)),
            'p95_ms': float(np.percentile(values, 95)),
        }
    return report

"""Per-epoch metric records and their JSON-lines output."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

TIMING_KEYS = ("seconds",)


@dataclass
class MetricsLog:
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def append(self, **record):
        if self.records and record.get("epoch", 0) <= self.records[-1]["epoch"]:
            raise ValueError("epochs must be appended in increasing order")
        self.records.append(record)

    def column(self, key):
        return [r[key] for r in self.records]

    def deterministic_view(self):
        """Records and summary without wall-clock fields."""
        strip = lambda d: {k: v for k, v in d.items() if k not in TIMING_KEYS
                           and not k.endswith("_seconds")}
        return [strip(r) for r in self.records], strip(self.summary)

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.jsonl", "w") as f:
            for r in self.records:
                f.write(json.dumps(r) + "\n")
        (out / "summary.json").write_text(json.dumps(self.summary, indent=2))


def read_metrics(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]

"""Named residuals with thresholds and verdicts."""

import csv
import io
import json
import math
from dataclasses import dataclass, field


@dataclass
class ReportEntry:
    name: str
    residual: float
    threshold: float
    note: str = ""
    passed: bool = None

    def __post_init__(self):
        self.residual = float(self.residual)
        self.threshold = float(self.threshold)
        if self.passed is None:
            self.passed = bool(math.isfinite(self.residual)
                               and self.residual <= self.threshold)

    def to_dict(self):
        d = {"name": self.name, "residual": self.residual,
             "threshold": self.threshold, "pass": self.passed}
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class ConsistencyReport:
    """Collection of checks; passes iff every entry passes."""

    entries: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, name, residual, threshold, note="", passed=None):
        e = ReportEntry(name, residual, threshold, note, passed)
        self.entries.append(e)
        return e

    def extend(self, other, prefix=""):
        for e in other.entries:
            self.entries.append(ReportEntry(prefix + e.name, e.residual,
                                            e.threshold, e.note, e.passed))
        return self

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def __getitem__(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def to_dict(self):
        return {"pass": self.passed, "entries": [e.to_dict() for e in self.entries],
                "meta": self.meta}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "residual", "threshold", "pass"])
        for e in self.entries:
            w.writerow([e.name, repr(e.residual), repr(e.threshold), int(e.passed)])
        return buf.getvalue()

    def table(self):
        width = max([len(e.name) for e in self.entries] + [5])
        lines = [f"{'check':<{width}}  {'residual':>11}  {'threshold':>11}  verdict"]
        for e in self.entries:
            verdict = "pass" if e.passed else "FAIL"
            lines.append(f"{e.name:<{width}}  {e.residual:11.3e}  "
                         f"{e.threshold:11.3e}  {verdict}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)

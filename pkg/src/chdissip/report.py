"""Check results and the report that aggregates them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float
    passed: bool
    location: dict[str, Any] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def upper(cls, name, residual, tol, location=None, **info) -> "Check":
        """Check that passes when ``residual <= tol``."""
        residual = float(residual)
        ok = math.isfinite(residual) and residual <= tol
        return cls(name, residual, float(tol), ok, dict(location or {}), info)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "residual": _jsonable(self.residual),
            "tol": _jsonable(self.tol),
            "passed": bool(self.passed),
            "location": {k: _jsonable(v) for k, v in self.location.items()},
            "info": {k: _jsonable(v) for k, v in self.info.items()},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Check":
        return cls(d["name"], float(d["residual"]), float(d["tol"]), bool(d["passed"]),
                   dict(d.get("location", {})), dict(d.get("info", {})))


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


class DiagnosticsReport:
    """Named checks, each present once, iterated in name order."""

    def __init__(self, checks=()):
        self._checks: dict[str, Check] = {}
        for c in checks:
            self.add(c)

    def add(self, check: Check) -> None:
        if check.name in self._checks:
            raise ValueError(f"duplicate check {check.name!r}")
        self._checks[check.name] = check

    def __getitem__(self, name: str) -> Check:
        return self._checks[name]

    def __contains__(self, name: str) -> bool:
        return name in self._checks

    def __iter__(self):
        return iter(self._checks[k] for k in sorted(self._checks))

    def __len__(self) -> int:
        return len(self._checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self._checks.values())

    def failures(self) -> list[Check]:
        return [c for c in self if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DiagnosticsReport":
        return cls(Check.from_dict(c) for c in d["checks"])

    def table(self) -> str:
        rows = [f"{'check':<28} {'status':<6} {'residual':>12} {'tol':>12}  location"]
        for c in self:
            loc = ", ".join(f"{k}={_fmt(v)}" for k, v in c.location.items())
            rows.append(f"{c.name:<28} {'PASS' if c.passed else 'FAIL':<6} "
                        f"{c.residual:>12.4e} {c.tol:>12.4e}  {loc}")
        return "\n".join(rows)

    def __repr__(self) -> str:
        return f"DiagnosticsReport(passed={self.passed}, checks={sorted(self._checks)})"


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)

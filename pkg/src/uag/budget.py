"""Enumeration budgets.

Every exhaustive routine charges a named counter before doing the work.
Exceeding a cap raises :class:`BudgetExceeded`; nothing is ever silently
truncated.  Defaults can be overridden with the ``UAG_BUDGET`` environment
variable, e.g. ``UAG_BUDGET="points=8192,subsets=1048576"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

ENV_VAR = "UAG_BUDGET"

DEFAULT_CAPS = {
    "points": 4096,  # size of one point space
    "subsets": 1 << 16,  # subsets / closed sets scanned
    "formulas": 100_000,  # formula search candidates
    "rows": 4096,  # elements of one generated power subalgebra
    "homs": 200_000,  # partial assignments explored by hom search
    "terms": 200_000,  # syntactic terms enumerated
    "tuples": 10_000_000,  # argument tuples scanned by identity checks
    "carrier": 64,  # soft cap per sort is advisory; this is the hard cap
}


class BudgetExceeded(RuntimeError):
    def __init__(self, kind: str, used: int, cap: int):
        super().__init__(f"budget exceeded: {kind} needs {used} > cap {cap}")
        self.kind = kind
        self.used = used
        self.cap = cap


def _caps_from_env() -> dict[str, int]:
    caps = dict(DEFAULT_CAPS)
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return caps
    for item in raw.split(","):
        if not item.strip():
            continue
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in caps:
            raise ValueError(f"{ENV_VAR}: unknown budget kind {key!r}")
        caps[key] = int(value)
    return caps


@dataclass
class Budget:
    caps: dict[str, int] = field(default_factory=_caps_from_env)
    used: dict[str, int] = field(default_factory=dict)

    def check(self, kind: str, amount: int) -> None:
        """Fail if a single request of ``amount`` exceeds the cap."""
        cap = self.caps[kind]
        self.used[kind] = max(self.used.get(kind, 0), amount)
        if amount > cap:
            raise BudgetExceeded(kind, amount, cap)

    def charge(self, kind: str, amount: int = 1) -> None:
        """Accumulate ``amount`` against the cap."""
        total = self.used.get(kind, 0) + amount
        self.used[kind] = total
        cap = self.caps[kind]
        if total > cap:
            raise BudgetExceeded(kind, total, cap)

    def with_caps(self, **caps: int) -> "Budget":
        merged = dict(self.caps)
        merged.update(caps)
        return Budget(caps=merged)

    def report(self) -> dict:
        return {"used": dict(sorted(self.used.items())), "cap": dict(sorted(self.caps.items()))}


def resolve(budget: Budget | None) -> Budget:
    return Budget() if budget is None else budget

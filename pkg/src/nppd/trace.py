"""Per-iteration records of a solve."""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import PrimalDualPoint

COLUMNS = ("k", "residual", "t", "theta", "psi_self", "dist_to_solution", "h_seminorm")


@dataclass
class TraceRow:
    k: int
    residual: float
    t: float | None = None
    theta: float | None = None
    psi_self: float | None = None
    dist_to_solution: float | None = None
    h_seminorm: float | None = None

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in COLUMNS)


@dataclass
class IterateTrace:
    """Header, one row per prediction ``k = 0..K``, and optionally the iterates.

    ``history[k]`` is the pair ``(u_k, r_k)`` that produced ``rows[k]``.
    """

    header: dict = field(default_factory=dict)
    rows: list[TraceRow] = field(default_factory=list)
    history: list[tuple[PrimalDualPoint, PrimalDualPoint]] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def __len__(self):
        return len(self.rows)

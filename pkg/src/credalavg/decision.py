"""Class decisions from point probabilities and probability intervals.

For a binary class, interval dominance and maximality coincide, so an
interval prediction is determinate exactly when the whole class-1 interval
sits on one side of 1/2.  Ties break cautiously: a point prediction at
exactly 0.5 goes to class 0 (absence), an interval touching 0.5 stays
indeterminate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cma_ib import ProbabilityInterval

C0 = 0
C1 = 1


@dataclass(frozen=True)
class Prediction:
    """A determinate class or the set of both classes, plus the c1 interval."""

    classes: tuple[int, ...]
    c1_interval: ProbabilityInterval

    def __post_init__(self) -> None:
        if self.classes not in ((C0,), (C1,), (C0, C1)):
            raise ValueError(f"classes must be (0,), (1,), or (0, 1), got {self.classes}")

    @property
    def determinate(self) -> bool:
        return len(self.classes) == 1

    @property
    def predicted(self) -> int | None:
        """The single predicted class, or None when indeterminate."""
        return self.classes[0] if self.determinate else None


def decide_point(p: float) -> Prediction:
    """Threshold a point probability of class 1 at 0.5 (tie goes to class 0)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    cls = C1 if p > 0.5 else C0
    return Prediction(classes=(cls,), c1_interval=ProbabilityInterval(p, p))


def decide_interval(iv: ProbabilityInterval) -> Prediction:
    """Interval-dominance decision; boundary-touching intervals stay indeterminate."""
    if iv.lo > 0.5:
        classes: tuple[int, ...] = (C1,)
    elif iv.hi < 0.5:
        classes = (C0,)
    else:
        classes = (C0, C1)
    return Prediction(classes=classes, c1_interval=iv)

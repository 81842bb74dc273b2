"""Classification of leaked Rb-87 ground-state atoms and their return to |0>.

The 5S1/2 manifold has eight sublevels (F, m_F). The qubit uses the two
m_F = 0 levels. A circularly polarized QND probe sorts the levels into five
phase-signature classes:

    qubit   {(1,0), (2,0)}
    +2      {(2,+2)}
    -2      {(2,-2)}
    A+      {(1,+1), (2,-1)}
    A-      {(1,-1), (2,+1)}

Singletons are identified by one measurement. For an ambiguous class a
selective transfer (1,+-1) -> (2,0) moves the F=1 member into the qubit class
and a second measurement tells the two apart. The atom is then routed to
(1,0) with hops that change m_F by at most one unit.

Atoms are modeled as classical hidden labels with ideal collapse.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from .circuit import Circuit, MeasureSignature, Selective
from .errors import DomainError, ValidationError
from .loss import apply_loss, insert_fresh
from .qstate import DensityMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class LevelLabel:
    F: int
    m: int

    def __post_init__(self):
        if self.F not in (1, 2) or abs(self.m) > self.F:
            raise ValidationError(f"(F={self.F}, m_F={self.m}) is not a 5S1/2 sublevel")

    def astuple(self) -> tuple[int, int]:
        return (self.F, self.m)

    def __str__(self):
        return f"({self.F},{self.m:+d})" if self.m else f"({self.F},0)"

    @property
    def is_qubit(self) -> bool:
        return self.m == 0


ALL_LEVELS = tuple(LevelLabel(F, m) for F in (1, 2) for m in range(-F, F + 1))
GROUND = LevelLabel(1, 0)
EXCITED_QUBIT = LevelLabel(2, 0)
LEAKED_LEVELS = tuple(lv for lv in ALL_LEVELS if not lv.is_qubit)


@dataclass(frozen=True)
class SignatureClass:
    class_id: int
    name: str
    members: frozenset[LevelLabel]

    @property
    def is_qubit(self) -> bool:
        return self.class_id == 0

    @property
    def resolved(self) -> bool:
        return len(self.members) == 1


def _cls(cid, name, *levels):
    return SignatureClass(cid, name, frozenset(LevelLabel(F, m) for F, m in levels))


SIGNATURE_CLASSES = (
    _cls(0, "qubit", (1, 0), (2, 0)),
    _cls(1, "+2", (2, 2)),
    _cls(2, "-2", (2, -2)),
    _cls(3, "A+", (1, 1), (2, -1)),
    _cls(4, "A-", (1, -1), (2, 1)),
)
_CLASS_OF = {lv: c for c in SIGNATURE_CLASSES for lv in c.members}

# selective transfer that splits each ambiguous class
_SPLITTER = {
    3: (LevelLabel(1, 1), EXCITED_QUBIT),
    4: (LevelLabel(1, -1), EXCITED_QUBIT),
}


def signature_of(level: LevelLabel) -> SignatureClass:
    return _CLASS_OF[level]


@dataclass(frozen=True)
class SignatureTable:
    """Optional real phase shift per signature class (class_id -> radians).

    Only the relations are checked: distinct classes read distinct values and
    the two stretched states give opposite shifts.
    """

    phases: Mapping[int, float]

    def __post_init__(self):
        if set(self.phases) != {c.class_id for c in SIGNATURE_CLASSES}:
            raise ValidationError("signature table needs one phase per class id 0..4")
        if len(set(self.phases.values())) != len(self.phases):
            raise ValidationError("signature phases must be distinct")
        if self.phases[1] != -self.phases[2] or self.phases[1] == 0:
            raise ValidationError("(2,+2) and (2,-2) must shift by opposite, non-zero phases")

    def read(self, phase: float) -> SignatureClass:
        for cid, value in self.phases.items():
            if value == phase:
                return SIGNATURE_CLASSES[cid]
        raise ValidationError(f"phase {phase} matches no signature class")


def measure_signature(level: LevelLabel, table: SignatureTable | None = None) -> SignatureClass:
    """Ideal signature measurement; routed through the phase table when one is given."""
    cls = signature_of(level)
    if table is None:
        return cls
    return table.read(table.phases[cls.class_id])


@dataclass(frozen=True)
class DisambiguationPlan:
    steps: tuple[MeasureSignature | Selective, ...] = ()

    @property
    def n_measurements(self) -> int:
        return sum(isinstance(s, MeasureSignature) for s in self.steps)

    @property
    def n_unitaries(self) -> int:
        return sum(isinstance(s, Selective) for s in self.steps)

    def to_circuit(self) -> Circuit:
        return Circuit(self.steps)

    def to_text(self) -> str:
        return self.to_circuit().to_text()

    def __add__(self, other: "DisambiguationPlan") -> "DisambiguationPlan":
        return DisambiguationPlan(self.steps + other.steps)


def transfer(level: LevelLabel, step: Selective) -> LevelLabel:
    """Effect of one selective transfer; it swaps its two levels and leaves the rest alone."""
    src, dst = LevelLabel(*step.source), LevelLabel(*step.dest)
    if level == src:
        return dst
    if level == dst:
        return src
    return level


def execute(plan: DisambiguationPlan, level: LevelLabel) -> LevelLabel:
    """Track a hidden label through a plan (measurements leave it unchanged)."""
    for step in plan.steps:
        if isinstance(step, Selective):
            level = transfer(level, step)
    return level


@dataclass(frozen=True)
class Classification:
    signature: SignatureClass
    identified: LevelLabel | None
    final_level: LevelLabel
    plan: DisambiguationPlan

    @property
    def in_qubit_subspace(self) -> bool:
        return self.identified is None


def classify(hidden: LevelLabel, table: SignatureTable | None = None) -> Classification:
    """Identify which sublevel a present atom occupies.

    A qubit-class reading stops immediately with nothing applied, so the
    qubit state is left alone and ``identified`` is None. Leaked levels are
    resolved with at most two measurements and one selective transfer.
    """
    first = measure_signature(hidden, table)
    steps: list = [MeasureSignature()]
    if first.is_qubit:
        return Classification(first, None, hidden, DisambiguationPlan(tuple(steps)))
    if first.resolved:
        (only,) = first.members
        return Classification(first, only, hidden, DisambiguationPlan(tuple(steps)))

    src, dst = _SPLITTER[first.class_id]
    sel = Selective(src.astuple(), dst.astuple())
    current = transfer(hidden, sel)
    steps += [sel, MeasureSignature()]
    second = measure_signature(current, table)
    # the F=1 member was moved into the qubit class; the F=2 member stayed put
    identified = src if second.is_qubit else next(lv for lv in first.members if lv != src)
    return Classification(first, identified, current, DisambiguationPlan(tuple(steps)))


def _route(level: LevelLabel) -> list[Selective]:
    hops = []
    while level != GROUND:
        if abs(level.m) <= 1:
            nxt = GROUND
        else:
            nxt = LevelLabel(1, level.m // 2)
        hops.append(Selective(level.astuple(), nxt.astuple()))
        level = nxt
    return hops


@dataclass(frozen=True)
class ReturnPlan:
    plan: DisambiguationPlan
    warning: str | None = None


def return_to_ground(identified: LevelLabel | None, current: LevelLabel | None = None) -> ReturnPlan:
    """Transfers bringing an identified leaked atom from ``current`` to (1,0).

    ``current`` is where the atom sits after classification (it differs from
    ``identified`` when a splitting transfer was applied) and defaults to
    ``identified``. A qubit level is not leaked: the plan is empty and a
    warning is returned.
    """
    if identified is None or identified.is_qubit:
        msg = f"{identified} is a qubit level; nothing to return"
        log.warning(msg)
        return ReturnPlan(DisambiguationPlan(), msg)
    start = identified if current is None else current
    return ReturnPlan(DisambiguationPlan(tuple(_route(start))))


@dataclass(frozen=True)
class LeakRecovery:
    classification: Classification
    returned: ReturnPlan
    final_level: LevelLabel

    @property
    def plan(self) -> DisambiguationPlan:
        return self.classification.plan + self.returned.plan


def handle_leak(
    rho: DensityMatrix, site: int, hidden: LevelLabel, table: SignatureTable | None = None
) -> tuple[DensityMatrix, LeakRecovery]:
    """Classify the atom at ``site`` and, if it leaked, bring it back to |0>.

    The leaked atom carries no qubit information, so on the register this is
    the same as losing the qubit and refilling the site with |0>; the result
    is ready for the loss-correction circuit.
    """
    if not 1 <= site:
        raise DomainError(f"sites are 1-based, got {site}")
    result = classify(hidden, table)
    if result.in_qubit_subspace:
        return rho, LeakRecovery(result, ReturnPlan(DisambiguationPlan()), hidden)
    ret = return_to_ground(result.identified, result.final_level)
    final = execute(ret.plan, result.final_level)
    if final != GROUND:
        raise RuntimeError(f"return plan ended in {final}, not {GROUND}")
    refilled = insert_fresh(apply_loss(rho, site), site).with_sites(rho.sites)
    return refilled, LeakRecovery(result, ret, final)

"""Qubit loss, QND detection and reinsertion of a fresh ground-state atom.

Loss of the atom at a site is a partial trace over its qubit. Once the QND
sweep has flagged the vacancy the conditional source fills it with an atom
in |0>. Composed, the two steps act on the lost qubit as the reset channel
with Kraus operators {|0><0|, |0><1|}.

Sites are physical lattice labels. A state whose ``sites`` is ``None`` is
treated as the full register 1..n; losing a qubit attaches explicit site
labels so a later insertion can only target the vacancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .circuit import RZ
from .errors import DomainError, ProtocolOrderError, ValidationError
from .qstate import (
    DensityMatrix,
    apply_gate,
    partial_trace,
    permute_qubits,
    tensor,
)


@dataclass(frozen=True)
class LossEvent:
    site: int
    detected: bool = True

    def __post_init__(self):
        if self.site < 1:
            raise DomainError(f"sites are 1-based, got {self.site}")


def register_sites(rho: DensityMatrix) -> tuple[int, ...]:
    return rho.sites if rho.sites is not None else tuple(range(1, rho.n_qubits + 1))


def site_position(rho: DensityMatrix, site: int) -> int:
    """Register position (1-based) of the qubit held at physical ``site``."""
    sites = register_sites(rho)
    if site not in sites:
        raise DomainError(f"site {site} is not occupied (occupied: {list(sites)})")
    return sites.index(site) + 1


def apply_loss(rho: DensityMatrix, site: int) -> DensityMatrix:
    """The atom at ``site`` leaves the lattice: its qubit is traced out."""
    pos = site_position(rho, site)
    return partial_trace(rho.with_sites(register_sites(rho)), pos)


def fresh_atom(depolarizing: float = 0.0) -> DensityMatrix:
    """State delivered by the conditional source: |0><0| mixed with I/2 at weight ``depolarizing``."""
    if not 0.0 <= depolarizing <= 1.0:
        raise DomainError(f"depolarizing parameter must be in [0, 1], got {depolarizing}")
    m = (1 - depolarizing) * np.diag([1.0, 0.0]) + depolarizing * np.eye(2) / 2
    return DensityMatrix(m)


def insert_fresh(rho: DensityMatrix, site: int, depolarizing: float = 0.0) -> DensityMatrix:
    """Fill ``site`` with a ground-state atom.

    For a state carrying site labels the site must be vacant. For an unlabeled
    state ``site`` is the register position the new qubit will occupy
    (1..n+1).
    """
    n = rho.n_qubits
    if rho.sites is None:
        if not 1 <= site <= n + 1:
            raise DomainError(f"insertion position {site} out of range 1..{n + 1}")
        pos, new_sites = site, None
    else:
        if site in rho.sites:
            raise ProtocolOrderError(f"site {site} is occupied; only a vacated site can be refilled")
        if site < 1:
            raise DomainError(f"sites are 1-based, got {site}")
        pos = sum(s < site for s in rho.sites) + 1
        new_sites = tuple(sorted(rho.sites + (site,)))
    joint = tensor(rho.with_sites(None), fresh_atom(depolarizing))
    order = list(range(1, pos)) + [n + 1] + list(range(pos, n + 1))
    return permute_qubits(joint, order).with_sites(new_sites)


def reset_kraus() -> list[np.ndarray]:
    """Kraus operators {|0><0|, |0><1|} of the reset (full amplitude damping) channel."""
    return [
        np.array([[1, 0], [0, 0]], dtype=complex),
        np.array([[0, 1], [0, 0]], dtype=complex),
    ]


def loss_reset_channel(site: int = 1, depolarizing: float = 0.0) -> Callable[[DensityMatrix], DensityMatrix]:
    """Loss of ``site`` followed by reinsertion, as a map on whole registers.

    On a single-qubit input the qubit is first joined with a |0> spectator so
    the same trace-out/insert path is exercised, and the spectator is traced
    away at the end.
    """

    def channel(rho: DensityMatrix) -> DensityMatrix:
        if rho.n_qubits == 1:
            if site != 1:
                raise DomainError("a single-qubit register only has site 1")
            joint = tensor(rho, DensityMatrix.basis("0"))
            out = insert_fresh(apply_loss(joint, 1), 1, depolarizing)
            return partial_trace(out, 2).with_sites(None)
        out = insert_fresh(apply_loss(rho, site), site, depolarizing)
        return out.with_sites(rho.sites)

    return channel


def _occupancy_items(occupancy: Mapping[int, bool] | Sequence[bool]) -> Iterable[tuple[int, bool]]:
    if isinstance(occupancy, Mapping):
        return sorted(occupancy.items())
    return enumerate(occupancy, start=1)


def qnd_sweep(occupancy: Mapping[int, bool] | Sequence[bool]) -> list[LossEvent]:
    """Flag every vacant site.

    ``occupancy`` maps site to presence, either as a dict or as a sequence
    indexed from site 1. Detection is ideal and touches no qubit state; the
    small deterministic phase it leaves on present atoms is modeled separately
    by :func:`qnd_phase`.
    """
    events = []
    for site, present in _occupancy_items(occupancy):
        if not isinstance(present, (bool, np.bool_)):
            raise ValidationError(f"occupancy of site {site} must be a bool, got {present!r}")
        if not present:
            events.append(LossEvent(int(site), detected=True))
    return events


def qnd_phase(rho: DensityMatrix, angle: float) -> DensityMatrix:
    """Deterministic relative phase left on every measured qubit by one sweep."""
    if angle == 0:
        return rho
    for q in range(1, rho.n_qubits + 1):
        rho = apply_gate(rho, RZ(q, angle))
    return rho


def compensate_qnd_phase(rho: DensityMatrix, angle: float) -> DensityMatrix:
    """Undo :func:`qnd_phase` with the opposite single-qubit rotation."""
    return qnd_phase(rho, -angle)

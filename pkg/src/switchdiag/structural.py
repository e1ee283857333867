"""Bipartite structural models and the Dulmage-Mendelsohn calculus.

The central object is :class:`StructuralModel`: a bipartite incidence
structure between equations and unknown variables, plus a map sending each
fault signal to the single equation it enters.  On top of it this module
provides maximum matching, the coarse Dulmage-Mendelsohn (DM) decomposition
into underdetermined / just-determined / overdetermined parts, the extended
decomposition of the overdetermined part into equivalence blocks, and the
fault detectability / isolability calculus those blocks induce.

All types are immutable after construction and all operations are pure
functions of their inputs, so models can be shared freely across threads.
"""

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import InputError, InternalConsistencyError, OracleBoundError

#: Largest model (by equation count) the exhaustive oracle accepts.
DEFAULT_ORACLE_BOUND = 16


def _unique(items: Iterable[str], what: str) -> tuple[str, ...]:
    out = tuple(items)
    if len(set(out)) != len(out):
        raise InputError(f"duplicate {what} identifiers: {sorted(out)}")
    return out


@dataclass(frozen=True)
class StructuralModel:
    """Equations x unknowns incidence structure with fault annotations.

    ``incidence`` maps every equation to the set of unknowns occurring in
    it; an empty set is legal and marks an equation relating only known
    signals.  ``fault_map`` sends each fault to the single equation it
    enters and must be injective.
    """

    equations: tuple[str, ...]
    unknowns: tuple[str, ...]
    incidence: Mapping[str, frozenset[str]]
    faults: tuple[str, ...] = ()
    fault_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        equations = _unique(self.equations, "equation")
        unknowns = _unique(self.unknowns, "unknown")
        faults = _unique(self.faults, "fault")
        known_eqs = set(equations)
        known_vars = set(unknowns)
        incidence = {}
        for eq, var_set in dict(self.incidence).items():
            if eq not in known_eqs:
                raise InputError(f"incidence references undeclared equation {eq!r}")
            incidence[eq] = frozenset(var_set)
        for eq in equations:
            incidence.setdefault(eq, frozenset())
            stray = incidence[eq] - known_vars
            if stray:
                raise InputError(f"equation {eq!r} references undeclared unknowns {sorted(stray)}")
        fault_map = dict(self.fault_map)
        if set(fault_map) != set(faults):
            raise InputError("fault_map must be total on the declared faults")
        for f, eq in fault_map.items():
            if eq not in known_eqs:
                raise InputError(f"fault {f!r} mapped to undeclared equation {eq!r}")
        if len(set(fault_map.values())) != len(fault_map):
            raise InputError("fault_map must be injective (at most one fault per equation)")
        object.__setattr__(self, "equations", equations)
        object.__setattr__(self, "unknowns", unknowns)
        object.__setattr__(self, "incidence", incidence)
        object.__setattr__(self, "faults", faults)
        object.__setattr__(self, "fault_map", fault_map)

    @classmethod
    def from_incidence(
        cls,
        incidence: Mapping[str, Iterable[str]],
        faults: Mapping[str, str] | None = None,
        unknowns: Iterable[str] | None = None,
    ) -> "StructuralModel":
        """Build a model from an equation -> unknowns mapping.

        ``faults`` maps fault names to equations.  When ``unknowns`` is not
        given, the sorted union of all referenced unknowns is used.
        """
        faults = dict(faults or {})
        if unknowns is None:
            unknowns = sorted(set().union(*incidence.values())) if incidence else []
        return cls(
            equations=tuple(incidence),
            unknowns=tuple(unknowns),
            incidence={e: frozenset(v) for e, v in incidence.items()},
            faults=tuple(faults),
            fault_map=faults,
        )

    @cached_property
    def _equations_of_unknown(self) -> dict[str, tuple[str, ...]]:
        rev: dict[str, list[str]] = {x: [] for x in self.unknowns}
        for eq in self.equations:
            for x in self.incidence[eq]:
                rev[x].append(eq)
        return {x: tuple(eqs) for x, eqs in rev.items()}

    def remove_equation(self, equation: str) -> "StructuralModel":
        """Return the model without ``equation`` (and without faults on it)."""
        if equation not in self.incidence:
            raise InputError(f"unknown equation {equation!r}")
        keep_faults = tuple(f for f in self.faults if self.fault_map[f] != equation)
        return StructuralModel(
            equations=tuple(e for e in self.equations if e != equation),
            unknowns=self.unknowns,
            incidence={e: v for e, v in self.incidence.items() if e != equation},
            faults=keep_faults,
            fault_map={f: self.fault_map[f] for f in keep_faults},
        )


@dataclass(frozen=True)
class Matching:
    """A set of (equation, unknown) pairs, each vertex used at most once."""

    pairs: frozenset[tuple[str, str]]

    @property
    def size(self) -> int:
        return len(self.pairs)

    def equation_to_unknown(self) -> dict[str, str]:
        return {e: x for e, x in self.pairs}

    def unknown_to_equation(self) -> dict[str, str]:
        return {x: e for e, x in self.pairs}


class PartPair(NamedTuple):
    equations: frozenset[str]
    unknowns: frozenset[str]


@dataclass(frozen=True)
class DmDecomposition:
    """Coarse DM partition plus the fine blocks of the overdetermined part.

    ``under``/``just``/``over`` hold the equation and unknown sets of the
    three coarse parts.  ``fine_blocks`` partitions the overdetermined
    equations: two equations share a block if and only if removing either
    one expels the other from the overdetermined part.
    """

    under: PartPair
    just: PartPair
    over: PartPair
    fine_blocks: tuple[frozenset[str], ...]


@dataclass(frozen=True)
class IsolabilityReport:
    """Detectability and the partition of detectable faults.

    Two faults share a cell of ``non_isolable_partition`` exactly when
    neither is structurally isolable from the other; singleton cells mark
    uniquely isolable faults.
    """

    detectable: frozenset[str]
    non_isolable_partition: tuple[frozenset[str], ...]
    non_detectable: frozenset[str]

    def __post_init__(self):
        covered: set[str] = set()
        for cell in self.non_isolable_partition:
            if covered & cell:
                raise InternalConsistencyError("partition cells overlap")
            covered |= cell
        if covered != set(self.detectable):
            raise InternalConsistencyError("partition does not cover the detectable faults")
        if self.detectable & self.non_detectable:
            raise InternalConsistencyError("detectable and non-detectable sets overlap")

    def cell_of(self, fault: str) -> frozenset[str]:
        for cell in self.non_isolable_partition:
            if fault in cell:
                return cell
        raise InputError(f"fault {fault!r} is not detectable in this report")


@dataclass(frozen=True)
class IsolabilityMatrix:
    """Boolean non-isolability matrix over an ordered fault list.

    ``entries[i][j]`` is True when fault ``i`` is NOT isolable from fault
    ``j``; the diagonal is always True and an identity matrix means full
    isolability.
    """

    faults: tuple[str, ...]
    entries: tuple[tuple[bool, ...], ...]

    @property
    def is_identity(self) -> bool:
        return all(
            entry == (i == j)
            for i, row in enumerate(self.entries)
            for j, entry in enumerate(row)
        )


def _augment(model: StructuralModel, eq: str, matched_to: dict[str, str], seen: set[str]) -> bool:
    # Classic augmenting-path step; sorted candidates keep the result
    # deterministic for a fixed equation order.
    for x in sorted(model.incidence[eq]):
        if x in seen:
            continue
        seen.add(x)
        holder = matched_to.get(x)
        if holder is None or _augment(model, holder, matched_to, seen):
            matched_to[x] = eq
            return True
    return False


def _matching_maps(model: StructuralModel) -> tuple[dict[str, str], dict[str, str]]:
    matched_to: dict[str, str] = {}
    for eq in model.equations:
        _augment(model, eq, matched_to, set())
    eq_match = {e: x for x, e in matched_to.items()}
    return eq_match, matched_to


def max_matching(model: StructuralModel) -> Matching:
    """Maximum bipartite matching between equations and unknowns.

    Deterministic for a fixed input ordering: equations are processed in
    declaration order, candidate unknowns in lexicographic order.
    """
    eq_match, _ = _matching_maps(model)
    return Matching(frozenset(eq_match.items()))


class _Coarse(NamedTuple):
    under: PartPair
    just: PartPair
    over: PartPair


def _coarse_parts(model: StructuralModel) -> _Coarse:
    eq_match, var_match = _matching_maps(model)

    # Overdetermined part: everything alternating-reachable from equations
    # left exposed by a maximum matching.
    over_eqs = {e for e in model.equations if e not in eq_match}
    over_vars: set[str] = set()
    stack = list(over_eqs)
    while stack:
        eq = stack.pop()
        for x in model.incidence[eq]:
            if x in over_vars:
                continue
            over_vars.add(x)
            nxt = var_match.get(x)
            if nxt is not None and nxt not in over_eqs:
                over_eqs.add(nxt)
                stack.append(nxt)

    # Underdetermined part: dual sweep from exposed unknowns.
    under_vars = {x for x in model.unknowns if x not in var_match}
    under_eqs: set[str] = set()
    rev = model._equations_of_unknown
    stack = list(under_vars)
    while stack:
        x = stack.pop()
        for eq in rev[x]:
            if eq in under_eqs:
                continue
            under_eqs.add(eq)
            nxt = eq_match.get(eq)
            if nxt is not None and nxt not in under_vars:
                under_vars.add(nxt)
                stack.append(nxt)

    # A maximum matching admits no augmenting path, so the two sweeps
    # cannot meet.
    if over_eqs & under_eqs or over_vars & under_vars:
        raise InternalConsistencyError("DM sweeps overlap; matching was not maximum")
    just_eqs = set(model.equations) - over_eqs - under_eqs
    just_vars = set(model.unknowns) - over_vars - under_vars
    if len(just_eqs) != len(just_vars):
        raise InternalConsistencyError("just-determined part is not square")
    return _Coarse(
        under=PartPair(frozenset(under_eqs), frozenset(under_vars)),
        just=PartPair(frozenset(just_eqs), frozenset(just_vars)),
        over=PartPair(frozenset(over_eqs), frozenset(over_vars)),
    )


def plus_part(model: StructuralModel) -> frozenset[str]:
    """Equations of the overdetermined part (the analytical redundancy)."""
    return _coarse_parts(model).over.equations


def dm_decompose(model: StructuralModel) -> DmDecomposition:
    """Coarse DM decomposition plus fine blocks of the overdetermined part.

    The result is canonical: it does not depend on the declaration order of
    equations or unknowns.  Fine blocks are computed definitionally, by
    re-decomposing the model with one overdetermined equation removed; all
    equations expelled by the removal share the removed equation's block.
    """
    coarse = _coarse_parts(model)
    over = coarse.over.equations
    assigned: set[str] = set()
    blocks: list[frozenset[str]] = []
    for eq in sorted(over):
        if eq in assigned:
            continue
        remaining = _coarse_parts(model.remove_equation(eq)).over.equations
        block = over - remaining
        if block & assigned or eq not in block:
            raise InternalConsistencyError("fine blocks do not form a partition")
        assigned |= block
        blocks.append(block)
    blocks.sort(key=sorted)
    return DmDecomposition(coarse.under, coarse.just, coarse.over, tuple(blocks))


def detectability_set(model: StructuralModel) -> tuple[frozenset[str], frozenset[str]]:
    """Split faults into (detectable, non-detectable).

    A fault is structurally detectable exactly when its equation lies in
    the overdetermined part of the model.
    """
    return _split_by_plus(model, plus_part(model))


def is_isolable(model: StructuralModel, fault_i: str, fault_j: str) -> bool:
    """True when ``fault_i`` stays detectable after removing ``fault_j``'s equation."""
    if fault_i == fault_j:
        raise InputError("isolability of a fault from itself is undefined")
    for f in (fault_i, fault_j):
        if f not in model.fault_map:
            raise InputError(f"fault {f!r} is not declared in the model")
    reduced = model.remove_equation(model.fault_map[fault_j])
    return model.fault_map[fault_i] in plus_part(reduced)


def _canonical_partition(cells: Iterable[frozenset[str]]) -> tuple[frozenset[str], ...]:
    return tuple(sorted(cells, key=sorted))


def isolability_partition(model: StructuralModel) -> IsolabilityReport:
    """Group detectable faults into maximal mutually-non-isolable sets.

    Faults whose equations share a fine block of the overdetermined part
    are mutually non-isolable; all other detectable pairs are isolable.
    """
    dm = dm_decompose(model)
    detectable, non_detectable = _split_by_plus(model, dm.over.equations)
    block_index = {eq: i for i, block in enumerate(dm.fine_blocks) for eq in block}
    cells: dict[int, set[str]] = {}
    for f in detectable:
        cells.setdefault(block_index[model.fault_map[f]], set()).add(f)
    partition = _canonical_partition(frozenset(c) for c in cells.values())
    return IsolabilityReport(detectable, partition, non_detectable)


def _split_by_plus(model: StructuralModel, plus: frozenset[str]) -> tuple[frozenset[str], frozenset[str]]:
    detectable = frozenset(f for f in model.faults if model.fault_map[f] in plus)
    return detectable, frozenset(model.faults) - detectable


def isolability_matrix(model: StructuralModel) -> IsolabilityMatrix:
    """Pairwise non-isolability matrix over the detectable faults.

    Computed by direct pairwise removal, independently of the fine-block
    partition, so the two routes can be cross-checked against each other.
    """
    detectable, _ = detectability_set(model)
    order = tuple(sorted(detectable))
    entries = tuple(
        tuple(
            True if i == j else not is_isolable(model, fi, fj)
            for j, fj in enumerate(order)
        )
        for i, fi in enumerate(order)
    )
    return IsolabilityMatrix(order, entries)


def partition_matrix(report: IsolabilityReport) -> IsolabilityMatrix:
    """Non-isolability matrix induced by a report's partition cells."""
    order = tuple(sorted(report.detectable))
    cell_index = {f: i for i, cell in enumerate(report.non_isolable_partition) for f in cell}
    entries = tuple(
        tuple(cell_index[fi] == cell_index[fj] for fj in order)
        for fi in order
    )
    return IsolabilityMatrix(order, entries)


def _oracle_matching_size(model: StructuralModel) -> int:
    """Maximum matching cardinality via scipy's Hopcroft-Karp.

    Kept deliberately separate from the hand-written augmenting-path code
    so the oracle exercises an independent implementation.
    """
    if not model.equations or not model.unknowns:
        return 0
    eq_index = {e: i for i, e in enumerate(model.equations)}
    var_index = {x: j for j, x in enumerate(model.unknowns)}
    indptr = np.zeros(len(model.equations) + 1, dtype=np.int32)
    cols: list[int] = []
    for e in model.equations:
        cols.extend(sorted(var_index[x] for x in model.incidence[e]))
        indptr[eq_index[e] + 1] = len(cols)
    if not cols:
        return 0
    graph = csr_matrix(
        (np.ones(len(cols), dtype=np.int8), np.asarray(cols, dtype=np.int32), indptr),
        shape=(len(model.equations), len(model.unknowns)),
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int((match != -1).sum())


def oracle_plus_membership(
    model: StructuralModel, equation: str, *, bound: int = DEFAULT_ORACLE_BOUND
) -> bool:
    """Test oracle for overdetermined-part membership.

    An equation lies in the overdetermined part exactly when some maximum
    matching leaves it exposed, i.e. when removing it does not reduce the
    maximum matching cardinality.  Only intended for validating
    :func:`dm_decompose` on small models; larger inputs are refused.
    """
    if len(model.equations) > bound:
        raise OracleBoundError(
            f"oracle refuses models with more than {bound} equations "
            f"(got {len(model.equations)})"
        )
    if equation not in model.incidence:
        raise InputError(f"unknown equation {equation!r}")
    return _oracle_matching_size(model.remove_equation(equation)) == _oracle_matching_size(model)

"""Randomized cross-validation of the DM core against an independent oracle.

Random models are decomposed twice: by the production alternating-path
classification and by the matching-cardinality oracle (an equation is
redundant exactly when removing it keeps the maximum matching size, with
the matching size computed by scipy's Hopcroft-Karp rather than the
package's own matching code).  Isolability partitions are checked against
a brute-force pairwise evaluation of the removal definition.
"""

import random
from dataclasses import dataclass, field

from .errors import InternalConsistencyError
from .structural import (
    DEFAULT_ORACLE_BOUND,
    IsolabilityReport,
    StructuralModel,
    _canonical_partition,
    _oracle_matching_size,
    dm_decompose,
    isolability_partition,
    oracle_plus_membership,
)

__all__ = ["OracleCheckResult", "oracle_partition", "random_model", "run_oracle_check"]


def random_model(
    rng: random.Random, max_equations: int = 12, max_unknowns: int = 10
) -> StructuralModel:
    """Random incidence structure with random density and injective faults."""
    n_eq = rng.randint(0, max_equations)
    n_unk = rng.randint(0, max_unknowns)
    density = rng.uniform(0.05, 0.85)
    equations = [f"e{i}" for i in range(1, n_eq + 1)]
    unknowns = [f"x{j}" for j in range(1, n_unk + 1)]
    incidence = {
        eq: frozenset(x for x in unknowns if rng.random() < density) for eq in equations
    }
    fault_eqs = rng.sample(equations, rng.randint(0, n_eq))
    faults = {f"f{i}": eq for i, eq in enumerate(fault_eqs, start=1)}
    return StructuralModel(
        equations=tuple(equations),
        unknowns=tuple(unknowns),
        incidence=incidence,
        faults=tuple(faults),
        fault_map=faults,
    )


def oracle_partition(model: StructuralModel, bound: int = DEFAULT_ORACLE_BOUND) -> IsolabilityReport:
    """Brute-force isolability: pairwise removal checked by matching sizes.

    Asserts the symmetry of the non-isolable relation on detectable faults
    and that the relation closes into a partition, then returns it.
    """
    detectable = frozenset(
        f for f in model.faults if oracle_plus_membership(model, model.fault_map[f], bound=bound)
    )
    non_detectable = frozenset(model.faults) - detectable
    det = sorted(detectable)

    # Cache matching sizes: nu(M \ {e}) and nu(M \ {e_i, e_j}).
    nu_without = {
        model.fault_map[f]: _oracle_matching_size(model.remove_equation(model.fault_map[f]))
        for f in det
    }
    non_isolable: dict[tuple[str, str], bool] = {}
    for i, fi in enumerate(det):
        for fj in det[i + 1:]:
            ei, ej = model.fault_map[fi], model.fault_map[fj]
            nu_pair = _oracle_matching_size(
                model.remove_equation(ei).remove_equation(ej)
            )
            # fi isolable from fj iff e_i stays redundant once e_j is gone.
            ij = not (nu_pair == nu_without[ej])
            ji = not (nu_pair == nu_without[ei])
            if ij != ji:
                raise InternalConsistencyError(
                    f"oracle non-isolability is asymmetric for ({fi}, {fj})"
                )
            non_isolable[(fi, fj)] = ij

    parent = {f: f for f in det}

    def find(f: str) -> str:
        while parent[f] != f:
            parent[f] = parent[parent[f]]
            f = parent[f]
        return f

    for (fi, fj), linked in non_isolable.items():
        if linked:
            parent[find(fi)] = find(fj)

    cells: dict[str, set[str]] = {}
    for f in det:
        cells.setdefault(find(f), set()).add(f)
    # The pairwise relation must already be transitive, or it is no partition.
    for cell in cells.values():
        ordered = sorted(cell)
        for i, fi in enumerate(ordered):
            for fj in ordered[i + 1:]:
                if not non_isolable[(fi, fj)]:
                    raise InternalConsistencyError(
                        f"oracle non-isolability is not transitive at ({fi}, {fj})"
                    )
    partition = _canonical_partition(frozenset(c) for c in cells.values())
    return IsolabilityReport(detectable, partition, non_detectable)


@dataclass
class OracleCheckResult:
    models_checked: int = 0
    equations_checked: int = 0
    pairs_checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_oracle_check(
    count: int,
    seed: int,
    max_equations: int = 12,
    max_unknowns: int = 10,
    bound: int = DEFAULT_ORACLE_BOUND,
) -> OracleCheckResult:
    """Cross-validate ``count`` random models; collect any disagreements."""
    rng = random.Random(seed)
    result = OracleCheckResult()
    for index in range(count):
        model = random_model(rng, max_equations, max_unknowns)
        result.models_checked += 1
        over = dm_decompose(model).over.equations
        for eq in model.equations:
            result.equations_checked += 1
            if (eq in over) != oracle_plus_membership(model, eq, bound=bound):
                result.failures.append(
                    f"model {index}: redundancy of {eq} disagrees with the oracle"
                )
        expected = oracle_partition(model, bound=bound)
        result.pairs_checked += (
            len(expected.detectable) * (len(expected.detectable) - 1) // 2
        )
        actual = isolability_partition(model)
        if (actual.detectable, actual.non_isolable_partition, actual.non_detectable) != (
            expected.detectable,
            expected.non_isolable_partition,
            expected.non_detectable,
        ):
            result.failures.append(
                f"model {index}: isolability partition disagrees with pairwise brute force"
            )
    return result

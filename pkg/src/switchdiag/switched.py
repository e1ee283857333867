"""Mode-guarded multi-submodule models and their symmetry reductions.

A :class:`SwitchedModel` consists of ``n`` copies of a
:class:`SubmoduleTemplate` (whose equations may change incidence with the
submodule's switch mode) plus mode-independent global equations.  Fixing
one mode per submodule -- a :class:`Configuration` -- flattens the switched
model into an ordinary :class:`~switchdiag.structural.StructuralModel`.

Two reductions keep the analysis of all mode combinations tractable:
modes with identical equation structure collapse into structural mode
classes, and configurations that agree on the per-class instance counts
produce models that are identical up to instance renaming.
"""

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .errors import InputError
from .structural import StructuralModel

__all__ = [
    "Configuration",
    "GlobalEquation",
    "ModeGuardedEquation",
    "ReducedConfiguration",
    "SubmoduleTemplate",
    "SwitchedModel",
    "canonicalize",
    "enumerate_reduced_configurations",
    "instance_name",
    "instantiate",
    "parse_configuration",
    "representative_configuration",
    "structural_mode_classes",
]


def instance_name(base: str, k: int) -> str:
    """Suffix a template-local identifier with its instance index."""
    return f"{base},{k}"


@dataclass(frozen=True)
class ModeGuardedEquation:
    """One template equation with a per-mode incidence variant.

    Mode-independent equations simply carry the same incidence under every
    mode.  Only incidence is stored; sign and coefficient changes between
    modes do not alter structure.
    """

    id: str
    variants: Mapping[str, frozenset[str]]
    fault: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "variants", {m: frozenset(v) for m, v in dict(self.variants).items()}
        )

    @classmethod
    def uniform(
        cls, eq_id: str, unknowns: Sequence[str], modes: Sequence[str], fault: str | None = None
    ) -> "ModeGuardedEquation":
        incidence = frozenset(unknowns)
        return cls(eq_id, {m: incidence for m in modes}, fault)


@dataclass(frozen=True)
class SubmoduleTemplate:
    """Equations, modes and private unknowns of one submodule type.

    ``mode_letters`` optionally maps single-letter aliases (as used in
    configuration strings such as ``"IIB"``) to full mode names.
    """

    modes: tuple[str, ...]
    equations: tuple[ModeGuardedEquation, ...]
    local_unknowns: tuple[str, ...]
    mode_letters: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        modes = tuple(self.modes)
        if len(set(modes)) != len(modes):
            raise InputError("duplicate mode identifiers")
        equations = tuple(self.equations)
        ids = [eq.id for eq in equations]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate equation identifiers in template")
        for eq in equations:
            if set(eq.variants) != set(modes):
                raise InputError(
                    f"equation {eq.id!r} must declare one incidence variant per mode"
                )
        letters = dict(self.mode_letters)
        for letter, mode in letters.items():
            if mode not in modes:
                raise InputError(f"mode letter {letter!r} maps to unknown mode {mode!r}")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "equations", equations)
        object.__setattr__(self, "local_unknowns", tuple(self.local_unknowns))
        object.__setattr__(self, "mode_letters", letters)


@dataclass(frozen=True)
class GlobalEquation:
    """Mode-independent equation shared by the whole pack.

    ``per_instance`` names template-local unknowns that enter the equation
    once per submodule instance (e.g. an output voltage summing every
    submodule's terminal voltage).
    """

    id: str
    unknowns: frozenset[str]
    per_instance: frozenset[str] = frozenset()
    fault: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "unknowns", frozenset(self.unknowns))
        object.__setattr__(self, "per_instance", frozenset(self.per_instance))


@dataclass(frozen=True)
class SwitchedModel:
    """``n`` template instances plus global equations over shared unknowns."""

    template: SubmoduleTemplate
    n: int
    global_equations: tuple[GlobalEquation, ...]
    shared_unknowns: tuple[str, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"submodule count must be >= 1 (got {self.n})")
        shared = tuple(self.shared_unknowns)
        if len(set(shared)) != len(shared):
            raise InputError("duplicate shared unknowns")
        overlap = set(shared) & set(self.template.local_unknowns)
        if overlap:
            raise InputError(f"shared unknowns collide with template locals: {sorted(overlap)}")
        known = set(shared) | set(self.template.local_unknowns)
        for eq in self.template.equations:
            for variant in eq.variants.values():
                stray = variant - known
                if stray:
                    raise InputError(
                        f"template equation {eq.id!r} references undeclared unknowns {sorted(stray)}"
                    )
        for geq in self.global_equations:
            if geq.unknowns - set(shared):
                raise InputError(f"global equation {geq.id!r} must use shared unknowns only")
            if geq.per_instance - set(self.template.local_unknowns):
                raise InputError(
                    f"global equation {geq.id!r} per-instance unknowns must be template locals"
                )
        object.__setattr__(self, "global_equations", tuple(self.global_equations))
        object.__setattr__(self, "shared_unknowns", shared)


@dataclass(frozen=True)
class Configuration:
    """One mode per submodule instance."""

    modes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))


@dataclass(frozen=True)
class ReducedConfiguration:
    """Configuration class determined by per-mode-class instance counts.

    ``inserted_count`` is the number of instances in the first (insertion)
    structural class; ``class_counts`` carries the full count vector for
    templates with more than two classes.
    """

    inserted_count: int
    class_counts: tuple[int, ...] = ()

    def __post_init__(self):
        if self.inserted_count < 0:
            raise InputError("inserted count must be non-negative")
        if not self.class_counts:
            object.__setattr__(self, "class_counts", (self.inserted_count,))


def _mode_signature(template: SubmoduleTemplate, mode: str) -> tuple:
    return tuple((eq.id, eq.variants[mode]) for eq in template.equations)


def structural_mode_classes(template: SubmoduleTemplate) -> tuple[frozenset[str], ...]:
    """Partition the template's modes by equation structure.

    Two modes land in the same class when every equation has identical
    incidence under both.  Classes are ordered with the structurally
    richest one (largest total incidence; the insertion-like class) first,
    ties broken by mode declaration order, so callers may treat
    ``classes[0]`` as the insertion class.
    """
    groups: dict[tuple, list[str]] = {}
    for mode in template.modes:
        groups.setdefault(_mode_signature(template, mode), []).append(mode)

    def sort_key(item: tuple[tuple, list[str]]) -> tuple[int, int]:
        signature, members = item
        richness = sum(len(v) for _, v in signature)
        return (-richness, template.modes.index(members[0]))

    ordered = sorted(groups.items(), key=sort_key)
    return tuple(frozenset(members) for _, members in ordered)


def instantiate(switched: SwitchedModel, config: Configuration) -> StructuralModel:
    """Flatten a switched model under a fixed configuration.

    Instance ``k`` contributes every template equation with the incidence
    of ``config.modes[k-1]``, all local names suffixed ``,k``; global
    equations follow unchanged, with per-instance unknowns expanded over
    all instances.
    """
    template = switched.template
    if len(config.modes) != switched.n:
        raise InputError(
            f"configuration length {len(config.modes)} does not match n={switched.n}"
        )
    for mode in config.modes:
        if mode not in template.modes:
            raise InputError(f"unknown mode identifier {mode!r}")

    local = set(template.local_unknowns)
    equations: dict[str, frozenset[str]] = {}
    faults: dict[str, str] = {}
    for k, mode in enumerate(config.modes, start=1):
        for eq in template.equations:
            eq_id = instance_name(eq.id, k)
            equations[eq_id] = frozenset(
                instance_name(x, k) if x in local else x for x in eq.variants[mode]
            )
            if eq.fault is not None:
                faults[instance_name(eq.fault, k)] = eq_id
    for geq in switched.global_equations:
        expanded = set(geq.unknowns)
        for base in geq.per_instance:
            expanded.update(instance_name(base, k) for k in range(1, switched.n + 1))
        equations[geq.id] = frozenset(expanded)
        if geq.fault is not None:
            faults[geq.fault] = geq.id

    unknowns = [
        instance_name(x, k)
        for k in range(1, switched.n + 1)
        for x in template.local_unknowns
    ]
    unknowns.extend(switched.shared_unknowns)
    return StructuralModel(
        equations=tuple(equations),
        unknowns=tuple(unknowns),
        incidence=equations,
        faults=tuple(faults),
        fault_map=faults,
    )


def canonicalize(
    template_classes: Sequence[frozenset[str]], config: Configuration
) -> ReducedConfiguration:
    """Reduce a configuration to its per-class instance counts."""
    counts = [0] * len(template_classes)
    for mode in config.modes:
        for i, cls in enumerate(template_classes):
            if mode in cls:
                counts[i] += 1
                break
        else:
            raise InputError(f"mode {mode!r} belongs to no structural class")
    return ReducedConfiguration(inserted_count=counts[0], class_counts=tuple(counts))


def _compositions(total: int, parts: int):
    # All count vectors of length `parts` summing to `total`.
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        previous = -1
        counts = []
        for cut in cuts + (total + parts - 1,):
            counts.append(cut - previous - 1)
            previous = cut
        yield tuple(counts)


def enumerate_reduced_configurations(switched: SwitchedModel) -> tuple[ReducedConfiguration, ...]:
    """All configuration classes that can differ structurally.

    With the usual two structural classes this is the ``n + 1`` classes of
    0..n inserted instances; templates with another class count fall back
    to enumerating every per-class count vector.
    """
    classes = structural_mode_classes(switched.template)
    n = switched.n
    if len(classes) == 2:
        return tuple(ReducedConfiguration(k, (k, n - k)) for k in range(n + 1))
    return tuple(
        ReducedConfiguration(counts[0], counts)
        for counts in sorted(_compositions(n, len(classes)), reverse=True)
    )


def representative_configuration(
    switched: SwitchedModel, reduced: ReducedConfiguration
) -> Configuration:
    """Canonical representative: class-0 instances first, then class 1, ...

    Each class is represented by its first declared mode, so ``k`` inserted
    instances become ``k`` leading instances in the insertion class's first
    mode followed by bypass-class instances.
    """
    classes = structural_mode_classes(switched.template)
    counts = reduced.class_counts
    if len(counts) != len(classes):
        if len(classes) == 2 and len(counts) == 1:
            counts = (reduced.inserted_count, switched.n - reduced.inserted_count)
        else:
            raise InputError("reduced configuration does not match the template's classes")
    if sum(counts) != switched.n or any(c < 0 for c in counts):
        raise InputError(f"class counts {counts} do not sum to n={switched.n}")
    reps = [min(cls, key=switched.template.modes.index) for cls in classes]
    modes: list[str] = []
    for rep, count in zip(reps, counts):
        modes.extend([rep] * count)
    return Configuration(tuple(modes))


def parse_configuration(template: SubmoduleTemplate, text: str, n: int) -> Configuration:
    """Parse ``"IIB"``-style letter strings or comma-separated mode names."""
    text = text.strip()
    if "," in text:
        modes = tuple(part.strip() for part in text.split(","))
        for mode in modes:
            if mode not in template.modes:
                raise InputError(f"unknown mode name {mode!r}")
    else:
        letters = template.mode_letters
        if not letters:
            raise InputError("this template declares no mode letters; use full mode names")
        try:
            modes = tuple(letters[ch] for ch in text)
        except KeyError as exc:
            raise InputError(f"unknown mode letter {exc.args[0]!r}") from None
    if len(modes) != n:
        raise InputError(f"configuration has {len(modes)} entries, expected {n}")
    return Configuration(modes)

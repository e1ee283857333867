"""JSON exchange formats for flat and switched models.

Flat structural models serialize as ``{"equations": [{"id", "unknowns",
"fault"?}], "unknowns": [...]}``; switched models carry the template with
per-mode incidence variants, the global equations and an optional
template-level fault aggregation pattern.  All serialized collections are
lexicographically ordered so files are byte-stable.
"""

import json
from pathlib import Path

from .errors import InputError
from .structural import DmDecomposition, StructuralModel
from .switched import (
    GlobalEquation,
    ModeGuardedEquation,
    SubmoduleTemplate,
    SwitchedModel,
)

__all__ = [
    "decomposition_to_dict",
    "decomposition_to_dot",
    "load_any_model",
    "structural_model_from_dict",
    "structural_model_to_dict",
    "switched_model_from_dict",
    "switched_model_to_dict",
]


def structural_model_to_dict(model: StructuralModel) -> dict:
    equations = []
    for eq in sorted(model.equations):
        entry: dict = {"id": eq, "unknowns": sorted(model.incidence[eq])}
        for fault, target in model.fault_map.items():
            if target == eq:
                entry["fault"] = fault
        equations.append(entry)
    return {"equations": equations, "unknowns": sorted(model.unknowns)}


def structural_model_from_dict(data: dict) -> StructuralModel:
    try:
        equation_entries = data["equations"]
        unknowns = tuple(data["unknowns"])
    except KeyError as exc:
        raise InputError(f"model JSON missing field {exc.args[0]!r}") from None
    incidence = {}
    faults = {}
    for entry in equation_entries:
        incidence[entry["id"]] = frozenset(entry.get("unknowns", ()))
        if entry.get("fault"):
            faults[entry["fault"]] = entry["id"]
    return StructuralModel(
        equations=tuple(e["id"] for e in equation_entries),
        unknowns=unknowns,
        incidence=incidence,
        faults=tuple(faults),
        fault_map=faults,
    )


def _mode_equation_to_dict(eq: ModeGuardedEquation, modes: tuple[str, ...]) -> dict:
    variants = {m: eq.variants[m] for m in modes}
    entry: dict = {"id": eq.id}
    if len(set(variants.values())) == 1:
        entry["unknowns"] = sorted(next(iter(variants.values())))
    else:
        entry["variants"] = {m: sorted(v) for m, v in variants.items()}
    if eq.fault:
        entry["fault"] = eq.fault
    return entry


def _mode_equation_from_dict(entry: dict, modes: tuple[str, ...]) -> ModeGuardedEquation:
    if "variants" in entry:
        variants = {m: frozenset(v) for m, v in entry["variants"].items()}
    else:
        variants = {m: frozenset(entry.get("unknowns", ())) for m in modes}
    return ModeGuardedEquation(entry["id"], variants, entry.get("fault"))


def switched_model_to_dict(
    switched: SwitchedModel, aggregation_pattern: dict[str, tuple[str, ...]] | None = None
) -> dict:
    template = switched.template
    data = {
        "n": switched.n,
        "template": {
            "modes": list(template.modes),
            "local_unknowns": list(template.local_unknowns),
            "mode_letters": dict(template.mode_letters),
            "equations": [
                _mode_equation_to_dict(eq, template.modes) for eq in template.equations
            ],
        },
        "shared_unknowns": list(switched.shared_unknowns),
        "global_equations": [
            {
                "id": geq.id,
                "unknowns": sorted(geq.unknowns),
                **({"per_instance": sorted(geq.per_instance)} if geq.per_instance else {}),
                **({"fault": geq.fault} if geq.fault else {}),
            }
            for geq in switched.global_equations
        ],
    }
    if aggregation_pattern:
        data["fault_aggregation"] = {a: list(c) for a, c in aggregation_pattern.items()}
    return data


def switched_model_from_dict(data: dict) -> tuple[SwitchedModel, dict[str, tuple[str, ...]]]:
    """Returns the model plus its template-level aggregation pattern (may be empty)."""
    try:
        template_data = data["template"]
        modes = tuple(template_data["modes"])
        template = SubmoduleTemplate(
            modes=modes,
            equations=tuple(
                _mode_equation_from_dict(e, modes) for e in template_data["equations"]
            ),
            local_unknowns=tuple(template_data["local_unknowns"]),
            mode_letters=template_data.get("mode_letters", {}),
        )
        switched = SwitchedModel(
            template=template,
            n=int(data["n"]),
            global_equations=tuple(
                GlobalEquation(
                    id=g["id"],
                    unknowns=frozenset(g.get("unknowns", ())),
                    per_instance=frozenset(g.get("per_instance", ())),
                    fault=g.get("fault"),
                )
                for g in data["global_equations"]
            ),
            shared_unknowns=tuple(data["shared_unknowns"]),
        )
    except KeyError as exc:
        raise InputError(f"switched model JSON missing field {exc.args[0]!r}") from None
    aggregation = {
        a: tuple(c) for a, c in data.get("fault_aggregation", {}).items()
    }
    return switched, aggregation


def load_any_model(path: str | Path) -> dict:
    """Read a model JSON file; the caller dispatches on the 'template' key."""
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from None


def decomposition_to_dict(dm: DmDecomposition) -> dict:
    return {
        "under": {
            "equations": sorted(dm.under.equations),
            "unknowns": sorted(dm.under.unknowns),
        },
        "just": {
            "equations": sorted(dm.just.equations),
            "unknowns": sorted(dm.just.unknowns),
        },
        "over": {
            "equations": sorted(dm.over.equations),
            "unknowns": sorted(dm.over.unknowns),
        },
        "fine_blocks": [sorted(block) for block in dm.fine_blocks],
    }


def decomposition_to_dot(model: StructuralModel, dm: DmDecomposition) -> str:
    """Graphviz rendering: equation/unknown bipartite graph clustered by part."""

    def node(name: str) -> str:
        return '"' + name.replace('"', r"\"") + '"'

    lines = ["graph dm {", "  rankdir=LR;", "  node [fontsize=10];"]
    parts = [("under", dm.under), ("just", dm.just), ("over", dm.over)]
    for label, pair in parts:
        if not pair.equations and not pair.unknowns:
            continue
        lines.append(f"  subgraph cluster_{label} {{")
        lines.append(f'    label="{label}";')
        if label == "over":
            for i, block in enumerate(dm.fine_blocks):
                lines.append(f"    subgraph cluster_block{i} {{")
                lines.append(f'      label="block {i}";')
                for eq in sorted(block):
                    lines.append(f"      {node(eq)} [shape=box];")
                lines.append("    }")
        else:
            for eq in sorted(pair.equations):
                lines.append(f"    {node(eq)} [shape=box];")
        for unk in sorted(pair.unknowns):
            lines.append(f"    {node(unk)} [shape=ellipse];")
        lines.append("  }")
    for eq in sorted(model.equations):
        for unk in sorted(model.incidence[eq]):
            lines.append(f"  {node(eq)} -- {node(unk)};")
    lines.append("}")
    return "\n".join(lines) + "\n"

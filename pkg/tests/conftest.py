import string

from hypothesis import settings, strategies as st

from switchdiag.structural import StructuralModel

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@st.composite
def models(draw, max_equations: int = 8, max_unknowns: int = 6, with_faults: bool = True):
    """Random structural models: random density, injective random faults."""
    n_eq = draw(st.integers(0, max_equations))
    n_unk = draw(st.integers(0, max_unknowns))
    unknowns = tuple(f"x{j}" for j in range(1, n_unk + 1))
    incidence = {}
    for i in range(1, n_eq + 1):
        if unknowns:
            vars_ = draw(st.frozensets(st.sampled_from(unknowns)))
        else:
            vars_ = frozenset()
        incidence[f"e{i}"] = vars_
    faults: dict[str, str] = {}
    if with_faults and n_eq:
        chosen = draw(
            st.lists(st.sampled_from(sorted(incidence)), unique=True, max_size=n_eq)
        )
        faults = {f"f{i}": eq for i, eq in enumerate(chosen, start=1)}
    return StructuralModel(
        equations=tuple(incidence),
        unknowns=unknowns,
        incidence=incidence,
        faults=tuple(faults),
        fault_map=faults,
    )


@st.composite
def identifiers(draw, prefix: str):
    body = draw(st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=4))
    return f"{prefix}{body}"

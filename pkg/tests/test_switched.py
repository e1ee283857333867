import itertools
import random

import pytest

from switchdiag import bimmc
from switchdiag.errors import InputError
from switchdiag.structural import isolability_partition
from switchdiag.switched import (
    Configuration,
    ModeGuardedEquation,
    ReducedConfiguration,
    SubmoduleTemplate,
    canonicalize,
    enumerate_reduced_configurations,
    instantiate,
    parse_configuration,
    representative_configuration,
    structural_mode_classes,
)


@pytest.fixture(scope="module")
def fb_switched():
    switched, _ = bimmc.generate(3, "I")
    return switched


@pytest.fixture(scope="module")
def fb_classes(fb_switched):
    return structural_mode_classes(fb_switched.template)


def random_template(rng: random.Random) -> SubmoduleTemplate:
    n_modes = rng.randint(1, 4)
    modes = tuple(f"m{i}" for i in range(1, n_modes + 1))
    locals_ = ("a", "b", "c")
    equations = []
    for i in range(1, rng.randint(2, 5)):
        variants = {
            m: frozenset(x for x in locals_ if rng.random() < 0.6) for m in modes
        }
        equations.append(ModeGuardedEquation(f"e{i}", variants))
    return SubmoduleTemplate(modes, tuple(equations), locals_)


class TestModeClasses:
    def test_full_bridge_collapses_to_insertion_and_bypass(self, fb_switched):
        classes = structural_mode_classes(fb_switched.template)
        assert classes == (bimmc.INSERTION_MODES, bimmc.BYPASS_MODES)

    def test_all_distinct_modes_give_singletons(self):
        template = SubmoduleTemplate(
            modes=("m1", "m2"),
            equations=(
                ModeGuardedEquation(
                    "e1", {"m1": frozenset({"a"}), "m2": frozenset({"a", "b"})}
                ),
            ),
            local_unknowns=("a", "b"),
        )
        assert structural_mode_classes(template) == (
            frozenset({"m2"}),
            frozenset({"m1"}),
        )

    def test_random_templates_match_pairwise_comparison(self):
        rng = random.Random(7)
        for _ in range(100):
            template = random_template(rng)
            classes = structural_mode_classes(template)
            for m1, m2 in itertools.combinations(template.modes, 2):
                same_structure = all(
                    eq.variants[m1] == eq.variants[m2] for eq in template.equations
                )
                same_class = any(m1 in c and m2 in c for c in classes)
                assert same_structure == same_class


class TestInstantiate:
    def test_equation_count_setup_one(self, fb_switched):
        config = Configuration(("forward", "backward", "bypass2"))
        assert len(instantiate(fb_switched, config).equations) == 32

    def test_equation_count_setup_four_single_module(self):
        switched, _ = bimmc.generate(1, "IV")
        model = instantiate(switched, Configuration(("forward",)))
        assert len(model.equations) == 14

    def test_bypass_decouples_output_current(self, fb_switched):
        model = instantiate(fb_switched, Configuration(("forward", "bypass1", "backward")))
        assert "i_out" in model.incidence["e10,1"]
        assert "i_out" not in model.incidence["e10,2"]
        assert "i_out" in model.incidence["e10,3"]
        assert "v_cell,2" not in model.incidence["e9,2"]

    def test_unknown_mode_rejected(self, fb_switched):
        with pytest.raises(InputError, match="unknown mode"):
            instantiate(fb_switched, Configuration(("forward", "forward", "sideways")))

    def test_wrong_length_rejected(self, fb_switched):
        with pytest.raises(InputError, match="length"):
            instantiate(fb_switched, Configuration(("forward",)))

    def test_within_class_mode_swap_gives_identical_model(self, fb_switched):
        base = instantiate(fb_switched, Configuration(("forward", "bypass1", "forward")))
        swapped = instantiate(fb_switched, Configuration(("backward", "bypass2", "forward")))
        assert base == swapped


class TestCanonicalize:
    @pytest.mark.parametrize(
        "modes", [("forward", "forward", "bypass1"),
                  ("forward", "bypass1", "forward"),
                  ("bypass1", "forward", "forward")]
    )
    def test_two_inserted_regardless_of_position(self, fb_classes, modes):
        assert canonicalize(fb_classes, Configuration(modes)).inserted_count == 2

    def test_all_bypass(self, fb_classes):
        config = Configuration(("bypass1", "bypass2", "bypass1"))
        assert canonicalize(fb_classes, config).inserted_count == 0

    def test_forward_and_backward_both_count_as_inserted(self, fb_classes):
        config = Configuration(("forward", "backward", "bypass1", "bypass2"))
        reduced = canonicalize(fb_classes, config)
        assert reduced.inserted_count == 2
        assert reduced.class_counts == (2, 2)


class TestReducedEnumeration:
    def test_n_plus_one_classes(self, fb_switched):
        reduced = enumerate_reduced_configurations(fb_switched)
        assert [r.inserted_count for r in reduced] == [0, 1, 2, 3]
        assert len(list(itertools.product(bimmc.MODES, repeat=3))) == 64

    def test_single_module(self):
        switched, _ = bimmc.generate(1, "I")
        assert len(enumerate_reduced_configurations(switched)) == 2

    def test_representative_is_inserted_then_bypassed(self, fb_switched):
        config = representative_configuration(fb_switched, ReducedConfiguration(2, (2, 1)))
        assert config.modes == ("forward", "forward", "bypass1")

    def test_multiclass_fallback_enumerates_count_vectors(self):
        template = SubmoduleTemplate(
            modes=("m1", "m2", "m3"),
            equations=(
                ModeGuardedEquation(
                    "e1",
                    {
                        "m1": frozenset({"a", "b"}),
                        "m2": frozenset({"a"}),
                        "m3": frozenset(),
                    },
                ),
            ),
            local_unknowns=("a", "b"),
        )
        from switchdiag.switched import SwitchedModel

        switched = SwitchedModel(template, 2, (), ())
        reduced = enumerate_reduced_configurations(switched)
        assert sorted(r.class_counts for r in reduced) == [
            (0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0),
        ]


class TestParseConfiguration:
    def test_letters(self, fb_switched):
        config = parse_configuration(fb_switched.template, "IIB", 3)
        assert config.modes == ("forward", "forward", "bypass1")

    def test_full_names(self, fb_switched):
        config = parse_configuration(fb_switched.template, "forward,backward,bypass2", 3)
        assert config.modes == ("forward", "backward", "bypass2")

    def test_unknown_letter(self, fb_switched):
        with pytest.raises(InputError, match="letter"):
            parse_configuration(fb_switched.template, "IXB", 3)

    def test_wrong_length(self, fb_switched):
        with pytest.raises(InputError, match="entries"):
            parse_configuration(fb_switched.template, "IB", 3)


def rename_report(report, permutation):
    """permutation[new_index] = old_index (0-based); renames f_x,old -> f_x,new."""
    mapping = {old + 1: new + 1 for new, old in enumerate(permutation)}

    def map_fault(fault):
        base, sep, tail = fault.rpartition(",")
        if sep and tail.isdigit():
            return f"{base},{mapping[int(tail)]}"
        return fault

    return (
        frozenset(map_fault(f) for f in report.detectable),
        frozenset(map_fault(f) for f in report.non_detectable),
        frozenset(frozenset(map_fault(f) for f in c) for c in report.non_isolable_partition),
    )


class TestPermutationEquivariance:
    @pytest.mark.parametrize("setup", ["I", "II"])
    def test_all_insertion_patterns_n3(self, setup):
        switched, _ = bimmc.generate(3, setup)
        reports = {}
        for pattern in itertools.product((True, False), repeat=3):
            modes = tuple("forward" if ins else "bypass1" for ins in pattern)
            reports[pattern] = isolability_partition(instantiate(switched, Configuration(modes)))
        for pattern in reports:
            for perm in itertools.permutations(range(3)):
                permuted = tuple(pattern[i] for i in perm)
                expected = rename_report(reports[pattern], perm)
                actual = reports[permuted]
                assert (
                    actual.detectable,
                    actual.non_detectable,
                    frozenset(actual.non_isolable_partition),
                ) == expected

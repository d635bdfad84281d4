"""Translation into state estimation graphs and estimation tree enumeration."""

import pytest

import loopsmith as ls
from loopsmith import LangError, StateNode, remove_device, translate, traverse
from loopsmith.estimation import EstimatorNode, SensingNode

from oracle import brute_force_trees

T_HEAD = StateNode("t", "head")


class TestTranslate:
    def test_node_count(self, seg):
        # 7 components of 3 attributes each, plus 8 sensing points
        assert len(seg.nodes) == 29
        states = [n for n in seg.nodes if isinstance(n, StateNode)]
        estimators = [n for n in seg.nodes if isinstance(n, EstimatorNode)]
        sensing = [n for n in seg.nodes if isinstance(n, SensingNode)]
        assert (len(states), len(estimators), len(sensing)) == (14, 7, 8)

    def test_node_count_formula(self, seg, simple, wdn):
        expected = sum(
            len(wdn.class_named(c.class_name).attributes) for c in simple.components
        ) + len(simple.sensors)
        assert len(seg.nodes) == expected

    def test_key_edges_present(self, seg):
        edges = set(seg.edges)
        assert (SensingNode("s6"), T_HEAD) in edges
        assert (StateNode("p1", "flow"), EstimatorNode("t", "tank_mass")) in edges
        assert (EstimatorNode("t", "tank_mass"), T_HEAD) in edges

    def test_empty_process(self, wdn):
        empty = ls.ProcessGraph("wdn", (), (), (), ())
        g = translate(empty, wdn)
        assert g.nodes == () and g.edges == ()

    def test_missing_rule_diagnosed(self, simple, wdn):
        stripped = ls.IndustrialDomain(
            wdn.properties, wdn.model, wdn.classes,
            tuple(r for r in wdn.rules if {r.source_class, r.target_class} != {"pipe", "tank"}),
        )
        with pytest.raises(LangError, match=r"no translation rule for connected classes"):
            translate(simple, stripped)

    def test_edge_kinds(self, seg):
        for src, dst in seg.edges:
            if isinstance(src, SensingNode):
                assert isinstance(dst, StateNode)
            else:
                kinds = {type(src), type(dst)}
                assert kinds == {StateNode, EstimatorNode}


class TestTraverse:
    def test_seven_trees(self, forest):
        assert len(forest) == 7

    def test_direct_tree_first_then_tank_mass(self, forest):
        assert forest[0].sensing_leaves == (SensingNode("s6"),)
        assert forest[1].sensing_leaves == (SensingNode("s5"), SensingNode("s7"))
        assert forest[1].estimators == (EstimatorNode("t", "tank_mass"),)

    def test_all_tank_mass_after_first(self, forest):
        for tree in forest[1:]:
            assert EstimatorNode("t", "tank_mass") in tree.nodes

    def test_trees_pairwise_distinct(self, forest):
        canon = {t.canonical() for t in forest}
        assert len(canon) == len(forest)

    def test_each_tree_is_a_tree(self, forest):
        for tree in forest:
            parents = {}
            for child, parent in tree.edges:
                assert child not in parents
                parents[child] = parent
            for leaf in tree.sensing_leaves:
                at = leaf
                seen = set()
                while at in parents:
                    assert at not in seen
                    seen.add(at)
                    at = parents[at]
                assert at == tree.root

    def test_leaves_are_sensing_only(self, forest):
        for tree in forest:
            children = {child for child, _ in tree.edges}
            parents = {parent for _, parent in tree.edges}
            for leaf in children - parents:
                assert isinstance(leaf, SensingNode)

    def test_preset_inputs_record_the_shapes(self, forest):
        red = forest[1]
        assert (EstimatorNode("t", "tank_mass"), StateNode("t", "tank_shape")) \
            in red.preset_inputs

    def test_unresolvable_shape_state(self, seg):
        assert traverse(StateNode("t", "tank_shape"), seg) == []

    def test_unknown_root_rejected(self, seg):
        with pytest.raises(LangError, match="not a node"):
            traverse(StateNode("nowhere", "head"), seg)

    def test_matches_brute_force_oracle(self, seg, forest):
        assert {t.canonical() for t in forest} == brute_force_trees(T_HEAD, seg)


class TestFailureScenario:
    def test_two_trees_after_dev2(self, simple, wdn):
        broken = remove_device(simple, "dev2")
        forest = traverse(T_HEAD, translate(broken, wdn))
        assert len(forest) == 2
        for tree in forest:
            assert EstimatorNode("t", "tank_mass") in tree.nodes
            assert EstimatorNode("j", "junction_mass") in tree.nodes
            assert EstimatorNode("d", "demand_mass") in tree.nodes
            assert SensingNode("s8") in tree.sensing_leaves
            assert (SensingNode("s8"), StateNode("d", "flow")) in tree.edges
        first, second = forest
        assert SensingNode("s2") in first.sensing_leaves
        assert EstimatorNode("u", "link_energy") in second.nodes
        assert {SensingNode("s1"), SensingNode("s3")} <= set(second.sensing_leaves)

    def test_post_failure_matches_oracle(self, simple, wdn):
        broken = remove_device(simple, "dev2")
        g = translate(broken, wdn)
        assert {t.canonical() for t in traverse(T_HEAD, g)} == brute_force_trees(T_HEAD, g)

    @pytest.mark.parametrize("device,expected", [("dev2", 2), ("dev3", 4)])
    def test_monotone_under_removal(self, simple, wdn, forest, device, expected):
        # dropping sensing never creates new trees
        broken = remove_device(simple, device)
        after = traverse(T_HEAD, translate(broken, wdn))
        assert len(after) == expected
        assert len(after) <= len(forest)
        before = {t.canonical() for t in forest}
        assert {t.canonical() for t in after} <= before


def test_depth_cap_limits_enumeration(seg):
    # with no room for estimators only the direct sensing tree remains;
    # the full forest needs estimator chains three deep
    assert len(traverse(T_HEAD, seg, depth_cap=0)) == 1
    assert len(traverse(T_HEAD, seg, depth_cap=1)) == 2
    assert len(traverse(T_HEAD, seg, depth_cap=2)) == 5
    assert len(traverse(T_HEAD, seg, depth_cap=3)) == 7
    assert len(traverse(T_HEAD, seg, depth_cap=16)) == 7

"""Control-loop configuration from estimation trees."""

import pytest

import loopsmith as ls
from loopsmith import LangError, Outcome, TemplateKind, configure, is_live
from loopsmith.domain import lookup_template


@pytest.fixture(scope="module")
def red_loop(forest, agents, simple):
    return configure(forest[1], agents, "controller", "u", simple)


class TestFigReproduction:
    def test_matches_fig_configuration_up_to_renaming(self, red_loop, fig3):
        lconfig, _ = fig3
        renamed = ls.rename_configuration(
            red_loop.configuration, {"s5": "s1", "s7": "s2"}
        )
        assert renamed == lconfig

    def test_participants(self, red_loop):
        assert red_loop.configuration.participants() == (
            "s5", "s7", "t.tank_mass", "controller", "u"
        )

    def test_certificate_present_and_agrees_with_liveness(self, red_loop):
        assert red_loop.certified is not None
        assert is_live(red_loop.configuration).outcome is Outcome.HOLDS

    def test_assignments(self, red_loop):
        assert red_loop.assignment_of("s5") == ("flowSensor", "dev2")
        assert red_loop.assignment_of("t.tank_mass") == ("tmass", "t.tank_mass")
        assert red_loop.assignment_of("u") == ("pumpActuator", "dev1")

    def test_deterministic(self, forest, agents, simple, red_loop):
        again = configure(forest[1], agents, "controller", "u", simple)
        assert again == red_loop


class TestDirectSensingLoop:
    def test_three_roles(self, forest, agents, simple):
        loop = configure(forest[0], agents, "controller", "u", simple)
        assert loop.configuration.participants() == ("s6", "controller", "u")
        # same shape as the head-sensor/controller/pump configuration
        s6 = loop.configuration["s6"]
        template = lookup_template(agents, TemplateKind.SENSE, "head")
        assert s6 == ls.rename_participants(template.protocol, {"consumer1": "controller"})
        assert is_live(loop.configuration).outcome is Outcome.HOLDS


class TestChainedLoop:
    def test_post_failure_chain(self, simple, wdn, agents):
        broken = ls.remove_device(simple, "dev2")
        forest = ls.traverse(ls.StateNode("t", "head"), ls.translate(broken, wdn))
        loop = configure(forest[0], agents, "controller", "u", broken)
        assert loop.configuration.participants() == (
            "s4", "s2", "s8", "j.junction_mass", "d.demand_mass", "t.tank_mass",
            "controller", "u",
        )
        # intermediate estimators feed their parent estimator
        jm = loop.configuration["j.junction_mass"]
        assert "t.tank_mass" in ls.participants(jm)
        assert loop.certified is not None
        assert is_live(loop.configuration).outcome is Outcome.HOLDS

    def test_participant_sets_cover_exactly_the_tree_plus_loop(self, simple, wdn, agents):
        broken = ls.remove_device(simple, "dev2")
        forest = ls.traverse(ls.StateNode("t", "head"), ls.translate(broken, wdn))
        loop = configure(forest[1], agents, "controller", "u", broken)
        tree = forest[1]
        expected = {str(n) for n in tree.sensing_leaves} | {str(e) for e in tree.estimators}
        expected |= {"controller", "u"}
        assert set(loop.configuration.participants()) == expected


class TestConfigureErrors:
    def test_missing_sense_template(self, forest, simple, agents, wdn):
        stripped = ls.Repository(
            agents.name,
            tuple(t for t in agents.templates
                  if not (t.kind is TemplateKind.SENSE and t.subject == "flow")),
        )
        with pytest.raises(LangError, match="no sense template for 'flow'"):
            configure(forest[1], stripped, "controller", "u", simple)

    def test_dead_sensor_device(self, forest, agents, simple):
        dimmed = ls.ProcessGraph(
            simple.domain_name,
            tuple(ls.Device(d.name, alive=(d.name != "dev2"), pos=d.pos)
                  for d in simple.devices),
            simple.components, simple.sensors, simple.connections,
        )
        with pytest.raises(LangError, match="dead device dev2"):
            configure(forest[1], agents, "controller", "u", dimmed)

    def test_not_an_actuator(self, forest, agents, simple):
        with pytest.raises(LangError, match="not an actuator"):
            configure(forest[1], agents, "controller", "t", simple)

    def test_controller_class_mismatch(self, forest, agents, simple, wdn):
        confused = ls.Repository(agents.name, tuple(
            ls.AgentTemplate(t.kind, "valve_cls", t.name, t.protocol)
            if t.name == "controller" else t
            for t in agents.templates
        ))
        with pytest.raises(LangError, match="drives class 'valve_cls'"):
            configure(forest[1], confused, "controller", "u", simple)

    def test_arity_mismatch(self, forest, agents, simple):
        # swap in a single-producer tank_mass template
        single = ls.parse_expression(
            "local { x = loop. producer1? flow. consumer1!head. loop }"
        ).value["x"]
        patched = ls.Repository(agents.name, tuple(
            ls.AgentTemplate(t.kind, t.subject, t.name, single)
            if t.name == "tmass" else t
            for t in agents.templates
        ))
        with pytest.raises(LangError, match="takes 1 producers but"):
            configure(forest[1], patched, "controller", "u", simple)

    def test_signal_enum_mismatch(self, forest, agents, simple):
        flipped = ls.parse_expression(
            "local { x = loop. producer1? signal { UP: loop } or { DOWN: loop } }"
        ).value["x"]
        patched = ls.Repository(agents.name, tuple(
            ls.AgentTemplate(t.kind, t.subject, t.name, flipped)
            if t.name == "pumpActuator" else t
            for t in agents.templates
        ))
        with pytest.raises(LangError, match="disagree on the signal enumeration"):
            configure(forest[1], patched, "controller", "u", simple)

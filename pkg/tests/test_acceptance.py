"""Acceptance suite: the exit criteria, one pass/fail line per criterion.

Each criterion prints ``ACCEPT <name>: PASS`` when its assertions and time
budget hold; any assertion failure marks the criterion FAIL before the test
is reported.  Tolerances and budgets are pinned here, nowhere else.
"""

import random
import time
from contextlib import contextmanager

import pytest

import loopsmith as ls
from loopsmith import Outcome
from loopsmith.interp import SessionEnv, TreeForest, run_source
from loopsmith.parser import parse_expression, parse_program
from loopsmith.printer import (
    print_domain,
    print_global_configuration,
    print_local_configuration,
    print_process,
    print_repository,
)

from conftest import asset_text, golden_text
from generators import GenParams, canonicalize, perturb_configuration, random_global
from oracle import brute_force_trees


@contextmanager
def criterion(name: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPT {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    if elapsed > budget_seconds:
        print(f"ACCEPT {name}: FAIL (took {elapsed:.2f}s, budget {budget_seconds:.0f}s)")
        pytest.fail(f"{name} exceeded its {budget_seconds}s budget: {elapsed:.2f}s")
    print(f"ACCEPT {name}: PASS ({elapsed:.2f}s)")


def test_golden_parse_and_round_trip():
    with criterion("golden-parse", 1.0):
        texts = {
            "appendix domain": golden_text("appendix_domain.lsc"),
            "fig repository": golden_text("fig_repository.lsc"),
            "appendix repository": golden_text("appendix_repository.lsc"),
            "listing 1": golden_text("listing1_verbatim.lsc"),
            "fig session syntax": golden_text("fig_session_syntax.lsc"),
        }
        for label, text in texts.items():
            commands = parse_program(text, label)
            assert commands, f"{label} parsed to nothing"

        # pretty-print and re-parse every value to structural equality
        code, _, env = run_source(asset_text("wdn_example.lsc"))
        assert code == 0
        wdn, agents, simple = (env.bindings[k] for k in ("wdn", "agents", "simple"))
        assert ls.validate_domain(wdn) == []
        assert parse_expression(print_domain(wdn)).value == wdn
        assert parse_expression(print_repository(agents)).value == agents
        assert parse_expression(print_process(simple)).value == simple

        code, _, fig_env = run_source(golden_text("fig_session_syntax.lsc"))
        assert code == 0
        lconfig, gconfig = fig_env.bindings["lconfig"], fig_env.bindings["gconfig"]
        assert parse_expression(print_local_configuration(lconfig)).value == lconfig
        assert parse_expression(print_global_configuration(gconfig)).value == gconfig


def test_seven_tree_reproduction():
    with criterion("seven-trees", 1.0):
        env = SessionEnv()
        code, outputs, env = run_source(asset_text("wdn_example.lsc"), env)
        assert code == 0, "\n".join(outputs)
        code, outputs, env = run_source(
            "seg := translate simple\n"
            "trees := traverse t.head seg\n"
            "lconfig := configure trees[2] agents controller u\n"
            "gconfig := compose lconfig\n",
            env,
        )
        assert code == 0, "\n".join(outputs)
        forest = env.bindings["trees"]
        assert isinstance(forest, TreeForest)
        assert len(forest) == 7
        oracle = brute_force_trees(forest.root, env.bindings["seg"])
        assert {t.canonical() for t in forest.trees} == oracle


def test_failure_reproduction():
    with criterion("failure-two-trees", 1.0):
        code, _, env = run_source(asset_text("wdn_example.lsc"))
        assert code == 0
        wdn, simple = env.bindings["wdn"], env.bindings["simple"]
        broken = ls.remove_device(simple, "dev2")
        forest = ls.traverse(ls.StateNode("t", "head"), ls.translate(broken, wdn))
        assert len(forest) == 2
        tmass = ls.EstimatorNode("t", "tank_mass")
        jmass = ls.EstimatorNode("j", "junction_mass")
        s8_to_outflow_chain = (ls.SensingNode("s8"), ls.StateNode("d", "flow"))
        for tree in forest:
            assert tmass in tree.nodes
            assert jmass in tree.nodes
            assert s8_to_outflow_chain in tree.edges
            assert tree.provider(ls.StateNode("p1", "flow")) == jmass
        via_s2, via_energy = forest
        assert ls.SensingNode("s2") in via_s2.sensing_leaves
        assert ls.EstimatorNode("u", "link_energy") in via_energy.nodes
        assert {ls.SensingNode("s1"), ls.SensingNode("s3")} <= set(via_energy.sensing_leaves)


def test_composition_round_trip():
    with criterion("composition-round-trip", 60.0):
        code, _, env = run_source(golden_text("fig_session_syntax.lsc"))
        assert code == 0
        lconfig, gconfig = env.bindings["lconfig"], env.bindings["gconfig"]
        # the published pair writes the signal branches in different orders,
        # so this one comparison is up to branch permutation
        assert ls.sort_branches(ls.compose(lconfig)) == ls.sort_branches(gconfig)
        projected = ls.project(gconfig, lconfig.participants())
        assert ls.configs_equal_up_to_branch_order(projected, lconfig)

        rng = random.Random(0xC0FFEE)
        params = GenParams(max_depth=8, max_participants=5)
        checked = 0
        while checked < 1000:
            g = random_global(rng, params)
            try:
                config = ls.project(g)
            except ls.ProjectionError:
                continue
            # inverse round trip, exactly
            assert ls.project(ls.compose(config), config.participants()) == config
            # forward round trip on the canonical form produced by project
            canonical = canonicalize(g)
            assert canonicalize(canonical) == canonical
            live = ls.is_live(config, state_budget=100_000)
            assert live.outcome is Outcome.HOLDS, f"projection not live for {g}"
            checked += 1


def test_metatheory_suite():
    with criterion("metatheory", 60.0):
        rng = random.Random(513)
        params = GenParams(max_depth=6, max_participants=4)
        live_count = 0
        checked = 0
        while checked < 1000:
            try:
                config = ls.project(random_global(rng, params))
            except ls.ProjectionError:
                continue
            if rng.random() < 0.5:
                config = perturb_configuration(rng, config)
            live = ls.is_live(config, state_budget=50_000)
            if live.outcome is Outcome.BUDGET_EXCEEDED:
                continue
            if live.outcome is Outcome.HOLDS:
                live_count += 1
                df = ls.is_deadlock_free(config, state_budget=50_000)
                assert df.outcome is Outcome.HOLDS, "live but not deadlock-free"
            checked += 1
        assert live_count >= 100, "too few live samples for a meaningful implication"

        # the published counterexample: deadlock-free but not live
        l3 = ls.LocalConfiguration((
            ("sensor", ls.LRec("t", ls.LPrefix(ls.send("controller", "flow"), ls.LVar("t")))),
            ("controller", ls.LRec("t", ls.LPrefix(ls.receive("sensor", "flow"), ls.LVar("t")))),
            ("est", ls.LPrefix(ls.send("controller", "head"), ls.END)),
        ))
        assert ls.is_deadlock_free(l3).outcome is Outcome.HOLDS
        assert ls.is_live(l3).outcome is Outcome.FAILS


def test_composition_complexity():
    with criterion("composition-complexity", 60.0):
        ratios = []
        for exponent in range(4, 11):
            size = 2 ** exponent
            k = size // 2 - 1
            config = ls.LocalConfiguration((
                ("p", ls.prefix_chain([ls.send("q", "m")] * k)),
                ("q", ls.prefix_chain([ls.receive("p", "m")] * k)),
            ))
            assert ls.config_size(config) == size
            _, steps = ls.compose_with_steps(config)
            ratios.append(steps / size)
        assert max(ratios) <= 4 * min(ratios), f"ratios not flat: {ratios}"


def test_supervisor_scenario():
    with criterion("supervisor-scenario", 5.0):
        scenario = ls.parse_scenario(asset_text("scenario_dev2.scn"))
        result = ls.run_scenario(scenario)
        assert result.status == 0
        assert len(result.trace) == 500
        assert result.reconfigurations == 1
        margin = scenario.dt * scenario.pump_rate / scenario.area
        for step, level, estimate in result.trace:
            assert abs(estimate - level) <= 1e-9
            if step >= 20:
                assert scenario.low - margin <= level <= scenario.high + margin
        reconf = next(e for e in result.events if e.kind == "reconfiguration")
        assert reconf.step == 50
        assert result.active_loop is not None
        sensing = {
            name for name, (template, _) in result.active_loop.assignments
            if template in ("flowSensor", "headSensor")
        }
        assert sensing <= {"s1", "s2", "s3", "s4", "s8"}
        assert "t.tank_mass" in result.active_loop.configuration.participants()

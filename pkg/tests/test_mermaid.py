"""Diagram emission."""

import loopsmith as ls
from loopsmith.mermaid import (
    config_to_mermaid,
    global_to_mermaid,
    graph_to_mermaid,
    to_mermaid,
    tree_to_mermaid,
)


def test_red_tree_diagram_names_its_nodes(forest):
    text = tree_to_mermaid(forest[1])
    for fragment in ("s5", "s7", "t_tank_mass[[t.tank_mass]]", "t_head[t.head]"):
        assert fragment in text
    assert "s5 --> p1_flow" in text


def test_empty_graph_is_header_only(wdn):
    g = ls.translate(ls.ProcessGraph("wdn", (), (), (), ()), wdn)
    text = graph_to_mermaid(g)
    body = [line for line in text.splitlines() if "classDef" not in line]
    assert body == ["flowchart TD"]


def test_configuration_lists_participants(fig3):
    lconfig, _ = fig3
    text = config_to_mermaid(lconfig)
    assert text.splitlines()[0] == "sequenceDiagram"
    for p in ("s1", "s2", "t.tank_mass", "controller", "u"):
        assert f"as {p}" in text


def test_global_choreography_blocks(fig3):
    _, gconfig = fig3
    text = global_to_mermaid(gconfig)
    assert "loop loop" in text
    assert "alt signal = OFF" in text
    assert "s1->>t_tank_mass: flow" in text


def test_stable_across_runs(seg):
    assert graph_to_mermaid(seg) == graph_to_mermaid(seg)


def test_dispatch(forest, agents, simple):
    loop = ls.configure(forest[0], agents, "controller", "u", simple)
    assert to_mermaid(loop).startswith("sequenceDiagram")
    assert to_mermaid(loop.certified).startswith("sequenceDiagram")

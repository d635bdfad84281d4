import sys
from pathlib import Path

import pytest

import loopsmith as ls

sys.setrecursionlimit(100_000)

GOLDEN = Path(__file__).parent / "golden"
ASSETS = Path(ls.__file__).parent / "assets"


def golden_text(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def asset_text(name: str) -> str:
    return (ASSETS / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def wdn_env() -> ls.SessionEnv:
    """Environment with the bundled wdn domain, repository, and process bound."""
    code, outputs, env = ls.run_source(asset_text("wdn_example.lsc"))
    assert code == 0, "\n".join(outputs)
    return env


@pytest.fixture(scope="session")
def wdn(wdn_env) -> ls.IndustrialDomain:
    return wdn_env.bindings["wdn"]


@pytest.fixture(scope="session")
def agents(wdn_env) -> ls.Repository:
    return wdn_env.bindings["agents"]


@pytest.fixture(scope="session")
def simple(wdn_env) -> ls.ProcessGraph:
    return wdn_env.bindings["simple"]


@pytest.fixture(scope="session")
def seg(simple, wdn) -> ls.StateEstimationGraph:
    return ls.translate(simple, wdn)


@pytest.fixture(scope="session")
def forest(seg) -> list[ls.EstimationTree]:
    return ls.traverse(ls.StateNode("t", "head"), seg)


@pytest.fixture(scope="session")
def fig3() -> tuple[ls.LocalConfiguration, ls.GlobalProtocol]:
    code, outputs, env = ls.run_source(golden_text("fig_session_syntax.lsc"))
    assert code == 0, "\n".join(outputs)
    return env.bindings["lconfig"], env.bindings["gconfig"]

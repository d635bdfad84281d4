"""Process knowledge graphs: building, validation, device removal."""

import pytest

import loopsmith as ls
from loopsmith import LangError, remove_device
from loopsmith.process import build_process, validate_process


def test_running_example_counts(simple):
    assert len(simple.devices) == 3
    assert {c.name for c in simple.components} == {"r", "d", "j", "p1", "p2", "t", "u"}
    assert len(simple.sensors) == 8
    assert len(simple.connections) == 14
    u = simple.component_named("u")
    assert u.is_actuator and u.device == "dev1"


def test_sensor_device_bindings(simple):
    by_device = {}
    for s in simple.sensors:
        by_device.setdefault(s.device, set()).add(s.name)
    assert by_device == {
        "dev1": {"s1", "s2", "s3", "s4"},
        "dev2": {"s5", "s6", "s7"},
        "dev3": {"s8"},
    }


def test_empty_process_is_fine(wdn):
    empty = ls.ProcessGraph("wdn", (), (), (), ())
    assert validate_process(empty, wdn) == []


def test_dangling_connection_diagnosed(simple, wdn):
    bad = ls.ProcessGraph(
        simple.domain_name, simple.devices, simple.components, simple.sensors,
        simple.connections + (("p9", "t"),),
    )
    with pytest.raises(LangError, match="unknown node 'p9'"):
        build_process(bad, wdn)


def test_unknown_class_diagnosed(simple, wdn):
    bad = ls.ProcessGraph(
        simple.domain_name, simple.devices,
        simple.components + (ls.ComponentInstance("v1", "valve"),),
        simple.sensors, simple.connections,
    )
    with pytest.raises(LangError, match="unknown class 'valve'"):
        build_process(bad, wdn)


def test_actuator_needs_device(simple, wdn):
    comps = tuple(
        ls.ComponentInstance(c.name, c.class_name, None, c.is_actuator) if c.name == "u" else c
        for c in simple.components
    )
    bad = ls.ProcessGraph(simple.domain_name, simple.devices, comps, simple.sensors,
                          simple.connections)
    with pytest.raises(LangError, match="no device binding"):
        build_process(bad, wdn)


def test_sensor_needs_exactly_one_component(simple, wdn):
    bad = ls.ProcessGraph(
        simple.domain_name, simple.devices, simple.components, simple.sensors,
        simple.connections + (("p1", "s6"),),
    )
    with pytest.raises(LangError, match="exactly one component"):
        build_process(bad, wdn)


class TestRemoveDevice:
    def test_dev2_drops_its_sensors_and_connections(self, simple):
        after = remove_device(simple, "dev2")
        assert {d.name for d in after.devices} == {"dev1", "dev3"}
        assert {s.name for s in after.sensors} == {"s1", "s2", "s3", "s4", "s8"}
        dropped = {("p1", "s5"), ("t", "s6"), ("p2", "s7")}
        assert set(simple.connections) - set(after.connections) == dropped
        assert after.components == simple.components

    def test_dev3_drops_only_s8(self, simple):
        after = remove_device(simple, "dev3")
        assert {s.name for s in after.sensors} == {"s1", "s2", "s3", "s4", "s5", "s6", "s7"}
        assert ("d", "s8") not in after.connections

    def test_unknown_device(self, simple):
        with pytest.raises(LangError, match="unknown device"):
            remove_device(simple, "dev9")

    def test_actuator_device_is_fatal(self, simple):
        with pytest.raises(LangError, match="uncontrollable"):
            remove_device(simple, "dev1")

    def test_idempotent_on_result(self, simple):
        once = remove_device(simple, "dev2")
        assert remove_device(remove_device(simple, "dev3"), "dev2").sensors == \
            remove_device(once, "dev3").sensors

    def test_originals_untouched(self, simple):
        before = simple.sensors
        remove_device(simple, "dev2")
        assert simple.sensors == before

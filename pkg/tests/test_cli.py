"""Command-line behaviour and exit codes."""

from loopsmith.cli import main

from conftest import ASSETS


def test_run_demo_scripts(capsys):
    code = main(["run", str(ASSETS / "wdn_example.lsc"), str(ASSETS / "reasoning_demo.lsc")])
    out = capsys.readouterr().out
    assert code == 0
    assert "7 estimation trees rooted at t.head" in out
    assert "global loop. s5->t.tank_mass:flow." in out


def test_check_is_quiet(capsys):
    code = main(["check", str(ASSETS / "wdn_example.lsc")])
    assert code == 0
    assert capsys.readouterr().out == ""


def test_diagnostics_exit_code(tmp_path, capsys):
    script = tmp_path / "bad.lsc"
    script.write_text("x := compose missing\n", encoding="utf-8")
    code = main(["run", str(script)])
    assert code == 1
    assert "is not bound" in capsys.readouterr().out


def test_syntax_error_position(tmp_path, capsys):
    script = tmp_path / "bad.lsc"
    script.write_text("x := local { p = q! }\n", encoding="utf-8")
    code = main(["run", str(script)])
    assert code == 1
    assert f"{script}:1:" in capsys.readouterr().out


def test_missing_file(capsys):
    assert main(["run", "no_such_file.lsc"]) == 1


def test_mermaid_dir(tmp_path, capsys):
    script = tmp_path / "diagram.lsc"
    script.write_text(
        "seg := translate simple\ntrees := traverse t.head seg\n"
        'diagram trees[2] "tree2.mmd"\n',
        encoding="utf-8",
    )
    code = main([
        "run", "--mermaid-dir", str(tmp_path / "diagrams"),
        str(ASSETS / "wdn_example.lsc"), str(script),
    ])
    assert code == 0
    emitted = (tmp_path / "diagrams" / "tree2.mmd").read_text(encoding="utf-8")
    assert emitted.startswith("flowchart TD")
    assert "t_tank_mass" in emitted


def test_simulate(tmp_path, capsys):
    log = tmp_path / "events.log"
    code = main(["simulate", str(ASSETS / "scenario_dev2.scn"), "--log", str(log)])
    out = capsys.readouterr().out
    assert code == 0
    assert "1 reconfiguration(s)" in out
    assert "failure: device dev2" in log.read_text(encoding="utf-8")

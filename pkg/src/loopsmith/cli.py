"""Command-line entry point: repl, run, check, and simulate subcommands.

Exit codes: 0 on success, 1 when diagnostics were reported, 2 on internal
errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagnostics import LangError
from .interp import SessionEnv, eval_command, run_source
from .parser import UnexpectedEOF, parse_program
from .sim import parse_scenario, run_scenario


def _make_env(args: argparse.Namespace, quiet: bool = False) -> SessionEnv:
    mermaid_dir = Path(args.mermaid_dir) if getattr(args, "mermaid_dir", None) else None
    return SessionEnv(
        state_budget=getattr(args, "state_budget", 100_000),
        mermaid_dir=mermaid_dir,
        quiet=quiet,
    )


def _cmd_run(args: argparse.Namespace, quiet: bool) -> int:
    env = _make_env(args, quiet=quiet)
    for script in args.scripts:
        path = Path(script)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"cannot read {script}: {exc}", file=sys.stderr)
            return 1
        code, outputs, env = run_source(text, env, filename=str(path))
        for line in outputs:
            print(line)
        if code != 0:
            return code
    return 0


def _cmd_repl(args: argparse.Namespace) -> int:
    env = _make_env(args)
    print("loopsmith repl; blank line or Ctrl-D to leave, 'exit' also works")
    buffer = ""
    while True:
        prompt = "... " if buffer else ">>> "
        try:
            line = input(prompt)
        except EOFError:
            print()
            return 0
        if not buffer and line.strip() in ("exit", "quit"):
            return 0
        if not buffer and not line.strip():
            continue
        buffer = f"{buffer}\n{line}" if buffer else line
        try:
            commands = parse_program(buffer, "<repl>")
        except UnexpectedEOF:
            continue  # keep buffering a multi-line construct
        except LangError as exc:
            print(exc.render())
            buffer = ""
            continue
        buffer = ""
        for cmd in commands:
            try:
                out = eval_command(cmd, env)
                if out:
                    print(out)
            except LangError as exc:
                print(exc.render())
                break


def _cmd_simulate(args: argparse.Namespace) -> int:
    path = Path(args.scenario)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {args.scenario}: {exc}", file=sys.stderr)
        return 1
    scenario = parse_scenario(text, base_dir=path.parent)
    result = run_scenario(scenario)
    log_text = result.render_log()
    if args.log:
        Path(args.log).write_text(log_text + "\n", encoding="utf-8")
        summary = [e for e in result.events if e.kind != "control"]
        print("\n".join(e.render() for e in summary))
        print(f"event log ({len(result.events)} events) written to {args.log}")
    else:
        print(log_text)
    if args.timeline:
        Path(args.timeline).write_text(result.render_timeline(), encoding="utf-8")
        print(f"timeline written to {args.timeline}")
    if result.status == 0:
        final = result.trace[-1] if result.trace else (0, float("nan"), float("nan"))
        print(f"completed {len(result.trace)} steps; final level {final[1]:.6f}, "
              f"{result.reconfigurations} reconfiguration(s)")
    return result.status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="loopsmith",
        description="Parse industrial-domain descriptions, reason over state estimation "
                    "graphs, and certify live control-loop configurations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state-budget", type=int, default=100_000,
                        help="visited-state cap for the liveness oracles")
    common.add_argument("--mermaid-dir", default=None,
                        help="directory for diagram files emitted by 'diagram'")

    p_repl = sub.add_parser("repl", parents=[common], help="interactive session")
    p_repl.set_defaults(func=lambda a: _cmd_repl(a))

    p_run = sub.add_parser("run", parents=[common], help="evaluate script files in order")
    p_run.add_argument("scripts", nargs="+")
    p_run.set_defaults(func=lambda a: _cmd_run(a, quiet=False))

    p_check = sub.add_parser("check", parents=[common],
                             help="parse and validate scripts without output or file writes")
    p_check.add_argument("scripts", nargs="+")
    p_check.set_defaults(func=lambda a: _cmd_run(a, quiet=True))

    p_sim = sub.add_parser("simulate", help="run an autonomic-supervisor scenario")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--log", default=None, help="write the full event log to a file")
    p_sim.add_argument("--timeline", default=None,
                       help="write a Mermaid timeline of the notable events")
    p_sim.set_defaults(func=_cmd_simulate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LangError as exc:
        print(exc.render(), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort guard for exit code 2
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

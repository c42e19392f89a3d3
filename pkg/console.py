"""
Colored console output.

Everything goes to stderr so that stdout only ever carries an emitted report.
"""

import sys

from termcolor import colored

from config import is_verbose


def print_banner(title: str, details: dict) -> None:
    """
    Print a run header.

    Args:
        title: Headline (usually the subcommand)
        details: Key/value pairs echoed under the headline
    """
    print(colored(f"▶ {title}", "blue", attrs=["bold"]), file=sys.stderr)
    print(colored("━" * 48, "blue"), file=sys.stderr)
    for key, value in details.items():
        print(colored(f"  {key}: ", "magenta") + str(value), file=sys.stderr)


def print_step(message: str, **fields) -> None:
    """Progress line; shown only when BLOCKRANK_VERBOSE is set."""
    if not is_verbose():
        return
    print(colored("🔧 ", "cyan") + colored(message, "cyan"), end="", file=sys.stderr)
    if fields:
        args_str = ", ".join(f"{k}={v}" for k, v in fields.items())
        print(colored(f"  ({args_str})", "cyan"), end="", file=sys.stderr)
    print(file=sys.stderr)


def warn(message: str) -> None:
    print(colored(f"⚠ {message}", "yellow"), file=sys.stderr)


def print_verdict(name: str, passed: bool, detail: str = "") -> None:
    mark, color = ("PASS", "green") if passed else ("FAIL", "red")
    line = colored(f"[{mark}] ", color, attrs=["bold"]) + colored(name, color)
    if detail:
        line += f"  {detail}"
    print(line, file=sys.stderr)


def print_error(message: str) -> None:
    print(colored(f"Error: {message}", "red"), file=sys.stderr)

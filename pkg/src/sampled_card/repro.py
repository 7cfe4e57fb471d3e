"""Run a reproduction manifest and report pass/fail per check.

A manifest is plain text, one record per line, ``|``-separated::

    id | invocation | selector | checks | origin

``invocation`` is a ``sampled-card`` argument string.  ``selector`` picks one
output row (``key=value,key=value``; ``*`` for single-object JSON output).
``checks`` is a ``;``-separated list of ``column in [lo, hi]``,
``column <= x`` or ``column >= x``; an ``in`` check may carry a second band,
``fast [lo, hi]``, used when the manifest is run with ``--fast``.
``origin`` says where the band comes from: ``published`` (a number reported
for the original experiment) or ``derived`` (an internal consistency bound).
Identical invocations run once and share their output.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import re
import shlex
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import cli

_CHECK = re.compile(
    r"^\s*(?P<col>\w+)\s*(?:"
    r"in\s*\[(?P<lo>[^,\]]+),(?P<hi>[^\]]+)\]"
    r"(?:\s*fast\s*\[(?P<flo>[^,\]]+),(?P<fhi>[^\]]+)\])?"
    r"|(?P<op><=|>=)\s*(?P<x>\S+))\s*$"
)


@dataclass(frozen=True)
class Check:
    column: str
    lo: float
    hi: float
    fast_lo: Optional[float] = None
    fast_hi: Optional[float] = None

    def band(self, fast: bool) -> tuple[float, float]:
        if fast and self.fast_lo is not None:
            return self.fast_lo, self.fast_hi
        return self.lo, self.hi


@dataclass(frozen=True)
class Entry:
    id: str
    invocation: str
    selector: str
    checks: tuple
    origin: str


@dataclass(frozen=True)
class Outcome:
    id: str
    column: str
    value: Optional[float]
    lo: float
    hi: float
    passed: bool
    origin: str
    note: str = ""


def parse_check(text: str) -> Check:
    mt = _CHECK.match(text)
    if not mt:
        raise ValueError(f"cannot parse check {text!r}")
    col = mt["col"]
    if mt["op"]:
        x = float(mt["x"])
        return Check(col, -math.inf, x) if mt["op"] == "<=" else Check(col, x, math.inf)
    flo = float(mt["flo"]) if mt["flo"] else None
    fhi = float(mt["fhi"]) if mt["fhi"] else None
    return Check(col, float(mt["lo"]), float(mt["hi"]), flo, fhi)


def parse_manifest(text: str) -> list[Entry]:
    entries = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected 5 '|'-separated fields, got {len(fields)}")
        ident, invocation, selector, checks, origin = fields
        if ident in seen:
            raise ValueError(f"line {lineno}: duplicate id {ident!r}")
        seen.add(ident)
        parsed = tuple(parse_check(c) for c in checks.split(";") if c.strip())
        entries.append(Entry(ident, invocation, selector, parsed, origin))
    return entries


def default_manifest_text() -> str:
    return resources.files("sampled_card").joinpath("data/repro_manifest.txt").read_text()


def load_manifest(path: Optional[str | Path] = None) -> list[Entry]:
    text = default_manifest_text() if path is None else Path(path).read_text()
    return parse_manifest(text)


def cli_runner(argv: Sequence[str]) -> tuple[int, str]:
    """Run the CLI in-process and capture stdout."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def _rows(output: str) -> list[dict]:
    text = output.strip()
    if text.startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return list(csv.DictReader(io.StringIO(text)))


def _as_float(v) -> Optional[float]:
    if v is None or v == "":
        return None
    try:
        return float(v)
    except (TypeError, ValueError):
        return None


def _matches(row: dict, selector: str) -> bool:
    if selector == "*":
        return True
    for clause in selector.split(","):
        key, _, want = clause.partition("=")
        have = row.get(key.strip())
        a, b = _as_float(have), _as_float(want.strip())
        if a is not None and b is not None:
            if not math.isclose(a, b, rel_tol=1e-6, abs_tol=1e-12):
                return False
        elif str(have) != want.strip():
            return False
    return True


def run_repro(entries: Sequence[Entry], fast: bool = False,
              runner: Callable[[Sequence[str]], tuple[int, str]] = cli_runner) -> list[Outcome]:
    cache: dict[tuple, tuple[int, str]] = {}
    outcomes = []
    for e in entries:
        argv = shlex.split(e.invocation)
        if fast and argv and argv[0] == "simulate" and "--fast" not in argv:
            argv.append("--fast")
        key = tuple(argv)
        if key not in cache:
            cache[key] = runner(argv)
        code, out = cache[key]
        rows = [r for r in _rows(out) if _matches(r, e.selector)] if code == 0 else []
        for c in e.checks:
            lo, hi = c.band(fast)
            if code != 0:
                outcomes.append(Outcome(e.id, c.column, None, lo, hi, False, e.origin, f"exit {code}"))
                continue
            if len(rows) != 1:
                outcomes.append(Outcome(e.id, c.column, None, lo, hi, False, e.origin,
                                        f"selector matched {len(rows)} rows"))
                continue
            value = _as_float(rows[0].get(c.column))
            ok = value is not None and lo <= value <= hi
            outcomes.append(Outcome(e.id, c.column, value, lo, hi, ok, e.origin))
    return outcomes


def write_report(outcomes: Sequence[Outcome], stream=None) -> None:
    stream = stream or sys.stdout
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["id", "column", "value", "lo", "hi", "status", "origin", "note"])
    for o in outcomes:
        w.writerow([o.id, o.column, "" if o.value is None else f"{o.value:.6g}",
                    f"{o.lo:g}", f"{o.hi:g}", "pass" if o.passed else "FAIL", o.origin, o.note])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="sampled-card-repro",
                                     description="Run a reproduction manifest; CSV report on stdout.")
    parser.add_argument("manifest", nargs="?", default=None, help="manifest file (default: bundled)")
    parser.add_argument("--fast", action="store_true", help="run simulations with --fast and fast bands")
    parser.add_argument("--only", action="append", default=[], help="run ids with this prefix (repeatable)")
    args = parser.parse_args(argv)
    entries = load_manifest(args.manifest)
    if args.only:
        entries = [e for e in entries if any(e.id.startswith(p) for p in args.only)]
    outcomes = run_repro(entries, fast=args.fast)
    write_report(outcomes)
    failed = sorted({o.id for o in outcomes if not o.passed})
    print(f"{len(entries)} rows, {len(outcomes)} checks, {len(failed)} rows failing"
          + (f": {', '.join(failed)}" if failed else ""), file=sys.stderr)
    return 1 if failed else 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

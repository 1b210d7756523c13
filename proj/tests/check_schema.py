#!/usr/bin/env python3
"""Validate one JSON report per subcommand against the published schema."""

import json
import subprocess
import sys

import jsonschema

COMMANDS = [
    ["kl", "--q", "101", "--z", "3"],
    ["table", "--q", "101", "--verify"],
    ["weil", "--q", "101", "--trials", "20"],
    ["pi-ap", "--x", "1000", "--q", "7", "--a", "3"],
    ["bt-scan", "--x", "10000", "--q", "101"],
    ["poisson-check", "--d-max", "3"],
    ["quint", "--q", "101", "--H", "2", "--K", "2", "--N", "2"],
    ["sigma", "--q", "101", "--M", "20"],
    ["shift-check", "--shifts", "2", "--H", "4"],
    ["rho", "--H", "1", "--S", "1"],
    ["moments", "--q", "101", "--M", "3"],
    ["strata", "--q", "101", "--M", "4"],
    ["bounds", "--varpi", "1/2", "--nu", "8"],
    ["optimize", "--varpi", "0.507"],
    ["plan", "--x", "1e12", "--q", "1000003"],
]


def main():
    binary, schema_path = sys.argv[1], sys.argv[2]
    with open(schema_path) as f:
        schema = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    for args in COMMANDS:
        proc = subprocess.run([binary, "--seed", "1"] + args, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"FAIL {args[0]}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        report = json.loads(proc.stdout)
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors:
            print(f"FAIL {args[0]}: {'/'.join(map(str, e.path))}: {e.message}")
        failures += bool(errors)
        if not errors:
            print(f"ok   {args[0]}")
    # The schema must reject a damaged report.
    bad = json.loads(subprocess.run([binary] + COMMANDS[0], capture_output=True, text=True).stdout)
    bad["rng"] = "mt19937"
    if validator.is_valid(bad):
        print("FAIL schema accepts a report with the wrong generator name")
        failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

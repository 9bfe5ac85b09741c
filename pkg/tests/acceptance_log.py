"""Collects one result line per acceptance criterion for the terminal summary."""

LINES: dict[int, str] = {}


def report(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    LINES[number] = line
    print(line)
    return passed

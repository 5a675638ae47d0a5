"""Collects the one-line verdict of each acceptance criterion."""

LINES: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    LINES[number] = line
    print(line)

"""Shared frames and random generators for the test suite."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest

from heiscalc.geometry import frame_from_strings

H3_ROWS = [["1", "0", "0"], ["x2", "1", "0"], ["-x1", "0", "1"]]
FOLIATION_ROWS = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
SHEAR_ROWS = [["1", "0", "0"], ["0", "1", "0"], ["x1", "0", "1"]]


@pytest.fixture
def h3_frame():
    return frame_from_strings(H3_ROWS)


@pytest.fixture
def shear_frame():
    return frame_from_strings(SHEAR_ROWS)


def rational(rng: random.Random, lo: int = -3, hi: int = 3, den: int = 4) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), den)


def random_poly_text(rng: random.Random, dim: int, terms: int = 3, max_deg: int = 2) -> str:
    """Random polynomial with rational coefficients and no constant term."""
    parts = []
    for _ in range(terms):
        c = rational(rng)
        if c == 0:
            continue
        deg = rng.randint(1, max_deg)
        mono = "*".join(f"x{rng.randrange(dim)}" for _ in range(deg))
        parts.append(f"({c})*{mono}")
    return " + ".join(parts) if parts else "0"


def random_frame_rows(rng: random.Random, d: int, terms: int = 2) -> list:
    """Frame rows X_j = e_j + polynomial perturbation vanishing at the origin."""
    dim = d + 1
    rows = []
    for j in range(dim):
        row = []
        for k in range(dim):
            base = "1" if j == k else "0"
            if rng.random() < 0.5:
                row.append(f"{base} + {random_poly_text(rng, dim, terms)}")
            else:
                row.append(base)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# acceptance summary

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)

import textwrap

import numpy as np
import pytest

from spinsym import problemfile
from spinsym.errors import ParseError
from spinsym.gauge import Group

CHART4 = """
[chart]
dim = 4
lo = 0
hi = 1
periodic = true
n = 8
"""

FRAME4 = """
[frame]
e1 = 1, 0, 0, 0
e2 = 0, 1, 0, 0
e3 = 0, 0, 1, 0
e4 = 0, 0, 0, 1
"""


def parse(*blocks, **kw):
    return problemfile.loads("\n".join(textwrap.dedent(b) for b in blocks), **kw)


def test_frame_file():
    prob = parse(CHART4, FRAME4)
    assert prob.chart.dim == 4 and prob.chart.n == (8,) * 4
    np.testing.assert_array_equal(prob.frame(np.zeros(4)), np.eye(4))
    assert prob.operator is None and prob.potential is None


def test_per_axis_chart_values_and_grid_override():
    prob = parse("""
        [chart]
        dim = 3
        lo = 0, 0, -1
        hi = 1, 2, 1
        periodic = true, true, false
        n = 8, 10, 12
        [frame]
        e1 = 1, 0, 0
        e2 = 0, 1, 0
        e3 = 0, 0, 1
    """, grid_override=9)
    c = prob.chart
    assert c.lo == (0, 0, -1) and c.hi == (1, 2, 1)
    assert c.periodic == (True, True, False)
    assert c.n == (9, 9, 9)


def test_operator_file():
    prob = parse(CHART4, """
        [operator.F1.im]
        row1 = 0, -1
        row2 = -1, 0
        [operator.F2.im]
        row1 = 0, -1
        row2 = 1, 0
        [operator.F2.re]
        row1 = 0, 0
        row2 = 0, 0
        [operator.F3.im]
        row1 = -1, 0
        row2 = 0, 1
        [operator.F4.im]
        row1 = -1, 0
        row2 = 0, -1
        [operator.G.re]
        row1 = x1, 0
        row2 = 0, 0
    """)
    op = prob.operator
    x = np.array([[0.25, 0, 0, 0]])
    np.testing.assert_allclose(op.G(x)[0], [[0.25, 0], [0, 0]])
    np.testing.assert_allclose(op.F(x)[0, 0], [[0, -1j], [-1j, 0]])


def test_potential_gauge_q_frame2():
    prob = parse(CHART4, FRAME4, """
        [frame2]
        e1 = 1, 0, 0, 0
        e2 = 0, 1, 0, 0
        e3 = 0, 0, 1, 0
        e4 = 0, 0, 0, 1
        [potential]
        A = 0, 0, 0, sin(2*pi*x1)
        [q]
        q = 0, 0, 0, 1
        [gauge.re]
        row1 = 1, 0
        row2 = 0, 1
    """)
    x = np.array([[0.25, 0, 0, 0]])
    np.testing.assert_allclose(prob.potential(x)[0], [0, 0, 0, 1])
    np.testing.assert_allclose(prob.q(x)[0], [0, 0, 0, 1])
    assert prob.gauge.group is Group.SL2C
    np.testing.assert_allclose(prob.gauge.R(x)[0], np.eye(2))
    assert prob.frame2 is not None
    assert set(prob.echo) == {"chart", "frame", "frame2", "potential", "q", "gauge.re"}


@pytest.mark.parametrize("text, match", [
    (FRAME4, "missing \\[chart\\]"),
    (CHART4, "exactly one"),
    (CHART4 + FRAME4 + "[operator.G.re]\nrow1 = 0, 0\nrow2 = 0, 0\n", "exactly one"),
    (CHART4 + FRAME4 + "[bogus]\nx = 1\n", "unknown sections"),
    (CHART4.replace("dim = 4", "dim = 5") + FRAME4, "dim must be 3 or 4"),
    (CHART4.replace("n = 8", "n = 4") + FRAME4, "chart"),
    (CHART4.replace("periodic = true", "periodic = maybe") + FRAME4, "not a boolean"),
    (CHART4 + FRAME4.replace("e4 = 0, 0, 0, 1", "e4 = 0, 0, 1"), "expected 4 entries"),
    (CHART4 + FRAME4.replace("e4 = 0, 0, 0, 1", ""), "missing row e4"),
    (CHART4 + FRAME4.replace("e4 = 0, 0, 0, 1", "e4 = 0, 0, 0, 1 +"), "\\[frame\\] e4"),
    (CHART4 + FRAME4.replace("e4 = 0, 0, 0, 1", "e4 = 0, 0, 0, x5"), "\\[frame\\] e4"),
    (CHART4 + FRAME4 + "[gauge]\ngroup = SO3\n[gauge.re]\nrow1 = 1, 0\nrow2 = 0, 1\n", "gauge"),
    (CHART4 + FRAME4 + "[potential]\nA = 0, 0\n", "expected 4 entries"),
    ("[chart\ndim = 4", "malformed"),
])
def test_parse_errors(text, match):
    with pytest.raises(ParseError, match=match):
        problemfile.loads(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read"):
        problemfile.load(tmp_path / "absent.ini")


def test_shipped_examples_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "problems"
    files = sorted(root.glob("*.ini"))
    assert len(files) >= 12
    for f in files:
        problemfile.load(f)


def test_operator_needs_some_part_of_every_coefficient():
    with pytest.raises(ParseError, match="operator.F3"):
        parse(CHART4, """
            [operator.F1.im]
            row1 = 0, -1
            row2 = -1, 0
            [operator.F2.im]
            row1 = 0, -1
            row2 = 1, 0
            [operator.F4.im]
            row1 = -1, 0
            row2 = 0, -1
            [operator.G.re]
            row1 = 0, 0
            row2 = 0, 0
        """)

import re

import numpy as np
import pytest

from polypush.complex_core import SimplicialComplex
from polypush.pushout import SetModel, cone_build, push
from polypush.render import SIZE, MARGIN, UnsupportedRenderError, render_svg

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def tri():
    cx = SimplicialComplex(TRI, [(0, 1, 2)])
    return cx.with_q(range(len(cx)))


def count(svg, cls):
    return len(re.findall(rf'class="{cls}"', svg))


def test_scene_with_one_sample_and_apex():
    cx = tri()
    S = SetModel(1.0, [[1 / 3, 1 / 6]], [0], [0.1])
    cone = cone_build(cx.simplex(0), [1 / 3, 1 / 3], S.points)
    svg = render_svg(cx, S, cone)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert count(svg, "edge q") == 3
    assert len(re.findall(r'class="point', svg)) == 2
    assert count(svg, "point apex") == 1
    assert count(svg, "ray") == 1


def _to_world(x, y, lo=0.0, span=1.0):
    k = (SIZE - 2 * MARGIN) / span
    return lo + (x - MARGIN) / k, lo + (SIZE - MARGIN - y) / k


def test_pushed_image_lies_on_boundary():
    cx = tri()
    S = SetModel(1.0, [[1 / 3, 1 / 6]], [0], [0.1])
    S2, _ = push(cx, S, 0, [1 / 3, 1 / 3])
    svg = render_svg(cx, S2)
    (cx_, cy_), = re.findall(r'class="point" cx="([\d.]+)" cy="([\d.]+)"', svg)
    x, y = _to_world(float(cx_), float(cy_))
    assert abs(y) < 1e-3 and 0 < x < 1


def test_complex_only():
    svg = render_svg(tri(), SetModel.empty(1.0, 2))
    assert count(svg, "point") == 0 and count(svg, "ray") == 0
    assert count(svg, "edge q") == 3 and count(svg, "qface") == 1


def test_edges_outside_q_are_plain():
    cx = SimplicialComplex([[0, 0], [1, 0], [0, 1], [1, 1]], [(0, 1, 2), (1, 2, 3)]).with_q([0])
    svg = render_svg(cx)
    assert count(svg, "edge q") == 3 and count(svg, "edge") == 2


def test_flags_are_drawn():
    cx = tri()
    S = SetModel.empty(1.0, 2, {cx.id_of((0, 1))}).normalized(cx)
    svg = render_svg(cx, S)
    assert count(svg, "flag") == 3  # the edge and its two vertices


def test_three_dimensional_needs_projection():
    V = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    cx = SimplicialComplex(V, [(0, 1, 2, 3)])
    with pytest.raises(UnsupportedRenderError):
        render_svg(cx)
    svg = render_svg(cx, project=(0, 2))
    assert count(svg, "edge") == 6


def test_render_is_deterministic():
    cx = tri()
    S = SetModel(1.0, [[0.2, 0.1], [0.1, 0.3]], [0, 0], [0.1, 0.1])
    assert render_svg(cx, S) == render_svg(cx, S)

"""Deterministic SVG drawings of 2D scenes (or 2D projections)."""

from __future__ import annotations

import numpy as np

from .complex_core import SimplicialComplex
from .errors import InvalidInputError

SIZE = 480
MARGIN = 24


class UnsupportedRenderError(InvalidInputError):
    """Ambient dimension above 2 without a projection."""


def _fmt(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    def __init__(self, pts: np.ndarray):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        self.lo, self.k = lo, (SIZE - 2 * MARGIN) / span

    def __call__(self, p):
        x = MARGIN + (p[0] - self.lo[0]) * self.k
        y = SIZE - MARGIN - (p[1] - self.lo[1]) * self.k
        return _fmt(x), _fmt(y)


def _proj(cx: SimplicialComplex, project):
    N = cx.ambient_dim
    if project is None:
        if N > 2:
            raise UnsupportedRenderError("ambient dimension > 2 needs a projection i,j")
        idx = [0, 1] if N == 2 else [0, 0]
    else:
        idx = [int(i) for i in project]
        if len(idx) != 2 or min(idx) < 0 or max(idx) >= N:
            raise InvalidInputError("projection indices out of range")

    def f(P):
        P = np.asarray(P, float)
        out = P[..., idx].copy()
        if N == 1 and project is None:
            out[..., 1] = 0.0
        return out

    return f


def render_svg(cx: SimplicialComplex, S=None, cone=None, project=None) -> str:
    """SVG of the complex with Q shaded, samples, flags and an optional cone overlay.

    Element classes: ``edge`` (``edge q`` inside Q), ``qface``, ``flag``,
    ``point`` (samples and the apex, the apex also tagged ``apex``) and ``ray``.
    """
    pr = _proj(cx, project)
    V = pr(cx.vertices)
    fr = _Frame(V)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for i, s in enumerate(cx.simplices):
        if cx.dims[i] == 2 and cx.q_marks[i]:
            pts = " ".join(",".join(fr(V[v])) for v in s)
            out.append(f'<polygon class="qface" points="{pts}" fill="#dde8f7" stroke="none"/>')
    edges = set()
    for s in cx.simplices:
        for u in range(len(s)):
            for w in range(u + 1, len(s)):
                edges.add((s[u], s[w]))
    for e in sorted(edges):
        eid = cx.index.get(e)
        inq = eid is not None and cx.q_marks[eid]
        (x1, y1), (x2, y2) = fr(V[e[0]]), fr(V[e[1]])
        cls, col = ("edge q", "#2b5fad") if inq else ("edge", "#888888")
        out.append(f'<line class="{cls}" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{col}" stroke-width="1"/>')
    if S is not None:
        for f in sorted(S.full):
            s = cx.simplices[f]
            if len(s) == 1:
                x, y = fr(V[s[0]])
                out.append(f'<rect class="flag" x="{_fmt(float(x) - 4)}" y="{_fmt(float(y) - 4)}" width="8" height="8" fill="#c03030"/>')
            elif len(s) == 2:
                (x1, y1), (x2, y2) = fr(V[s[0]]), fr(V[s[1]])
                out.append(f'<line class="flag" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#c03030" stroke-width="3"/>')
    if cone is not None:
        z = pr(cone.z)
        for img in pr(cone.images):
            (x1, y1), (x2, y2) = fr(z), fr(img)
            out.append(f'<line class="ray" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#e08a00" stroke-dasharray="4 2"/>')
    if S is not None:
        for p in pr(S.points):
            x, y = fr(p)
            out.append(f'<circle class="point" cx="{x}" cy="{y}" r="3" fill="black"/>')
    if cone is not None:
        x, y = fr(pr(cone.z))
        out.append(f'<circle class="point apex" cx="{x}" cy="{y}" r="4" fill="#e08a00"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

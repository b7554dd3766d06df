"""Deterministic SVG rendering of trees, triangle families and certificates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .bases import TriangleFamily
from .geometry import ConvexPolygon
from .maximal import LevelSetCertificate
from .perron import PerronTree, half_triangle


@dataclass(frozen=True)
class SvgStyle:
    width: int = 800
    precision: int = 6          # significant digits for coordinates
    margin: float = 0.05        # fraction of the drawing extent
    fill: str = "#4a7ab5"
    second_fill: str = "#d9822b"
    opacity: float = 0.35
    stroke_width: float = 0.75


DEFAULT_FRAME = (0.0, -0.25, 1.5, 1.25)


def _num(v: float, digits: int) -> str:
    s = f"{v:.{digits}g}"
    return "0" if s in ("-0", "0") else s


class _Canvas:
    def __init__(self, layers: Sequence[tuple[str, list[ConvexPolygon], str]], style: SvgStyle):
        self.style = style
        self.layers = layers
        pts = [(float(p.x), float(p.y)) for _, polys, _ in layers for P in polys for p in P.vertices]
        if pts:
            x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
            y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
            if x1 <= x0 or y1 <= y0:
                raise ValueError("degenerate bounding box")
        else:
            x0, y0, x1, y1 = DEFAULT_FRAME
        pad = style.margin * max(x1 - x0, y1 - y0)
        self.x0, self.y0, self.x1, self.y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
        self.scale = style.width / (self.x1 - self.x0)
        self.height = max(1, round((self.y1 - self.y0) * self.scale))

    def px(self, x: float) -> str:
        return _num((x - self.x0) * self.scale, self.style.precision)

    def py(self, y: float) -> str:
        return _num((self.y1 - y) * self.scale, self.style.precision)

    def xy(self, x: float, y: float) -> str:
        return f"{self.px(x)},{self.py(y)}"

    def render(self, title: str) -> str:
        st = self.style
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{st.width}" height="{self.height}" '
            f'viewBox="0 0 {st.width} {self.height}">',
            f"<title>{title}</title>",
            '<g id="axes" stroke="#888888" stroke-width="0.5" fill="none">',
            f'<line x1="{self.px(self.x0)}" y1="{self.py(0)}" x2="{self.px(self.x1)}" y2="{self.py(0)}"/>',
            f'<line x1="{self.px(0)}" y1="{self.py(self.y0)}" x2="{self.px(0)}" y2="{self.py(self.y1)}"/>',
            "</g>",
        ]
        for name, polys, fill in self.layers:
            out.append(f'<g id="{name}" fill="{fill}" fill-opacity="{st.opacity}" stroke="#222222" '
                       f'stroke-width="{st.stroke_width}">')
            for P in polys:
                pts = " ".join(self.xy(float(p.x), float(p.y)) for p in P.vertices)
                out.append(f'<polygon points="{pts}"/>')
            out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"


def render_svg(obj, style: SvgStyle = SvgStyle()) -> str:
    if isinstance(obj, PerronTree):
        tris = list(obj.X)
        halves = [half_triangle(obj.family, k, obj.shifts[k], "next") for k in obj.indices]
        layers = [("triangles", tris, style.fill), ("half-triangles", halves, style.second_fill)]
        title = f"Perron tree n={obj.scale.n} N={obj.scale.N}"
    elif isinstance(obj, TriangleFamily):
        layers = [("triangles", [obj.delta(k) for k in obj.indices()], style.fill)]
        if obj.basis_triangles:
            layers.append(("basis-triangles", [obj.basis_triangles[k] for k in sorted(obj.basis_triangles)],
                           style.second_fill))
        title = f"triangle family k={obj.k_min}..{obj.k_max}"
    elif isinstance(obj, LevelSetCertificate):
        layers = [("certified-parts", obj.polygons, style.second_fill)]
        title = f"level-set certificate, threshold {obj.threshold}"
    else:
        raise TypeError(f"cannot render {type(obj).__name__}")
    return _Canvas(layers, style).render(title)

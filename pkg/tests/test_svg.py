import xml.etree.ElementTree as ET

import pytest
from gmpy2 import mpq

from perronlab.bases import IndexedSequence, build_triangle_family
from perronlab.geometry import ConvexPolygon, Point, triangle
from perronlab.maximal import CertifiedPart, LevelSetCertificate, level_set_from_perron
from perronlab.perron import PerronScale, build_perron_tree
from perronlab.svg import SvgStyle, render_svg

NS = {"s": "http://www.w3.org/2000/svg"}


def harmonic_family(k_max=20):
    t = IndexedSequence(1, tuple(mpq(1, k) for k in range(1, k_max + 1)))
    e = IndexedSequence(1, tuple((t[k] - t[k + 1]) / 2 for k in range(1, k_max)))
    return build_triangle_family(t, e)


def layers(svg):
    root = ET.fromstring(svg.encode())
    return {g.get("id"): g.findall("s:polygon", NS) for g in root.findall("s:g", NS)}


def test_empty_certificate_draws_axes_only():
    got = layers(render_svg(LevelSetCertificate.empty(mpq(1, 4))))
    assert len(got["axes"]) == 0 and got["certified-parts"] == []
    root = ET.fromstring(render_svg(LevelSetCertificate.empty(mpq(1, 4))).encode())
    assert len(root.findall("s:g/s:line", NS)) == 2


def test_tree_layers():
    fam = harmonic_family()
    tree = build_perron_tree(fam, PerronScale(mpq(9, 10), 3, 0))
    got = layers(render_svg(tree))
    assert len(got["triangles"]) == 8 and len(got["half-triangles"]) == 8
    cert = level_set_from_perron(tree, fam, 1)
    assert len(layers(render_svg(cert))["certified-parts"]) == 8


def test_fan_and_determinism():
    fam = build_triangle_family(IndexedSequence(1, tuple(mpq(1, k) for k in range(1, 10))), None, 1, 8)
    a = render_svg(fam)
    assert a == render_svg(fam)
    assert len(layers(a)["triangles"]) == 8
    assert "basis-triangles" not in layers(a)
    coarse = render_svg(fam, SvgStyle(precision=3))
    assert coarse != a and len(coarse) < len(a)


def test_degenerate_and_unknown_inputs():
    cert = LevelSetCertificate.empty(mpq(1, 4))
    thin = type(cert)(mpq(1, 4), (), mpq(0))
    assert render_svg(thin) == render_svg(cert)
    segment = ConvexPolygon((Point(0, 0), Point(1, 0)))
    flat = type(cert)(mpq(1, 4), (CertifiedPart(1, segment, 2, Point(0, 0), mpq(1, 4), False),), mpq(0))
    with pytest.raises(ValueError, match="degenerate"):
        render_svg(flat)
    with pytest.raises(TypeError):
        render_svg(triangle((0, 0), (1, 0), (0, 1)))

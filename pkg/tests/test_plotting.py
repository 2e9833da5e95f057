import numpy as np
import pytest

from twowell.config import SweepRow
from twowell.fitting import fit_rows
from twowell.plotting import emit_geometry_plot, emit_plot


def _rows(a=2 / 3, flag_first=True):
    eps = np.geomspace(1e-6, 1e-2, 10)
    rows = [SweepRow(e, 8, e**a, 1.0, e**a) for e in eps]
    if flag_first:
        rows[0] = SweepRow(eps[0], 2, eps[0] ** a, 1.0, eps[0] ** a, "N<4")
    return rows


def test_plot_svg_has_reference_slope(tmp_path):
    rows = _rows()
    out = emit_plot([("upper", rows, fit_rows(rows, 2 / 3))], tmp_path / "s.svg", title="demo")
    text = out.read_text()
    assert "2/3" in text and "flagged" in text


def test_plot_png_two_series(tmp_path):
    a, b = _rows(0.8, False), _rows(0.5, False)
    out = emit_plot([("upper", a, fit_rows(a, 0.8)), ("lower", b, None)], tmp_path / "s.png")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_refuses_empty(tmp_path):
    with pytest.raises(ValueError, match="no rows"):
        emit_plot([("upper", [], None)], tmp_path / "e.png")
    assert not (tmp_path / "e.png").exists()


def test_plot_path_checks(tmp_path):
    with pytest.raises(ValueError):
        emit_plot([("u", _rows(), None)], tmp_path / "noext")
    with pytest.raises(OSError):
        emit_plot([("u", _rows(), None)], tmp_path / "missing" / "a.png")


def test_geometry_plot(tmp_path):
    curves = [np.array([[0.25, 0.0], [0.25, 1.0]]), np.array([[0.5, 0.5], [0.75, 1.0]])]
    assert emit_geometry_plot(curves, tmp_path / "g.png").stat().st_size > 0
    with pytest.raises(ValueError):
        emit_geometry_plot([], tmp_path / "h.png")

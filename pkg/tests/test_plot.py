import re

import pytest

from abscs.errors import CsvParseError, EmptyInputError
from abscs.harness import AGGREGATE_HEADER
from abscs.plot import emit_plot, read_aggregate_csv, render_svg

HEADER = ",".join(AGGREGATE_HEADER)


def _row(method, alpha, nmse, r_x=0.75):
    return f"{method},{alpha},{r_x},32,3,10,{nmse},0,1,1"


def _write(tmp_path, lines):
    p = tmp_path / "in.csv"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_one_polyline_per_method(tmp_path):
    p = _write(tmp_path, [HEADER] + [_row(m, a, v) for m in ("abs", "nearest-neighbor")
                                     for a, v in ((0.1, 0.9), (0.25, 0.2), (0.5, 0.3))])
    out = tmp_path / "out.svg"
    emit_plot(p, out)
    svg = out.read_text()
    assert svg.count("<polyline") == 2
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert "abs" in svg and "nearest-neighbor" in svg


def test_unit_nmse_is_zero_db(tmp_path):
    rows = read_aggregate_csv(_write(tmp_path, [HEADER, _row("support-set", 0.25, 1), _row("support-set", 0.5, 1)]))
    svg = render_svg(rows + [dict(rows[0], method="abs", nmse=0.01)], axis="alpha")
    # the 0 dB tick and the support-set polyline sit on the same pixel row
    tick = re.search(r'<text x="[\d.]+" y="([\d.]+)" text-anchor="end">0</text>', svg)
    pts = re.search(r'<polyline data-method="support-set"[^>]*points="([^"]+)"', svg)
    ys = {float(p.split(",")[1]) for p in pts.group(1).split()}
    assert len(ys) == 1
    assert ys.pop() == pytest.approx(float(tick.group(1)) - 4, abs=0.01)


def test_empty_input(tmp_path):
    with pytest.raises(EmptyInputError):
        read_aggregate_csv(_write(tmp_path, [HEADER]))
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(EmptyInputError):
        read_aggregate_csv(empty)


def test_malformed_row_reports_line(tmp_path):
    p = _write(tmp_path, [HEADER, _row("abs", 0.25, 0.5), "abs,0.5,0.75,64,1,10,notanumber,0,1,1"])
    with pytest.raises(CsvParseError, match="line 3"):
        read_aggregate_csv(p)
    p = _write(tmp_path, [HEADER, "abs,0.25"])
    with pytest.raises(CsvParseError, match="line 2"):
        read_aggregate_csv(p)


def test_missing_columns(tmp_path):
    with pytest.raises(CsvParseError, match="line 1"):
        read_aggregate_csv(_write(tmp_path, ["method,alpha", "abs,0.1"]))


def test_deterministic(tmp_path):
    p = _write(tmp_path, [HEADER] + [_row("abs", a, a) for a in (0.1, 0.2, 0.4)])
    emit_plot(p, tmp_path / "a.svg")
    emit_plot(p, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_rate_axis(tmp_path):
    rows = read_aggregate_csv(_write(tmp_path, [HEADER] + [_row("abs", 0.25, 0.1 * i, r_x=i / 4) for i in (1, 2, 3)]))
    svg = render_svg(rows)
    assert "r_x" in svg and svg.count("<polyline") == 1

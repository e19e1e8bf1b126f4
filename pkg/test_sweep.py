"""
Region sweeps: grid, worked cells, self-consistency, CSV round trip and
deterministic SVG output.

Usage:
    pytest test_sweep.py
"""

import numpy as np
import pandas as pd
import pytest

from osa.conditions import finite_condition, infinite_condition
from osa.model import ChannelModel
from osa.sweep import (
    SWEEP_COLUMNS, SweepConfig, SweepOutputError, grid_cells, grid_values,
    read_sweep_csv, region_sweep, render_region_svg, write_sweep_csv,
)


def cell(table, p01, p11):
    row = table[np.isclose(table['p01'], p01) & np.isclose(table['p11'], p11)]
    assert len(row) == 1
    return row.iloc[0]


def test_grid_values():
    assert grid_values(0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(grid_values(0.02)) == 51
    assert grid_values(0.1)[3] == 0.3


def test_grid_cells_by_regime():
    positive = grid_cells(SweepConfig(k=2, m=1, n=5, regime='positive', grid_step=0.25))
    negative = grid_cells(SweepConfig(k=2, m=1, n=5, regime='negative', grid_step=0.25))
    both = grid_cells(SweepConfig(k=2, m=1, n=5, regime='both', grid_step=0.25))
    assert len(positive) == 15
    assert len(negative) == 10
    assert len(both) == 25
    assert all(p11 >= p01 for p01, p11 in positive)
    assert all(p11 < p01 for p01, p11 in negative)
    assert positive == sorted(positive)


@pytest.mark.parametrize("kwargs", [
    {"grid_step": 0.3}, {"grid_step": 0.0}, {"regime": "sideways"}, {"m": 3}, {"beta": 1.5},
])
def test_config_validation(kwargs):
    base = {"k": 2, "m": 1, "n": 5}
    base.update(kwargs)
    with pytest.raises(ValueError):
        SweepConfig(**base)


def test_worked_cells():
    table = region_sweep(SweepConfig(k=2, m=1, n=5, regime='positive', grid_step=0.05))
    assert list(table.columns) == SWEEP_COLUMNS
    near = cell(table, 0.4, 0.45)
    assert near['satisfied']
    assert near['lhs'] == pytest.approx(1 / 19, abs=1e-9)
    far = cell(table, 0.05, 0.45)
    assert not far['satisfied']
    assert far['threshold'] == pytest.approx(0.55 / 0.95, abs=1e-9)
    diagonal = table[np.isclose(table['p01'], table['p11'])]
    assert diagonal['satisfied'].all()


def test_rows_match_direct_condition_calls():
    for beta in (None, 0.3):
        cfg = SweepConfig(k=3, m=2, n=6, regime='both', grid_step=0.1, beta=beta)
        table = region_sweep(cfg)
        for row in table.itertuples():
            model = ChannelModel(p11=row.p11, p01=row.p01)
            if beta is None:
                report = infinite_condition(model, 3, 2, 6)
            else:
                report = finite_condition(model, 3, 2, 6, beta)
            assert bool(row.satisfied) == report.satisfied
            assert bool(row.unconditional) == report.unconditional


def test_unconditional_sweep():
    table = region_sweep(SweepConfig(k=2, m=1, n=3, regime='both', grid_step=0.25))
    assert table['satisfied'].all()
    assert table['unconditional'].all()


def test_csv_round_trip(tmp_path):
    cfg = SweepConfig(k=2, m=1, n=5, regime='both', grid_step=0.05,
                      csv_path=str(tmp_path / "region.csv"))
    table = region_sweep(cfg)
    with open(tmp_path / "region.csv") as f:
        assert f.readline().strip() == ','.join(SWEEP_COLUMNS)
    parsed = read_sweep_csv(tmp_path / "region.csv")
    pd.testing.assert_frame_equal(parsed, table, check_exact=True)


def test_csv_keeps_infinite_lhs(tmp_path):
    table = region_sweep(SweepConfig(k=2, m=1, n=5, regime='positive', grid_step=0.25))
    assert np.isinf(cell(table, 0.0, 1.0)['lhs'])
    write_sweep_csv(table, tmp_path / "t.csv")
    pd.testing.assert_frame_equal(read_sweep_csv(tmp_path / "t.csv"), table, check_exact=True)


def test_svg_is_deterministic(tmp_path):
    table = region_sweep(SweepConfig(k=2, m=1, n=5, regime='positive', grid_step=0.1))
    first = render_region_svg(table, tmp_path / "a.svg", title="region")
    second = render_region_svg(table, tmp_path / "b.svg", title="region")
    data = first.read_bytes()
    assert data == second.read_bytes()
    assert data.lstrip().startswith(b'<?xml')
    assert b'p01' in data


def test_output_errors_carry_path(tmp_path):
    table = region_sweep(SweepConfig(k=2, m=1, n=5, grid_step=0.25))
    missing = tmp_path / "missing" / "region.csv"
    with pytest.raises(SweepOutputError) as err:
        write_sweep_csv(table, missing)
    assert str(missing) in str(err.value)
    assert isinstance(err.value, OSError)
    with pytest.raises(SweepOutputError):
        read_sweep_csv(tmp_path / "nope.csv")


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_sweep_csv(path)

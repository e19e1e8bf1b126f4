"""
Region Sweeps
=============
Evaluate the sufficient condition on every (p01, p11) cell of a grid and write
the table as CSV plus a static SVG scatter of the guaranteed region.

CSV header: p01,p11,r_upper,r_lower,lhs,threshold,satisfied,unconditional
Floats are rounded to 10 significant digits before writing, so the file
parses back to the identical table.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd

from osa import config
from osa.conditions import ConditionReport, finite_condition, infinite_condition
from osa.model import ChannelModel

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['p01', 'p11', 'r_upper', 'r_lower', 'lhs', 'threshold', 'satisfied', 'unconditional']
FLOAT_COLUMNS = SWEEP_COLUMNS[:6]
CSV_FLOAT_FORMAT = '%.10g'
SVG_HASH_SALT = 'osa-region-sweep'

REGIMES = ('positive', 'negative', 'both')


class SweepOutputError(OSError):
    """Sweep file could not be written or read."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)


@dataclass(frozen=True)
class SweepConfig:
    """beta=None sweeps the infinite-horizon condition, else the finite one at beta."""
    k: int
    m: int
    n: int
    regime: str = 'positive'
    grid_step: float = 0.02
    beta: Optional[float] = None
    csv_path: Optional[str] = None
    svg_path: Optional[str] = None

    def __post_init__(self):
        if not 1 <= self.m <= self.k <= self.n:
            raise ValueError(f"Need 1 <= m <= k <= N, got m={self.m}, k={self.k}, N={self.n}")
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got '{self.regime}'")
        if not 0.0 < self.grid_step <= 0.25:
            raise ValueError(f"grid_step must satisfy 0 < step <= 0.25, got {self.grid_step}")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


def _sig10(x: float) -> float:
    return float(f"{x:.10g}")


def grid_values(step: float) -> List[float]:
    return [round(i * step, 12) for i in range(int(math.floor(1.0 / step + 1e-9)) + 1)]


def grid_cells(cfg: SweepConfig) -> List[tuple]:
    """(p01, p11) cells in output order: p01 ascending, then p11 ascending."""
    values = grid_values(cfg.grid_step)
    cells = []
    for p01 in values:
        for p11 in values:
            if cfg.regime == 'positive' and p11 < p01:
                continue
            if cfg.regime == 'negative' and p11 >= p01:
                continue
            cells.append((p01, p11))
    return cells


def cell_report(cfg: SweepConfig, p01: float, p11: float) -> ConditionReport:
    model = ChannelModel(p11=p11, p01=p01)
    if cfg.beta is None:
        return infinite_condition(model, cfg.k, cfg.m, cfg.n)
    return finite_condition(model, cfg.k, cfg.m, cfg.n, cfg.beta)


def _row(cfg: SweepConfig, cell: tuple) -> dict:
    p01, p11 = cell
    report = cell_report(cfg, p01, p11)
    return {
        'p01': _sig10(p01),
        'p11': _sig10(p11),
        'r_upper': _sig10(report.r_upper),
        'r_lower': _sig10(report.r_lower),
        'lhs': _sig10(report.lhs),
        'threshold': _sig10(report.threshold),
        'satisfied': bool(report.satisfied),
        'unconditional': bool(report.unconditional),
    }


def region_sweep(cfg: SweepConfig) -> pd.DataFrame:
    """One row per grid cell; writes CSV / SVG when the config names paths."""
    cells = grid_cells(cfg)
    horizon = 'infinite' if cfg.beta is None else f'finite beta={cfg.beta}'
    logger.info(
        f"[Sweep] ({cfg.k},{cfg.m}) N={cfg.n} {cfg.regime} {horizon}: "
        f"{len(cells)} cells at step {cfg.grid_step}"
    )
    with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:
        rows = list(pool.map(lambda c: _row(cfg, c), cells))
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    logger.info(f"[Sweep] {int(table['satisfied'].sum())}/{len(table)} cells satisfied")

    if cfg.csv_path:
        write_sweep_csv(table, cfg.csv_path)
    if cfg.svg_path:
        render_region_svg(table, cfg.svg_path, title=f"(k,m)=({cfg.k},{cfg.m}), N={cfg.n}, {horizon}")
    return table


# =============================================================================
# FILES
# =============================================================================

def write_sweep_csv(table: pd.DataFrame, path) -> Path:
    path = Path(path)
    try:
        table[SWEEP_COLUMNS].to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    except OSError as e:
        raise SweepOutputError(path, e.strerror or str(e)) from e
    logger.info(f"[Sweep] Wrote {len(table)} rows to {path}")
    return path


def read_sweep_csv(path) -> pd.DataFrame:
    path = Path(path)
    try:
        table = pd.read_csv(path)
    except OSError as e:
        raise SweepOutputError(path, e.strerror or str(e)) from e
    if list(table.columns) != SWEEP_COLUMNS:
        raise ValueError(f"{path}: unexpected sweep header {list(table.columns)}")
    for col in FLOAT_COLUMNS:
        table[col] = table[col].astype(float)
    for col in ('satisfied', 'unconditional'):
        table[col] = table[col].astype(bool)
    return table


def render_region_svg(table: pd.DataFrame, path, title: str = '') -> Path:
    """Static scatter: satisfied cells as filled circles, the rest as crosses."""
    path = Path(path)
    ok = table[table['satisfied']]
    bad = table[~table['satisfied']]
    with matplotlib.rc_context({'svg.hashsalt': SVG_HASH_SALT, 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.plot([0, 1], [0, 1], color='grey', linewidth=0.8, linestyle='--')
        ax.scatter(ok['p01'], ok['p11'], marker='o', s=12, color='tab:green', label='condition holds')
        ax.scatter(bad['p01'], bad['p11'], marker='x', s=12, color='tab:red', label='not guaranteed')
        ax.set_xlim(-0.02, 1.02)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel('p01')
        ax.set_ylabel('p11')
        if title:
            ax.set_title(title)
        ax.legend(loc='lower right')
        try:
            fig.savefig(path, format='svg', metadata={'Date': None})
        except OSError as e:
            raise SweepOutputError(path, e.strerror or str(e)) from e
        finally:
            plt.close(fig)
    logger.info(f"[Sweep] Wrote region plot to {path}")
    return path

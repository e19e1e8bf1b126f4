"""
Region Studies - Offline Builder Script
=======================================
Regenerates the guaranteed-optimality region studies for (k,m) = (2,1):
infinite-horizon sweeps over the positive and the negative half of the
(p01, p11) square, written as CSV + SVG into data/.

Existing files are kept unless --force is given.

Usage:
    python scripts/region_studies.py             # Build missing studies
    python scripts/region_studies.py --force     # Rebuild everything
    python scripts/region_studies.py --status    # Show which studies exist
"""

import os
import sys
import argparse

# Ensure project root is on path
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, PROJECT_ROOT)

from osa.config import setup_logging
from osa.sweep import SweepConfig, region_sweep

# --- Configuration ---
DATA_DIR = os.path.join(PROJECT_ROOT, 'data')
STUDY_K, STUDY_M, STUDY_N = 2, 1, 5
STUDY_STEP = 0.02
STUDIES = ('positive', 'negative')


def study_paths(regime):
    stem = os.path.join(DATA_DIR, f'region_k{STUDY_K}_m{STUDY_M}_{regime}')
    return stem + '.csv', stem + '.svg'


def show_status():
    print(f"\n📊 Region studies in {DATA_DIR}")
    for regime in STUDIES:
        csv_path, svg_path = study_paths(regime)
        for path in (csv_path, svg_path):
            mark = '✅' if os.path.exists(path) else '  '
            print(f"  {mark} {os.path.basename(path)}")
    print()


def main():
    parser = argparse.ArgumentParser(description='Rebuild (2,1) region studies')
    parser.add_argument('--force', action='store_true', help='Overwrite existing files')
    parser.add_argument('--status', action='store_true', help='Show study status and exit')
    args = parser.parse_args()

    if args.status:
        show_status()
        return

    setup_logging()
    os.makedirs(DATA_DIR, exist_ok=True)

    built = 0
    for regime in STUDIES:
        csv_path, svg_path = study_paths(regime)
        if not args.force and os.path.exists(csv_path) and os.path.exists(svg_path):
            print(f"  [=] {regime}: up to date")
            continue
        try:
            table = region_sweep(SweepConfig(
                k=STUDY_K, m=STUDY_M, n=STUDY_N,
                regime=regime, grid_step=STUDY_STEP,
                csv_path=csv_path, svg_path=svg_path,
            ))
        except OSError as e:
            print(f"  ❌ {regime}: {e}")
            sys.exit(4)
        built += 1
        print(f"  [+] {regime}: {int(table['satisfied'].sum())}/{len(table)} cells satisfied")

    print(f"\n{'='*50}")
    print(f"✅ Region studies complete ({built} rebuilt)")
    show_status()


if __name__ == '__main__':
    main()

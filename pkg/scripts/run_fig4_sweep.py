#!/usr/bin/env python3
"""
Message MSE versus N for two positive messages of size 4 (P_k=5)

Usage:
    python scripts/run_fig4_sweep.py [repetitions] [--paper-scale]
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import build_experiment_config
from gb2d_pipeline import Gb2dPipeline
from logger_utils import setup_logging


def run_fig4_sweep(repetitions: int = 10, paper_scale: bool = False):
    logger = setup_logging(log_file='fig4_sweep.log')
    config = build_experiment_config(
        preset='fig4',
        paper_scale=paper_scale,
        experiment_overrides={
            'out_dir': str(Path('gb2d_out') / 'fig4'),
            'repetitions': repetitions,
        },
    )
    summaries = Gb2dPipeline(config).sweep()

    previous = None
    for summary in summaries:
        if previous is not None and not summary.mse_mean < previous:
            logger.warning(f"MSE did not decrease at N={summary.n_samples}: {summary.mse_mean:.3e} >= {previous:.3e}")
        previous = summary.mse_mean


if __name__ == '__main__':
    args = [arg for arg in sys.argv[1:] if not arg.startswith('--')]
    run_fig4_sweep(int(args[0]) if args else 10, paper_scale='--paper-scale' in sys.argv)

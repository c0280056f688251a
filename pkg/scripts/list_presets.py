#!/usr/bin/env python3
"""
List all experiment presets with their desk and published sizes

Usage:
    python scripts/list_presets.py
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import resolve_preset
from constants import PRESETS
from logger_utils import setup_logging


def list_presets():
    """Log every preset, one block per preset"""
    logger = setup_logging(log_file=None, include_thread_name=False)
    for name in PRESETS:
        desk = resolve_preset(name)
        full = resolve_preset(name, paper_scale=True)
        logger.info(f"\n{'=' * 60}")
        logger.info(f"{name}: {PRESETS[name]['description']}")
        logger.info(f"{'=' * 60}")
        logger.info(f"  N: {desk['gen']['n_samples']} (full {full['gen']['n_samples']})")
        logger.info(f"  paths: {desk['gen']['path_counts']}, message sizes: {desk['gen']['message_sizes']}")
        logger.info(f"  sensing: {desk['gen']['sensing_mode']}, messages: {desk['gen']['message_mode']}")
        logger.info(f"  sweep N: {desk['n_values']} (full {full['n_values']})")


if __name__ == '__main__':
    list_presets()

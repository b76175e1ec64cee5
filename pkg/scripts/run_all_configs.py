"""Run every config in a directory and print one summary line per config.

Usage: python3 scripts/run_all_configs.py [CONFIG_DIR] [OUT_ROOT]
"""

import sys
import time
from pathlib import Path

from varfrac.cli import run


def main(argv):
    config_dir = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parent.parent / "configs"
    out_root = Path(argv[2]) if len(argv) > 2 else Path("runs")
    worst = 0
    for cfg in sorted(config_dir.glob("*.json")):
        t0 = time.perf_counter()
        code = run(cfg, out_root / cfg.stem)
        print(f"{cfg.name:32s} exit {code}  {time.perf_counter() - t0:6.2f} s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main(sys.argv))

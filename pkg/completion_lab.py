"""
Matrix Completion Lab

Command-line entry point for the lab: cut norms and cut distances, graphon
discretization and recovery verdicts, nuclear-norm completion, the
stable-recovery probe and full completion experiments.

Usage:
  python completion_lab.py generate half-rows 8 -o mask.txt
  python completion_lab.py probe mask.txt --rank 1
  python completion_lab.py experiment experiment.cfg

Environment (or .env):
  LAB_SEED, LAB_LOG_LEVEL, LAB_CUT_EXACT_LIMIT, LAB_CUT_DISTANCE_EXACT_LIMIT, LAB_OUTPUT_DIR
"""

import sys

from mclab.labcli import cli_main

# --- Main Execution ---
if __name__ == "__main__":
    if len(sys.argv) == 1:
        print("\n" + "=" * 80)
        print("MATRIX COMPLETION LAB")
        print("=" * 80)
        print("\nRun with a subcommand, for example:")
        print("   python completion_lab.py generate half-rows 8")
        print("   python completion_lab.py --help")
        print("=" * 80 + "\n")
        exit(1)
    exit(cli_main(sys.argv[1:]))

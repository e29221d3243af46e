"""Generate the synthetic dataset if needed and run the six-way comparison.

Defaults to the reduced desk preset on 5000 rows; pass ``--preset full``
for the full-size configuration (slow on a laptop).
"""

import argparse
import sys
from pathlib import Path

from emissions_ml.cli import main as cli_main
from emissions_ml.synthetic import write_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--data-dir", type=Path, default=Path("data"))
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--rows", type=int, default=5200)
    p.add_argument("--limit", type=int, default=5000)
    p.add_argument("--preset", choices=("full", "desk"), default="desk")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()

    data, schema = args.data_dir / "vehicles.csv", args.data_dir / "schema.json"
    if not data.exists():
        args.data_dir.mkdir(parents=True, exist_ok=True)
        write_dataset(data, args.rows, seed=2025, schema_path=schema)
    return cli_main(["compare", "--data", str(data), "--schema", str(schema),
                     "--limit", str(args.limit), "--preset", args.preset, "--seed", str(args.seed),
                     "--threads", str(args.threads), "--out-dir", str(args.out_dir), "--timings"])


if __name__ == "__main__":
    sys.exit(main())

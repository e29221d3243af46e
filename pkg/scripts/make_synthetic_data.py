"""Write the seeded synthetic vehicle dataset and its schema file."""

import argparse
from pathlib import Path

from emissions_ml.synthetic import write_dataset


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--rows", type=int, default=5200)
    p.add_argument("--seed", type=int, default=2025)
    p.add_argument("--missing-rate", type=float, default=0.01)
    p.add_argument("--out", type=Path, default=Path("data/vehicles.csv"))
    p.add_argument("--schema-out", type=Path, default=Path("data/schema.json"))
    args = p.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.schema_out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(args.out, args.rows, seed=args.seed, schema_path=args.schema_out,
                  missing_rate=args.missing_rate)
    print(f"wrote {args.rows} rows to {args.out} and schema to {args.schema_out}")


if __name__ == "__main__":
    main()

"""Regenerate the bundled synthetic corpus in place (or elsewhere)."""
import argparse

from floordesc.synth import FIXTURE_SEED, fixture_root, write_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None, help="target directory (default: the bundled copy)")
    ap.add_argument("--records", type=int, default=10)
    ap.add_argument("--seed", type=int, default=FIXTURE_SEED)
    ap.add_argument("--feature-dim", type=int, default=16)
    args = ap.parse_args()

    out = args.out or fixture_root()
    records = write_fixture(out, n=args.records, seed=args.seed, feature_dim=args.feature_dim)
    print(f"wrote {len(records)} records to {out}")
    for record in records:
        print(f"  {record.record_id}: {record.paragraph}")


if __name__ == "__main__":
    main()

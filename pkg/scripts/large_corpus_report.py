"""Storage reduction of 1-MCI over 1-1CS on the large corpus.

Plans both methods over ``corpus.large_corpus()`` (194 KB and 87 KB
tool blobs, about 6.5 MB of compressed data) and prints the reduction in
binary bytes and in synthesised bases. Takes roughly half a minute.
"""

import argparse

from dnapool import corpus, methods, primers


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    c = corpus.large_corpus()
    lib = primers.PrimerLibrary()
    primers.extend_library(lib, len(c.files) + 1, seed=args.seed, universal=True)
    rows = {}
    for m in ("1-1cs", "1-mci"):
        plan = methods.plan(m, c.files, c.tools, library=lib)
        bases = sum(s.bases for s in methods.materialize_streams(plan))
        rows[m] = (plan.binary_size(), bases)
    comp = sum(e.compressed_size for e in plan.entries)
    print(f"original_bytes={c.original_bytes} compressed_bytes={comp}")
    for m, (sb, sd) in rows.items():
        print(f"{m}\tbinary_bytes={sb}\tbases={sd}")
    (b1, d1), (b2, d2) = rows["1-1cs"], rows["1-mci"]
    print(f"reduction_bytes={1 - b2 / b1:.4%} reduction_bases={1 - d2 / d1:.4%}")


if __name__ == "__main__":
    main()

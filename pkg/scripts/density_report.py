"""Density and audit table for the acceptance corpus, one pool per method."""

import tempfile

from dnapool import analytics, corpus, methods, poolsim, primers


def main() -> None:
    c = corpus.acceptance_corpus()
    lib = primers.PrimerLibrary()
    primers.extend_library(lib, 9, seed=7, universal=True)
    print("method\tbases\tdensity\tideal_ratio\tverbatim_dev\tcorrected_dev\tbound")
    with tempfile.TemporaryDirectory() as tmp:
        for m in analytics.METHODS:
            plan = methods.plan(m, c.files, c.tools, library=lib)
            pool, manifest = poolsim.pool_write(plan, f"{tmp}/{m}")
            stats = poolsim.pool_stats(pool, manifest)
            groups = poolsim.manifest_cost_groups(pool.header, manifest, "pool")
            dev = [analytics.audit_pool(stats, groups, variant=v).deviation
                   for v in ("verbatim", "corrected")]
            ratio = poolsim.density_vs_ideal(stats, pool, manifest)
            print(f"{m}\t{stats.total_bases}\t{stats.density:.4f}\t{float(ratio):.4f}"
                  f"\t{float(dev[0]):.1f}\t{float(dev[1]):.1f}\t{stats.n_data_files * stats.ls}")


if __name__ == "__main__":
    main()

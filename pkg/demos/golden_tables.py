"""Print the failure-side conditional tables estimated from the bundled counts.

Point rows come from the Dirichlet posterior mean with the primary weights,
interval rows from the IDM with s = 1.  Values are rounded for display only.
"""

from credalcfr.cfr import DESCRIPTIONS, DirichletMode, IdmMode, case_study_spec, case_study_weights, estimate_tables

counts = case_study_spec().h2_counts
point = estimate_tables(counts, DirichletMode(case_study_weights("primary")))
interval = estimate_tables(counts, IdmMode(1.0))

for var, rows in counts.items():
    print(f"{var}  {DESCRIPTIONS[var]}")
    for ctx, row in rows.items():
        pts = " ".join(f"{iv.rounded()[0]:.2f}" for iv in point[var][ctx])
        ivs = " ".join("[{:.2f}, {:.2f}]".format(*iv.rounded()) for iv in interval[var][ctx])
        print(f"  given {ctx or '-':4s} counts={row}  point: {pts}  IDM: {ivs}")
    print()

"""
Analyzing an eight-session study
================================

Two groups of twelve, one improving and one flat.
"""

import io

from speechcoach import analyze_study
from speechcoach.analytics import read_frequency_csv
from speechcoach.corpus import study_csv, synthetic_study

rows = synthetic_study(n_per_group=12, slopes=(-0.05, 0.0), noise=0.01, seed=6)
groups = read_frequency_csv(io.StringIO(study_csv(rows)))
report = analyze_study(groups)

# per-group learning slope, tested against zero
for g in groups:
    t = report.kinds["S"]["RQ1"][g]["test"]
    print(f"group {g}: mean slope {t['mean']:+.4f}  p={t['p']:.2g}")

# between-group difference at the last session
d = report.kinds["S"]["RQ4"]
print(f"S8 {d['groups']}: {d['mean']:+.3f}  [{d['ci95_lo']:+.3f}, {d['ci95_hi']:+.3f}]")

# the word-ratio form tells the same story
print("ratio slope, group A:", round(report.kinds["S'"]["RQ1"]["A"]["test"]["mean"], 4))

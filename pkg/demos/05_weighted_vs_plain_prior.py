"""
Weighted prior against plain prior
===================================

Two longitudinal studies. In the potato-style study the test scan gains a
new hole; in the okra-style study every template carries a deformity the
test lacks. A plain prior pulls the change back toward the templates. The
weighted prior trusts the templates only where the pilots agree nothing
changed.
"""

from weightedprior.benchmark import run_benchmark
from weightedprior.config import default_experiment

for name in ("potato", "okra"):
    exp = default_experiment().with_overrides(dataset=name)
    result = run_benchmark(exp)
    print(result.report(timings=True))
    diag = result.diagnostics["weighted-prior"]
    print("weighted-prior objective per outer iteration:", [round(v, 2) for v in diag.objective])
    print()

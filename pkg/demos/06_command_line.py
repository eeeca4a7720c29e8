"""
Driving experiments from the command line
==========================================

Every step is also available through the ``weightedprior`` command. This
script calls the same entry point in-process so it runs anywhere the
package is installed.
"""

import tempfile
from pathlib import Path

from weightedprior.cli import main

work = Path(tempfile.mkdtemp(prefix="weightedprior_cli_"))
config = work / "study.cfg"
config.write_text(
    "# a small, fast study\n"
    "dataset = okra\n"
    "size = 64\n"
    "views = 18\n"
    "k = 20\n"
)


def run(*args):
    print("$ weightedprior", " ".join(str(a) for a in args))
    code = main([str(a) for a in args])
    print("exit", code)


run("phantom", "--config", config, "--out", work / "data")
run("project", "--config", config, "--input", work / "data" / "test.tpr", "--out", work / "scan")
run("weights", "--config", config, "--sino", work / "scan" / "sinogram.tpr",
    "--templates", work / "data", "--out", work / "weights", "--dump-differences")
run("recon", "--config", config, "--method", "weighted-prior", "--sino", work / "scan" / "sinogram.tpr",
    "--templates", work / "data", "--out", work / "recon")
run("metric", "--image", work / "recon" / "recon_weighted-prior.tpr",
    "--reference", work / "data" / "test.tpr", "--dataset", work / "data")
run("bench", "--config", config, "--out", work / "bench")
print("outputs in", work)

"""
Config-driven experiments
=========================

Every scenario is a JSON config.  Running one writes samples.csv and
report.json; the same config and seed give byte-identical files whatever the
worker count.  The ``ttrec`` command does the same from the shell:

    ttrec validate configs/llt_iid.json
    ttrec run configs/llt_iid.json -o results/llt
    ttrec report results/llt
"""

import tempfile
from pathlib import Path

from ttrecurrence.experiment import format_report, load_config, run

configs = Path(__file__).resolve().parents[1] / "configs"

with tempfile.TemporaryDirectory() as tmp:
    for name, override in (("llt_iid", {}), ("corollary_d2", {}), ("point_process_b", {"trials": 2000})):
        config = load_config(configs / f"{name}.json")
        config.raw.update(override)
        report = run(config, Path(tmp) / name)
        print(format_report(report.as_dict()))
        print()
    print((Path(tmp) / "point_process_b" / "samples.csv").read_text().splitlines()[:4])

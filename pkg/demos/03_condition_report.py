"""Which coefficient sequences are certified on an interval?

``certify`` runs the Carleman, monotone-dominance, centering, q-domination
and envelope checks.  A failing check always carries a witness index.
"""

import json

from jacobi_spectra import CoefficientModel
from jacobi_spectra.conditions import certify

cases = {
    "free, [-0.9, 0.9]": (CoefficientModel.constant(0.0, 0.5), (-0.9, 0.9)),
    "b_n = n+1, [-4, 4]": (CoefficientModel.power(1.0, 1.0), (-4.0, 4.0)),
    "a_n = 3n, b_n = n+1, [-1, 1]": (CoefficientModel.affine(0.0, 3.0, 1.0, 1.0), (-1.0, 1.0)),
}
checks = ("carleman", "monotone_dominance", "centered", "q_domination", "envelope")
for name, (model, interval) in cases.items():
    report = certify(model, interval, checks=checks)
    print(f"== {name}: q_hat = {report.q_hat}")
    for check in report.checks.values():
        witness = "" if check.witness is None else " witness=" + json.dumps(check.witness)
        print(f"   {check.name:20s} {check.status}{witness}")

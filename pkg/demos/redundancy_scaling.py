"""How many copies of the pointer record does a large environment hold?

For an i.i.d. qubit environment with weak per-subsystem records, the
redundancy R_delta found by searching for the smallest informative
fragment is compared with the estimate n_env * xi / ln(1/delta) built
from the typical Chernoff information xi.  The agreement improves as the
information deficit delta shrinks.
"""
import math

from qdarwin.chernoff import redundancy_estimate, typical_chernoff_information
from qdarwin.metrics import redundancy
from qdarwin.model import branch_ensemble, iid_qubit_model, time_for_chernoff

n_env = 10_000
model = iid_qubit_model(n_env)

for xi_target in (0.003, 0.01, 0.03):
    t = time_for_chernoff(xi_target)
    xi = typical_chernoff_information(branch_ensemble(model, t))
    print(f"xi = {xi:.4f} nats per subsystem")
    print(f"  {'delta':>8} {'m_delta':>8} {'R_delta':>9} {'estimate':>9} {'r / xi':>7}")
    for delta in (1e-1, 1e-2, 1e-3, 1e-4):
        res = redundancy(model, t, delta, rows=False)
        est = redundancy_estimate(n_env, xi, delta)
        r_hat = res.R_delta * math.log(1 / delta) / n_env
        print(f"  {delta:8.0e} {res.m_delta:8d} {res.R_delta:9.2f} {est:9.2f} {r_hat / xi:7.3f}")
    print()

print("r / xi stays between 1 and 2, approaching 1 from above as delta -> 0.")

"""Error exponents for telling the two branches apart from a fragment.

With mixed environment states the Helstrom error has no closed form, so
for small fragments it is computed from dense matrices.  Its decay rate
with fragment size is compared with the typical Chernoff information,
at c = 1/2 and at the best common c.
"""
import numpy as np

from qdarwin.chernoff import empirical_error_exponent, optimal_common_c, typical_chernoff_information
from qdarwin.model import DecoherenceModel, PointerSpec, SubsystemSpec, branch_ensemble
from qdarwin.randomized import random_density_matrix, random_hermitian

rng = np.random.default_rng(4)
template = SubsystemSpec(random_density_matrix(2, rng), random_hermitian(2, rng))
pointer = PointerSpec.superposition([0.5, -0.5], [0.3, 0.7])
model = DecoherenceModel.iid(pointer, template, 11)
t = 0.9

ens = branch_ensemble(model, t)
c_star, _ = optimal_common_c(ens)
print(f"xi at c = 1/2      : {typical_chernoff_information(ens, 0.5):.5f} nats")
print(f"xi at c* = {c_star:.3f}  : {typical_chernoff_information(ens, 'optimize'):.5f} nats")

sizes = list(range(3, 12))
exact = empirical_error_exponent(model, t, sizes, quantity="pe", ensemble=ens)
bound = empirical_error_exponent(model, t, sizes, quantity="pe_star", c=c_star, ensemble=ens)
print(f"slope of -ln P_e   : {exact.slope:.5f}  (dense Helstrom, m = {sizes[0]}..{sizes[-1]})")
print(f"slope of -ln P_e*  : {bound.slope:.5f}  (product bound at c*)")
print("\nm   -ln P_e   -ln P_e*")
for m, a, b in zip(sizes, exact.values, bound.values):
    print(f"{m:<3} {a:8.4f} {b:9.4f}")

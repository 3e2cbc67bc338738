"""Weak versus classical transport on the line.

Run with ``python demos/weak_transport_1d.py``.
"""

import numpy as np

from weakot import (classical_cost, equality_certificate, make_power_cost,
                    optimal_nu1, uniform, weak_cost)

sq, u4 = make_power_cost(2), make_power_cost(4)

# A point mass can reach any centred target at zero weak cost: only the
# barycenter of where it is sent is charged.
mu, nu = uniform([0.0]), uniform([-1.0, 1.0])
print("delta_0 -> {-1, 1}")
print("  classical:", classical_cost(mu, nu, sq).cost)
print("  weak     :", weak_cost(mu, nu, sq).cost)

# When x - y fails to be non-decreasing the weak cost pools cells and drops
# strictly below the classical one; the certificate names a witness pair.
mu, nu = uniform([0.0, 1.0]), uniform([-1.0, 2.0])
cert = equality_certificate(mu, nu)
print("\n{0, 1} -> {-1, 2}")
print("  x - y        :", cert.differences)
print("  equal costs? :", cert.holds, "witness levels", cert.witness)
print("  classical    :", classical_cost(mu, nu, sq).cost)
print("  weak         :", weak_cost(mu, nu, sq).cost)

# The optimal intermediate measure nu1 does not depend on the cost.
rng = np.random.default_rng(0)
mu, nu = uniform(rng.normal(size=6)), uniform(1.5 * rng.normal(size=6))
nu1 = optimal_nu1(mu, nu)
print("\nrandom six-point instance")
print("  nu1 atoms:", np.round(nu1.atoms, 4))
for name, th in (("u^2", sq), ("u^4", u4)):
    rep = weak_cost(mu, nu, th)
    print(f"  {name}: weak {rep.cost:.6f} = classical(mu, nu1) "
          f"{classical_cost(mu, nu1, th).cost:.6f}; classical(mu, nu) "
          f"{classical_cost(mu, nu, th).cost:.6f}")

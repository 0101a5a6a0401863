"""
Testing behaviors against local hidden variable models
======================================================

Every LHV behavior in a finite scenario is a mixture of deterministic
strategies, so membership is a linear feasibility problem. Infeasible tables
come back with a Bell-type functional that separates them from the local set.
"""

import itertools

import numpy as np

from seqbell import bell, lhv, qcore
from seqbell.lhv import BehaviorTable

print("deterministic strategies in the 2x2x2x2 scenario:", lhv.strategy_count((2, 2, 2, 2)))
print("... and with three outcomes per side:", lhv.strategy_count((2, 2, 3, 3)))

# The PR box: perfectly correlated except for settings (1, 1), where it anti-correlates.
pr = np.zeros((2, 2, 2, 2))
for x, y, a, b in itertools.product(range(2), repeat=4):
    pr[x, y, a, b] = 0.5 if (a ^ b) == x * y else 0.0
pr = BehaviorTable(pr)

res = lhv.lhv_feasible(pr)
print("\nPR box local?", res.feasible)
print(f"certificate value {res.certificate.value:g}, local bound {res.certificate.local_bound:g}")
print("certificate coefficients c[x, y, a, b]:")
print(res.certificate.coefficients)

# Mixing the PR box with white noise: local exactly below visibility 1/2.
print("\nvisibility  CHSH    local")
for v in np.linspace(0.3, 0.7, 5):
    t = BehaviorTable(v * pr.p + (1 - v) * 0.25)
    print(f"  {v:.2f}     {lhv.chsh_of_behavior(t):.3f}   {lhv.lhv_feasible(t).feasible}")

###############################################################################
# Quantum tables
# --------------
# A Werner state sampled at its own optimal settings. For two settings and
# two outcomes LP feasibility coincides with all CHSH expressions <= 2.
rng = np.random.default_rng(1)
phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
for w in (0.6, 0.7, 0.75):
    rho = w * np.outer(phi, phi) + (1 - w) * np.eye(4) / 4
    _, s = bell.max_chsh(rho)
    t = lhv.behavior_from_quantum(rho, [o.measurement() for o in s.alice], [o.measurement() for o in s.bob])
    res = lhv.lhv_feasible(t)
    print(f"Werner w={w:.2f}: CHSH {lhv.chsh_of_behavior(t):.4f}, local {res.feasible}")

# A feasible answer carries an explicit model that can be re-expanded.
rho = qcore.random_density(4, rng)
obs = [bell.BlochObservable.from_vector(rng.normal(size=3)).measurement() for _ in range(4)]
t = lhv.behavior_from_quantum(rho, obs[:2], obs[2:])
res = lhv.lhv_feasible(t)
if res.feasible:
    print(f"\nrandom mixed state: local with {len(res.model.strategies)} strategies, residual {res.residual:.1e}")
    for s, wgt in zip(res.model.strategies, res.model.weights):
        print(f"  A{s.response_a} B{s.response_b}  weight {wgt:.4f}")

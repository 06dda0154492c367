"""Smoke test for the spincav_py extension module.

Build and run from the workspace root:
    cargo build --release -p spincav-py --features extension-module
    cp target/release/libspincav_py.so crates/py/python/spincav_py.so
    python3 crates/py/python/smoke.py
"""

import math

import spincav_py as sc

p = sc.Params.from_mhz(kappa=1.0, gamma_h=0.5)
assert abs(p.kappa - 2 * math.pi) < 1e-12

ens = sc.Ensemble.with_cooperativity(100.0, 14.0, p)
assert abs(ens.cooperativity(p) - 14.0) < 1e-9
eta_minus, eta_plus = ens.critical_drives(p)
assert eta_minus < eta_plus == ens.eta_plus_crit(p)

curve = sc.steady_curve(ens, p, [0.5 * eta_plus, 0.9 * eta_plus])
assert {b for _, _, b, _ in curve} >= {"lower", "upper"}

assert sc.inventory_count("ce3", 51) == 36321
assert sc.oracle_max_residual([1, 1], samples=5) < 1e-8

x1, _ = sc.stationary_amplitude("ce1", ens, p.with_eta(0.9 * eta_plus))
lower = min(x for e, x, b, _ in curve if b == "lower" and e == 0.9 * eta_plus)
assert abs(x1 - lower) < 1e-6 * lower

tr = sc.evolve("ce2", ens, p.with_eta(1.05 * eta_plus), [0.0, 0.5, 1.0])
assert tr["unphysical"] is None and tr["sz"][0] == [-1.0]

d = sc.deviation_triple(ens, p.with_eta(1.1 * eta_plus))
assert max(d["d12"], d["d23"], d["d13"]) < 0.2

try:
    sc.nsc_search(ens, p, 1.0)
    raise AssertionError("ratio 1 must be rejected")
except ValueError:
    pass

print("spincav_py smoke test passed")

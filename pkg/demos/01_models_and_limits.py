"""Source models, validation, and the infinite-communication key-rate limit.

Two 2-d demo sources are used throughout the demos:

* a *degraded* source whose eavesdropper sees a scaled copy of the
  legitimate observation direction, and
* a *crossing* source whose two observations are equally informative about
  the source overall but look at different directions.

The second one is the interesting case: no key is possible "for free"
(I(X;Y) = I(X;Z)), yet quantizing the right direction unlocks a positive
key rate.
"""

import numpy as np

import gausskey as gk

degraded = gk.GeneralModel(sigma_x=2 * np.eye(2), b=[[1.0, 0.5]], e=[[0.7, 0.35]])
crossing = gk.GeneralModel(sigma_x=2 * np.eye(2), b=[[1.0, 0.5]], e=[[0.5, 1.0]])

for name, model in (("degraded", degraded), ("crossing", crossing)):
    print(f"== {name} source ==")
    gk.validate_model(model)
    eigs = gk.gen_eigs(model)
    print("  generalized eigenvalues:", np.round(eigs.phis, 6), f"(rho = {eigs.rho})")
    limit = gk.asymptotic_limit(model)
    print(f"  key-rate limit as R_p -> inf: {limit:.6f} nats")
    mi_y = 0.5 * np.log(float(model.b[0] @ model.sigma_x @ model.b[0]) + 1.0)
    mi_z = 0.5 * np.log(float(model.e[0] @ model.sigma_x @ model.e[0]) + 1.0)
    print(f"  I(X;Y) - I(X;Z) = {mi_y - mi_z:.6f} nats")
    print()

print("Rate functionals at a few conditional covariances (crossing source):")
for scale in (0.999, 0.5, 0.1, 0.01):
    pair = gk.rates_general(crossing, scale * crossing.sigma_x)
    print(f"  Q = {scale:5.3f} * sigma_x -> I_p = {pair.rp:8.5f}, I_k = {pair.rk:8.5f}")
print()
print("Shrinking Q toward zero costs unbounded public rate; the key rate")
print("saturates at the limit printed above only in the degraded case.")

print()
print("Aligned reduction (square invertible observations):")
rng = np.random.Generator(np.random.Philox(key=1))
square = gk.GeneralModel(
    sigma_x=2 * np.eye(2),
    b=rng.standard_normal((2, 2)) + np.eye(2),
    e=rng.standard_normal((2, 2)) + np.eye(2),
)
aligned = gk.to_aligned(square)
q = 0.6 * np.eye(2)
print("  general form :", gk.rates_general(square, q))
print("  aligned form :", gk.rates_aligned(aligned, q))

"""Tour of the multilinear building blocks.

Shows how a rank-R factored tensor, its mode unfoldings and the Khatri-Rao
product fit together: every unfolding of the factored tensor is a product
of one factor with the Khatri-Rao chain of the others.
"""

import numpy as np

from lrdec import KruskalTensor, build_q, fold, khatri_rao, unfold

rng = np.random.default_rng(0)

shape = (4, 5, 3)
rank = 2
k = KruskalTensor([rng.standard_normal((s, rank)) for s in shape])
t = k.full()
print(f"factored tensor: shape={k.shape}, rank={k.rank}")
print(f"dense reconstruction: {t.shape}, ||T||_F = {np.linalg.norm(t):.4f}")

print("\nunfold/fold round trip:")
for n in range(3):
    m = unfold(t, n)
    back = fold(m, n, shape)
    print(f"  mode {n}: unfolding is {m.shape}, "
          f"max refold error {np.max(np.abs(back - t)):.2e}")

print("\nper-mode factorization of the unfoldings:")
for n in range(3):
    q = build_q(k.factors, n)
    err = np.max(np.abs(unfold(t, n) - k.factors[n] @ q.T))
    print(f"  mode {n}: ||unfold(T, {n}) - X Q^T||_max = {err:.2e}")

a = rng.standard_normal((3, 2))
b = rng.standard_normal((4, 2))
kr = khatri_rao(a, b)
print(f"\nkhatri_rao of (3x2, 4x2) -> {kr.shape}; column 0 equals "
      f"kron(a[:,0], b[:,0]): "
      f"{np.allclose(kr[:, 0], np.kron(a[:, 0], b[:, 0]))}")

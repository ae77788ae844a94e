"""A tour of the autodiff core: graphs, gradients, and Adam.

Every layer in this package is built from the same small set of
differentiable array operations.  This script builds a few graphs by hand,
checks the analytic gradients against central finite differences, and lets
Adam walk a toy quadratic downhill.
"""

import numpy as np

from faet import Adam, autograd as ag

# --- a scalar graph: loss = sigmoid(x * y) + tanh(x) --------------------
x = ag.param(0.7)
y = ag.param(-1.3)
loss = ag.sigmoid(x * y) + ag.tanh(x)
loss.backward()
print("loss                :", loss.item())
print("d loss / d x        :", float(x.grad))
print("d loss / d y        :", float(y.grad))

# the same derivative, measured numerically
h = 1e-6
x.data += h
up = ag.sigmoid(x * y).item() + ag.tanh(x).item()
x.data -= 2 * h
down = ag.sigmoid(x * y).item() + ag.tanh(x).item()
x.data += h
print("central difference  :", (up - down) / (2 * h))

# --- the built-in checker samples every parameter group -----------------
w = ag.param(np.array([[0.2, -0.4], [0.1, 0.3]]))
b = ag.param(np.zeros(2))


def network_loss():
    out = ag.tanh(ag.add(ag.matmul(ag.constant([1.0, -2.0]), w), b))
    return ag.sum_along(ag.mul(out, out))


report = ag.finite_difference_check(network_loss, {"w": w, "b": b})
print("\nfinite-difference report:", {k: f"{v:.2e}" for k, v in report.items()})

# --- Adam on f(p) = sum((p - 3)^2) ---------------------------------------
p = ag.param(np.zeros(4))
opt = Adam({"p": p}, lr=0.2)
for step in range(120):
    opt.zero_grad()
    diff = p - ag.constant(np.full(4, 3.0))
    ag.sum_along(diff * diff).backward()
    opt.step()
print("\nAdam pulled p to    :", np.round(p.data, 4), "(target 3.0)")

"""AdaDelta updates with per-tensor accumulator state.

Pure AdaDelta: no global learning rate.  Defaults rho=0.95, eps=1e-6."""

import os

import numpy as np

from tweetcnn.network import load_tensor, save_tensor


def adadelta_update(param, grad, eg2, edx2, rho, eps):
    """One in-place AdaDelta step on a tensor (or a row slice of one).

    Eg2  <- rho*Eg2 + (1-rho)*g^2
    dx    = -sqrt(Edx2+eps)/sqrt(Eg2+eps) * g
    Edx2 <- rho*Edx2 + (1-rho)*dx^2
    p    <- p + dx"""
    if not np.all(np.isfinite(grad)):
        raise ValueError("diverged")
    eg2 *= rho
    eg2 += (1.0 - rho) * np.square(grad)
    dx = -np.sqrt((edx2 + eps) / (eg2 + eps)) * grad
    edx2 *= rho
    edx2 += (1.0 - rho) * np.square(dx)
    param += dx
    return dx


class AdaDelta:
    """Optimizer state for a named set of tensors.

    The embedding gradient may be sparse ((rows, values)); only the touched
    rows' accumulators are updated then."""

    def __init__(self, tensors, rho=0.95, eps=1e-6):
        if not 0.0 < rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        self.rho = rho
        self.eps = eps
        self.eg2 = {k: np.zeros_like(v) for k, v in tensors.items()}
        self.edx2 = {k: np.zeros_like(v) for k, v in tensors.items()}

    def step(self, tensors, grads):
        for name, grad in grads.items():
            if name not in self.eg2:
                raise ValueError(f"unknown tensor {name!r}")
            param = tensors[name]
            if isinstance(grad, tuple):
                rows, vals = grad
                if len(rows) == 0:
                    continue
                if vals.shape != (len(rows),) + param.shape[1:]:
                    raise ValueError(f"sparse gradient shape mismatch for {name!r}")
                # fancy indexing copies, so write the slices back explicitly
                sub_p = param[rows]
                sub_eg2 = self.eg2[name][rows]
                sub_edx2 = self.edx2[name][rows]
                adadelta_update(sub_p, vals, sub_eg2, sub_edx2, self.rho, self.eps)
                param[rows] = sub_p
                self.eg2[name][rows] = sub_eg2
                self.edx2[name][rows] = sub_edx2
                continue
            if grad.shape != param.shape:
                raise ValueError(f"gradient shape mismatch for {name!r}")
            adadelta_update(
                param, grad, self.eg2[name], self.edx2[name], self.rho, self.eps
            )

    def save(self, model_dir):
        for name in self.eg2:
            save_tensor(os.path.join(model_dir, f"opt_{name}_eg2.bin"), self.eg2[name])
            save_tensor(os.path.join(model_dir, f"opt_{name}_edx2.bin"), self.edx2[name])

    def load(self, model_dir):
        for name in self.eg2:
            self.eg2[name] = load_tensor(
                os.path.join(model_dir, f"opt_{name}_eg2.bin"), self.eg2[name].shape
            )
            self.edx2[name] = load_tensor(
                os.path.join(model_dir, f"opt_{name}_edx2.bin"), self.edx2[name].shape
            )

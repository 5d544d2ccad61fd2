"""Central finite-difference verification of a model's analytic gradients."""
from dataclasses import dataclass, field

import numpy as np

REL_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    per_param: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.max_rel_error <= self.tol


def relative_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return np.abs(analytic - numeric) / denom


def grad_check(model, x, target, tol=1e-4, eps=1e-5, max_entries=None, rng=None):
    """Compares every (or a sampled subset of) parameter entries against central differences."""
    model.loss_and_grad(x, target)
    analytic = {name: model.params.grads[name].copy() for name in model.params.names()}
    rng = np.random.default_rng(0) if rng is None else rng
    report = GradCheckReport(max_rel_error=0.0, tol=tol)
    for name in model.params.names():
        value = model.params.params[name]
        flat = value.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        worst = 0.0
        for i in idx:
            original = flat[i]
            flat[i] = original + eps
            up = model.loss_and_grad(x, target)
            flat[i] = original - eps
            down = model.loss_and_grad(x, target)
            flat[i] = original
            numeric = (up - down) / (2 * eps)
            err = float(relative_error(analytic[name].reshape(-1)[i], numeric))
            worst = max(worst, err)
        report.per_param[name] = worst
        report.max_rel_error = max(report.max_rel_error, worst)
    model.params.grads.update(analytic)
    return report


def standard_suite(rng, tol=1e-4):
    """Small instance of every model shape the learners use; name -> GradCheckReport."""
    from thzvr.nn.models import MLP, ConvNet, RecurrentNet

    cases = {
        "mlp-relu": (MLP((4, 6, 3), rng), rng.normal(size=(5, 4)), rng.normal(size=(5, 3))),
        "mlp-tanh": (MLP((4, 6, 3), rng, activation="tanh"), rng.normal(size=(5, 4)),
                     rng.normal(size=(5, 3))),
        "convnet": (ConvNet((5, 5, 3), rng, filters=2, hidden=4), rng.normal(size=(3, 5, 5, 3)),
                    np.array([0, 1, 1])),
        "gru": (RecurrentNet("gru", 2, 4, 1, rng), 0.5 * rng.normal(size=(3, 4, 2)),
                rng.normal(size=(3, 1))),
        "lstm": (RecurrentNet("lstm", 3, 4, 4, rng, loss="xent"), 0.5 * rng.normal(size=(3, 4, 3)),
                 np.array([0, 2, 3])),
    }
    return {name: grad_check(model, x, y, tol=tol) for name, (model, x, y) in cases.items()}

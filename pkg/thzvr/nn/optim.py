"""SGD and Adam over a ParameterTree's populated gradients."""
import numpy as np


def sgd_step(tree, lr):
    for name in tree.names():
        tree.params[name] = tree.params[name] - lr * tree.grads[name]


def adam_step(tree, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; `state` holds the step count and moments."""
    state["t"] = state.get("t", 0) + 1
    t = state["t"]
    m = state.setdefault("m", {})
    v = state.setdefault("v", {})
    for name in tree.names():
        g = tree.grads[name]
        m[name] = beta1 * m.get(name, np.zeros_like(g)) + (1 - beta1) * g
        v[name] = beta2 * v.get(name, np.zeros_like(g)) + (1 - beta2) * g ** 2
        m_hat = m[name] / (1 - beta1 ** t)
        v_hat = v[name] / (1 - beta2 ** t)
        tree.params[name] = tree.params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, tree):
        sgd_step(tree, self.lr)


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = {}

    def step(self, tree):
        adam_step(tree, self.state, self.lr, self.beta1, self.beta2, self.eps)


def make_optimizer(name, lr):
    if name == "adam":
        return Adam(lr)
    return SGD(lr)

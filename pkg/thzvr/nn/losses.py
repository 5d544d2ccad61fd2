"""Loss functions returning (value, gradient w.r.t. the network output)."""
import numpy as np
from scipy.special import softmax

PROB_FLOOR = 1e-12


def mse(pred, target):
    """Squared error summed over components, averaged over rows (users / samples)."""
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    diff = pred - target
    n = diff.shape[0]
    return float(np.sum(diff ** 2) / n), 2.0 * diff / n


def cross_entropy(probs, labels):
    """Mean of −log p[label]; probabilities are floored at 1e-12."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def softmax_cross_entropy(logits, labels):
    """Cross-entropy of softmax(logits); gradient is taken w.r.t. the logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    probs = softmax(logits, axis=-1)
    n = len(labels)
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return cross_entropy(probs, labels), grad / n

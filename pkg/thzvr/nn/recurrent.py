"""GRU and LSTM cells with backpropagation through time.

Parameters live in a ParameterTree under `<prefix>W_*` (input weights,
in x hidden), `<prefix>U_*` (recurrent weights, hidden x hidden) and
`<prefix>b_*`. States are batched: x (B, I), h and c (B, H).

GRU:  z = σ(x W_z + h U_z + b_z),  r = σ(x W_r + h U_r + b_r),
      n = tanh(x W_n + (r ⊙ h) U_n + b_n),  h' = (1 − z) ⊙ n + z ⊙ h
LSTM: i, f, o = σ(·), g = tanh(·),  c' = f ⊙ c + i ⊙ g,  h' = o ⊙ tanh(c')
"""
import numpy as np
from scipy.special import expit

from thzvr.nn.layers import glorot_uniform

GRU_GATES = ("z", "r", "n")
LSTM_GATES = ("i", "f", "o", "g")


def _gates(kind):
    return GRU_GATES if kind == "gru" else LSTM_GATES


def init_recurrent(tree, kind, n_in, n_hidden, rng, prefix=""):
    """Scaled-uniform init; LSTM forget bias starts at 1."""
    for gate in _gates(kind):
        tree.add(f"{prefix}W_{gate}", glorot_uniform(rng, (n_in, n_hidden), n_in, n_hidden))
        tree.add(f"{prefix}U_{gate}", glorot_uniform(rng, (n_hidden, n_hidden), n_hidden, n_hidden))
        tree.add(f"{prefix}b_{gate}", np.ones(n_hidden) if gate == "f" else np.zeros(n_hidden))
    return tree


def _pre(params, prefix, gate, x, h):
    return x @ params[f"{prefix}W_{gate}"] + h @ params[f"{prefix}U_{gate}"] + params[f"{prefix}b_{gate}"]


def gru_cell(x, h_prev, params, prefix=""):
    z = expit(_pre(params, prefix, "z", x, h_prev))
    r = expit(_pre(params, prefix, "r", x, h_prev))
    rh = r * h_prev
    n = np.tanh(x @ params[f"{prefix}W_n"] + rh @ params[f"{prefix}U_n"] + params[f"{prefix}b_n"])
    h = (1.0 - z) * n + z * h_prev
    return h, (x, h_prev, z, r, n, rh)


def gru_cell_backward(dh, cache, params, grads, prefix=""):
    """Accumulates parameter gradients into `grads`; returns (dx, dh_prev)."""
    x, h_prev, z, r, n, rh = cache
    dn = dh * (1.0 - z)
    dz = dh * (h_prev - n)
    dh_prev = dh * z

    da_n = dn * (1.0 - n ** 2)
    grads[f"{prefix}W_n"] += x.T @ da_n
    grads[f"{prefix}U_n"] += rh.T @ da_n
    grads[f"{prefix}b_n"] += da_n.sum(axis=0)
    drh = da_n @ params[f"{prefix}U_n"].T
    dx = da_n @ params[f"{prefix}W_n"].T
    dr = drh * h_prev
    dh_prev += drh * r

    for gate, d_out, act in (("z", dz, z), ("r", dr, r)):
        da = d_out * act * (1.0 - act)
        grads[f"{prefix}W_{gate}"] += x.T @ da
        grads[f"{prefix}U_{gate}"] += h_prev.T @ da
        grads[f"{prefix}b_{gate}"] += da.sum(axis=0)
        dx += da @ params[f"{prefix}W_{gate}"].T
        dh_prev += da @ params[f"{prefix}U_{gate}"].T
    return dx, dh_prev


def lstm_cell(x, h_prev, c_prev, params, prefix=""):
    i = expit(_pre(params, prefix, "i", x, h_prev))
    f = expit(_pre(params, prefix, "f", x, h_prev))
    o = expit(_pre(params, prefix, "o", x, h_prev))
    g = np.tanh(_pre(params, prefix, "g", x, h_prev))
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def lstm_cell_backward(dh, dc, cache, params, grads, prefix=""):
    """Returns (dx, dh_prev, dc_prev)."""
    x, h_prev, c_prev, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc ** 2)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * f

    dx = np.zeros_like(x)
    dh_prev = np.zeros_like(h_prev)
    for gate, d_out, act in (("i", di, i), ("f", df, f), ("o", do, o), ("g", dg, g)):
        da = d_out * (1.0 - act ** 2) if gate == "g" else d_out * act * (1.0 - act)
        grads[f"{prefix}W_{gate}"] += x.T @ da
        grads[f"{prefix}U_{gate}"] += h_prev.T @ da
        grads[f"{prefix}b_{gate}"] += da.sum(axis=0)
        dx += da @ params[f"{prefix}W_{gate}"].T
        dh_prev += da @ params[f"{prefix}U_{gate}"].T
    return dx, dh_prev, dc_prev


def unroll(kind, xs, params, prefix="", h0=None):
    """Runs the cell over xs (B, T, I); returns (hidden states (B, T, H), caches)."""
    xs = np.asarray(xs, dtype=float)
    B, T, _ = xs.shape
    n_hidden = params[f"{prefix}U_{_gates(kind)[0]}"].shape[0]
    h = np.zeros((B, n_hidden)) if h0 is None else h0
    c = np.zeros((B, n_hidden))
    hs, caches = [], []
    for t in range(T):
        if kind == "gru":
            h, cache = gru_cell(xs[:, t], h, params, prefix)
        else:
            h, c, cache = lstm_cell(xs[:, t], h, c, params, prefix)
        hs.append(h)
        caches.append(cache)
    return np.stack(hs, axis=1), caches


def bptt(kind, caches, dh_seq, params, grads, prefix=""):
    """Backpropagates per-step hidden gradients dh_seq (B, T, H) through the unrolled window.

    Returns the input gradients (B, T, I).
    """
    T = len(caches)
    dh_next = np.zeros_like(dh_seq[:, 0])
    dc_next = np.zeros_like(dh_next)
    dxs = [None] * T
    for t in reversed(range(T)):
        dh = dh_seq[:, t] + dh_next
        if kind == "gru":
            dxs[t], dh_next = gru_cell_backward(dh, caches[t], params, grads, prefix)
        else:
            dxs[t], dh_next, dc_next = lstm_cell_backward(dh, dc_next, caches[t], params, grads, prefix)
    return np.stack(dxs, axis=1)

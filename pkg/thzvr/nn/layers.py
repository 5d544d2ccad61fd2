"""Feed-forward layers with explicit backward passes.

Inputs are batched on the leading axis: dense takes (B, in), conv2d and
maxpool2x2 take (B, H, W, C). Unbatched inputs are promoted and squeezed
back by the forward helpers.
"""
import numpy as np
from scipy.special import softmax as _softmax

from thzvr.errors import DomainError


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def dense(x, W, b):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise DomainError(f"dense: input {x.shape} incompatible with W {W.shape}, b {b.shape}")
    return x @ W + b


def dense_backward(x, W, grad_out):
    """Returns (dx, dW, db) for y = xW + b."""
    x2 = np.atleast_2d(x)
    g2 = np.atleast_2d(grad_out)
    dW = x2.T @ g2
    db = g2.sum(axis=0)
    dx = (g2 @ W.T).reshape(np.shape(x))
    return dx, dW, db


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(x, grad_out):
    return grad_out * (x > 0)


def tanh_backward(y, grad_out):
    """Backward of tanh given its output y."""
    return grad_out * (1.0 - y ** 2)


def softmax(logits):
    return _softmax(np.asarray(logits, dtype=float), axis=-1)


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 3:
        return x[None], True
    if x.ndim != 4:
        raise DomainError(f"expected HxWxC or BxHxWxC input, got shape {x.shape}")
    return x, False


def conv2d(x, K, b=None, zero_pad=True):
    """Stride-1 convolution; with zero padding the output keeps the input's H x W.

    For an even kernel the extra padding goes on the bottom/right edge.
    """
    x, squeeze = _as_batch(x)
    kh, kw, c_in, f = K.shape
    if x.shape[-1] != c_in:
        raise DomainError(f"conv2d: input has {x.shape[-1]} channels, kernel expects {c_in}")
    B, H, W, _ = x.shape
    if zero_pad:
        top, left = (kh - 1) // 2, (kw - 1) // 2
        xp = np.pad(x, ((0, 0), (top, kh - 1 - top), (left, kw - 1 - left), (0, 0)))
        oh, ow = H, W
    else:
        xp = x
        oh, ow = H - kh + 1, W - kw + 1
    out = np.zeros((B, oh, ow, f))
    for di in range(kh):
        for dj in range(kw):
            out += xp[:, di:di + oh, dj:dj + ow, :] @ K[di, dj]
    if b is not None:
        out += b
    return out[0] if squeeze else out


def conv2d_backward(x, K, grad_out, zero_pad=True):
    """Returns (dx, dK, db)."""
    xb, squeeze = _as_batch(x)
    g = grad_out[None] if squeeze else grad_out
    kh, kw, _, _ = K.shape
    B, H, W, _ = xb.shape
    if zero_pad:
        top, left = (kh - 1) // 2, (kw - 1) // 2
        xp = np.pad(xb, ((0, 0), (top, kh - 1 - top), (left, kw - 1 - left), (0, 0)))
    else:
        top = left = 0
        xp = xb
    oh, ow = g.shape[1], g.shape[2]
    dK = np.zeros_like(K)
    dxp = np.zeros_like(xp)
    g_flat = g.reshape(-1, g.shape[-1])
    for di in range(kh):
        for dj in range(kw):
            patch = xp[:, di:di + oh, dj:dj + ow, :]
            dK[di, dj] = patch.reshape(-1, patch.shape[-1]).T @ g_flat
            dxp[:, di:di + oh, dj:dj + ow, :] += g @ K[di, dj].T
    db = g.sum(axis=(0, 1, 2))
    dx = dxp[:, top:top + H, left:left + W, :]
    return (dx[0] if squeeze else dx), dK, db


def _pool_windows(x):
    B, H, W, F = x.shape
    h2, w2 = -(-H // 2), -(-W // 2)
    xp = np.pad(x, ((0, 0), (0, 2 * h2 - H), (0, 2 * w2 - W), (0, 0)), constant_values=-np.inf)
    win = xp.reshape(B, h2, 2, w2, 2, F).transpose(0, 1, 3, 5, 2, 4).reshape(B, h2, w2, F, 4)
    return win


def maxpool2x2(x):
    """2x2 max pooling, stride 2, ceil mode (odd edges pool over what is there)."""
    xb, squeeze = _as_batch(x)
    out = _pool_windows(xb).max(axis=-1)
    return out[0] if squeeze else out


def maxpool2x2_backward(x, grad_out):
    xb, squeeze = _as_batch(x)
    g = grad_out[None] if squeeze else grad_out
    B, H, W, F = xb.shape
    win = _pool_windows(xb)
    idx = win.argmax(axis=-1)
    dwin = np.zeros_like(win)
    np.put_along_axis(dwin, idx[..., None], g[..., None], axis=-1)
    h2, w2 = win.shape[1], win.shape[2]
    dxp = dwin.reshape(B, h2, w2, F, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(B, 2 * h2, 2 * w2, F)
    dx = dxp[:, :H, :W, :]
    return dx[0] if squeeze else dx

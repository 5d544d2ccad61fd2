"""The network shapes used by the learners: MLP, small ConvNet and recurrent nets.

Every model owns a ParameterTree and exposes forward / backward /
loss_and_grad. `loss` is "mse" (regression) or "xent" (softmax
cross-entropy on the output logits).
"""
import numpy as np

from thzvr.errors import DomainError
from thzvr.nn import layers
from thzvr.nn.losses import mse, softmax_cross_entropy
from thzvr.nn.params import ParameterTree
from thzvr.nn.recurrent import bptt, init_recurrent, unroll


class Model:
    loss = "mse"

    def __init__(self):
        self.params = ParameterTree()
        self._cache = None

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def loss_value(self, out, target):
        if self.loss == "xent":
            return softmax_cross_entropy(out, target)
        return mse(out, np.asarray(target, dtype=float).reshape(np.shape(out)))

    def loss_and_grad(self, x, target):
        self.params.zero_grad()
        out = self.forward(x)
        value, grad = self.loss_value(out, target)
        self.backward(grad)
        return value

    def predict(self, x):
        out = self.forward(x)
        return layers.softmax(out) if self.loss == "xent" else out

    def copy(self):
        clone = self.__class__.__new__(self.__class__)
        clone.__dict__.update(self.__dict__)
        clone.params = self.params.copy()
        clone._cache = None
        return clone


class MLP(Model):
    """Dense stack; hidden layers use `activation`, the head is linear."""

    def __init__(self, sizes, rng, activation="relu", loss="mse"):
        super().__init__()
        if len(sizes) < 2:
            raise DomainError(f"MLP needs at least input and output sizes, got {sizes}")
        self.sizes = tuple(sizes)
        self.activation = activation
        self.loss = loss
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            self.params.add(f"W{i}", layers.glorot_uniform(rng, (n_in, n_out), n_in, n_out))
            self.params.add(f"b{i}", np.zeros(n_out))

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def forward(self, x):
        a = np.atleast_2d(np.asarray(x, dtype=float))
        cache = []
        for i in range(self.n_layers):
            z = layers.dense(a, self.params[f"W{i}"], self.params[f"b{i}"])
            cache.append((a, z))
            if i < self.n_layers - 1:
                a = layers.relu(z) if self.activation == "relu" else np.tanh(z)
            else:
                a = z
        self._cache = cache
        return a

    def backward(self, grad_out):
        g = grad_out
        for i in reversed(range(self.n_layers)):
            a_in, z = self._cache[i]
            if i < self.n_layers - 1:
                if self.activation == "relu":
                    g = layers.relu_backward(z, g)
                else:
                    g = layers.tanh_backward(np.tanh(z), g)
            g, dW, db = layers.dense_backward(a_in, self.params[f"W{i}"], g)
            self.params.accumulate(f"W{i}", dW)
            self.params.accumulate(f"b{i}", db)
        return g


class ConvNet(Model):
    """conv-relu x n_conv, 2x2 max-pool, dense-relu, dense head (2-class by default)."""

    loss = "xent"

    def __init__(self, input_shape, rng, filters=64, hidden=128, n_classes=2, n_conv=2,
                 kernel=2):
        super().__init__()
        self.input_shape = tuple(input_shape)
        self.n_conv = n_conv
        H, W, c = self.input_shape
        c_in = c
        for i in range(n_conv):
            self.params.add(f"conv{i}_K", layers.glorot_uniform(
                rng, (kernel, kernel, c_in, filters), kernel * kernel * c_in, kernel * kernel * filters))
            self.params.add(f"conv{i}_b", np.zeros(filters))
            c_in = filters
        flat = (-(-H // 2)) * (-(-W // 2)) * filters
        self.params.add("fc0_W", layers.glorot_uniform(rng, (flat, hidden), flat, hidden))
        self.params.add("fc0_b", np.zeros(hidden))
        self.params.add("fc1_W", layers.glorot_uniform(rng, (hidden, n_classes), hidden, n_classes))
        self.params.add("fc1_b", np.zeros(n_classes))

    def forward(self, x):
        a = np.asarray(x, dtype=float)
        if a.ndim == 3:
            a = a[None]
        if a.shape[1:] != self.input_shape:
            raise DomainError(f"ConvNet expects {self.input_shape} images, got {a.shape[1:]}")
        conv_cache = []
        for i in range(self.n_conv):
            z = layers.conv2d(a, self.params[f"conv{i}_K"], self.params[f"conv{i}_b"])
            conv_cache.append((a, z))
            a = layers.relu(z)
        pooled = layers.maxpool2x2(a)
        flat = pooled.reshape(len(pooled), -1)
        z0 = layers.dense(flat, self.params["fc0_W"], self.params["fc0_b"])
        a0 = layers.relu(z0)
        out = layers.dense(a0, self.params["fc1_W"], self.params["fc1_b"])
        self._cache = (conv_cache, a, pooled.shape, flat, z0, a0)
        return out

    def backward(self, grad_out):
        conv_cache, pre_pool, pooled_shape, flat, z0, a0 = self._cache
        g, dW, db = layers.dense_backward(a0, self.params["fc1_W"], grad_out)
        self.params.accumulate("fc1_W", dW)
        self.params.accumulate("fc1_b", db)
        g = layers.relu_backward(z0, g)
        g, dW, db = layers.dense_backward(flat, self.params["fc0_W"], g)
        self.params.accumulate("fc0_W", dW)
        self.params.accumulate("fc0_b", db)
        g = layers.maxpool2x2_backward(pre_pool, g.reshape(pooled_shape))
        for i in reversed(range(self.n_conv)):
            a_in, z = conv_cache[i]
            g = layers.relu_backward(z, g)
            g, dK, db = layers.conv2d_backward(a_in, self.params[f"conv{i}_K"], g)
            self.params.accumulate(f"conv{i}_K", dK)
            self.params.accumulate(f"conv{i}_b", db)
        return g


class RecurrentNet(Model):
    """GRU or LSTM over a (B, T, I) window; a dense head reads the last hidden state."""

    def __init__(self, kind, n_in, n_hidden, n_out, rng, loss="mse"):
        super().__init__()
        if kind not in ("gru", "lstm"):
            raise DomainError(f"unknown recurrent cell '{kind}'")
        self.kind = kind
        self.loss = loss
        init_recurrent(self.params, kind, n_in, n_hidden, rng, prefix="rnn_")
        self.params.add("head_W", layers.glorot_uniform(rng, (n_hidden, n_out), n_hidden, n_out))
        self.params.add("head_b", np.zeros(n_out))

    def forward(self, xs):
        xs = np.asarray(xs, dtype=float)
        if xs.ndim == 2:
            xs = xs[None]
        hs, caches = unroll(self.kind, xs, self.params, prefix="rnn_")
        h_last = hs[:, -1]
        self._cache = (caches, hs.shape, h_last)
        return layers.dense(h_last, self.params["head_W"], self.params["head_b"])

    def backward(self, grad_out):
        caches, hs_shape, h_last = self._cache
        dh, dW, db = layers.dense_backward(h_last, self.params["head_W"], grad_out)
        self.params.accumulate("head_W", dW)
        self.params.accumulate("head_b", db)
        dh_seq = np.zeros(hs_shape)
        dh_seq[:, -1] = dh
        return bptt(self.kind, caches, dh_seq, self.params.params, self.params.grads, prefix="rnn_")

"""Named parameter collections with parallel gradients, plus binary checkpoints.

Binary layout: for every tensor, in manifest order, its float64 values in
little-endian row-major order. The text manifest lists `name shape` lines.
"""
from collections import OrderedDict
from pathlib import Path

import numpy as np

from thzvr.errors import DomainError

DTYPE = np.float64


class ParameterTree:
    def __init__(self, params=None):
        self.params = OrderedDict()
        self.grads = OrderedDict()
        for name, value in (params or {}).items():
            self.add(name, value)

    def add(self, name, value):
        value = np.array(value, dtype=DTYPE)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        return value

    def __getitem__(self, name):
        return self.params[name]

    def __setitem__(self, name, value):
        value = np.asarray(value, dtype=DTYPE)
        if value.shape != self.params[name].shape:
            raise DomainError(f"{name}: shape {value.shape} != {self.params[name].shape}")
        self.params[name] = value

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def names(self):
        return list(self.params)

    def shapes(self):
        return OrderedDict((k, v.shape) for k, v in self.params.items())

    def zero_grad(self):
        for name in self.grads:
            self.grads[name] = np.zeros_like(self.params[name])

    def accumulate(self, name, grad):
        self.grads[name] = self.grads[name] + grad

    @property
    def size(self):
        return int(sum(v.size for v in self.params.values()))

    def copy(self):
        return ParameterTree(OrderedDict((k, v.copy()) for k, v in self.params.items()))

    def assign(self, other):
        """Copy values from a tree with identical names and shapes."""
        self.check_compatible(other)
        for name in self.params:
            self.params[name] = other.params[name].copy()

    def check_compatible(self, other):
        if self.shapes() != other.shapes():
            raise DomainError("parameter trees differ in names or shapes")

    def flat(self):
        return np.concatenate([v.ravel() for v in self.params.values()]) if self.params else np.zeros(0)

    def global_norm(self):
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.grads.values())))

    def clip_grads(self, max_norm):
        norm = self.global_norm()
        if max_norm and norm > max_norm:
            scale = max_norm / norm
            for name in self.grads:
                self.grads[name] = self.grads[name] * scale
        return norm

    def to_bytes(self):
        return b"".join(v.astype("<f8").tobytes() for v in self.params.values())

    def manifest(self):
        return "\n".join(f"{name} {' '.join(str(s) for s in v.shape) or '-'}"
                         for name, v in self.params.items()) + "\n"

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())
        path.with_suffix(path.suffix + ".manifest").write_text(self.manifest())

    @classmethod
    def load(cls, path):
        path = Path(path)
        raw = np.frombuffer(path.read_bytes(), dtype="<f8")
        tree = cls()
        offset = 0
        for line in path.with_suffix(path.suffix + ".manifest").read_text().splitlines():
            if not line.strip():
                continue
            name, *dims = line.split()
            shape = () if dims == ["-"] else tuple(int(d) for d in dims)
            count = int(np.prod(shape)) if shape else 1
            if offset + count > raw.size:
                raise DomainError(f"{path}: truncated at tensor '{name}'")
            tree.add(name, raw[offset:offset + count].reshape(shape))
            offset += count
        if offset != raw.size:
            raise DomainError(f"{path}: {raw.size - offset} trailing values")
        return tree

    def payload_bits(self, bits_per_value=32):
        return self.size * bits_per_value


def save_tensors(path, tensors):
    ParameterTree(tensors).save(path)


def load_tensors(path):
    return dict(ParameterTree.load(path).params)

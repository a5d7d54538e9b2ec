"""Dense networks with hand-written reverse mode and an Adam optimizer.

Everything runs in float64 on numpy. Inputs are row-major batches of shape
``(batch, features)``; a 1-D input is treated as a batch of one and the output
is returned 1-D as well.
"""

from enum import Enum
import hashlib
import io
import json
from pathlib import Path
import zipfile

import numpy as np

CONTAINER_FORMAT = "driftsac-checkpoint"
CONTAINER_VERSION = 1


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    LINEAR = "linear"


def _activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.TANH:
        return np.tanh(z)
    return z


def _activation_grad(kind: Activation, z: np.ndarray, a: np.ndarray, g: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return g * (z > 0.0)
    if kind is Activation.TANH:
        return g * (1.0 - a * a)
    return g


class DenseNet:
    """Stack of fully connected layers.

    ``layer_sizes`` lists every width including input and output, so a net with
    sizes ``[42, 256, 256, 4]`` has three weight matrices. Weights are drawn
    uniformly in +/- 1/sqrt(fan_in); the last layer optionally uses a smaller
    range ``out_init`` so initial outputs stay near zero.
    """

    def __init__(self, layer_sizes, activations, rng: np.random.Generator | None = None,
                 out_init: float | None = None):
        self.layer_sizes = [int(n) for n in layer_sizes]
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output width")
        if isinstance(activations, (str, Activation)):
            activations = [activations] * (len(self.layer_sizes) - 1)
        self.activations = [Activation(a) for a in activations]
        if len(self.activations) != len(self.layer_sizes) - 1:
            raise ValueError("one activation per layer required")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights = []
        self.biases = []
        n_layers = len(self.layer_sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            if i == n_layers - 1 and out_init is not None:
                bound = out_init
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_params(self, values) -> None:
        values = list(values)
        for i in range(len(self.weights)):
            w, b = values[2 * i], values[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError("parameter shape mismatch")
            # in place, so optimizers holding these arrays stay bound
            self.weights[i][...] = w
            self.biases[i][...] = b

    def copy(self) -> "DenseNet":
        other = DenseNet.__new__(DenseNet)
        other.layer_sizes = list(self.layer_sizes)
        other.activations = list(self.activations)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"input has shape {x.shape}, expected (*, {self.input_dim})")
        return x, single

    def forward(self, x) -> np.ndarray:
        a, single = self._check_input(x)
        for w, b, act in zip(self.weights, self.biases, self.activations):
            a = _activate(act, a @ w + b)
        return a[0] if single else a

    def forward_train(self, x):
        """Forward pass that also returns the cache needed by :meth:`backward`."""
        a, single = self._check_input(x)
        cache = []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = a @ w + b
            out = _activate(act, z)
            cache.append((a, z, out))
            a = out
        return (a[0] if single else a), (cache, single)

    def backward(self, cache, grad_out, need_input_grad: bool = True):
        """Gradients of ``sum(grad_out * output)``.

        Returns ``(param_grads, input_grad)`` with ``param_grads`` ordered like
        :meth:`params`.
        """
        layers, single = cache
        g = np.asarray(grad_out, dtype=float)
        if single:
            g = g[None, :]
        if g.shape != layers[-1][2].shape:
            raise ValueError(f"upstream gradient shape {g.shape} != output {layers[-1][2].shape}")
        grads = [None] * (2 * len(layers))
        for i in range(len(layers) - 1, -1, -1):
            a_in, z, out = layers[i]
            g = _activation_grad(self.activations[i], z, out, g)
            grads[2 * i] = a_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0 or need_input_grad:
                g = g @ self.weights[i].T
        dx = None
        if need_input_grad:
            dx = g[0] if single else g
        return grads, dx

    def describe(self) -> dict:
        return {"layer_sizes": self.layer_sizes,
                "activations": [a.value for a in self.activations]}


class Adam:
    """Bias-corrected Adam over a fixed list of parameter arrays (updated in place)."""

    def __init__(self, params, lr: float = 3e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.skipped = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads) -> bool:
        """Apply one update; returns False (and counts it) if any gradient is non-finite."""
        grads = list(grads)
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameters")
        for p, g in zip(self.params, grads):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not all(np.all(np.isfinite(g)) for g in grads):
            self.skipped += 1
            return False
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return True

    def state_arrays(self) -> list[np.ndarray]:
        return self.m + self.v

    def state_meta(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "step_count": self.step_count, "skipped": self.skipped}

    def load_state(self, arrays, meta: dict) -> None:
        n = len(self.params)
        arrays = list(arrays)
        if len(arrays) != 2 * n:
            raise ValueError("optimizer state does not match parameters")
        for dst, src in zip(self.m + self.v, arrays):
            if dst.shape != src.shape:
                raise ValueError("optimizer state shape mismatch")
            dst[...] = src
        for key in ("lr", "beta1", "beta2", "eps", "step_count", "skipped"):
            setattr(self, key, meta[key])


# ---------------------------------------------------------------------------
# checkpoint container: a zip of raw .npy arrays plus a JSON manifest carrying a
# digest of every array, so truncation or tampering is detected on load.


class CheckpointError(RuntimeError):
    pass


def _digest(arrays: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(arr.dtype).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def save_container(path, arrays: dict, meta: dict) -> None:
    manifest = {"format": CONTAINER_FORMAT, "version": CONTAINER_VERSION,
                "digest": _digest(arrays), "arrays": sorted(arrays), "meta": meta}
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, sort_keys=True))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            zf.writestr(f"arrays/{name}.npy", buf.getvalue())
    tmp.replace(path)


def load_container(path) -> tuple[dict, dict]:
    path = Path(path)
    try:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            arrays = {}
            for name in manifest["arrays"]:
                arrays[name] = np.load(io.BytesIO(zf.read(f"arrays/{name}.npy")),
                                       allow_pickle=False)
    except (zipfile.BadZipFile, KeyError, ValueError, OSError) as exc:
        raise CheckpointError(f"checkpoint {path} is unreadable or corrupt: {exc}") from exc
    if manifest.get("format") != CONTAINER_FORMAT:
        raise CheckpointError(f"{path} is not a checkpoint container")
    if manifest.get("version") != CONTAINER_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('version')}")
    if _digest(arrays) != manifest["digest"]:
        raise CheckpointError(f"checkpoint {path} failed its integrity check")
    return arrays, manifest["meta"]

import numpy as np
import pytest

from driftsac.neural import (Adam, CheckpointError, DenseNet, load_container, save_container)


def naive_forward(net, x):
    """Loop-based reference forward pass."""
    a = list(x)
    for w, b, act in zip(net.weights, net.biases, net.activations):
        z = []
        for j in range(w.shape[1]):
            total = b[j]
            for i in range(w.shape[0]):
                total += a[i] * w[i, j]
            z.append(total)
        if act.value == "relu":
            a = [max(v, 0.0) for v in z]
        elif act.value == "tanh":
            a = [np.tanh(v) for v in z]
        else:
            a = z
    return np.array(a)


def test_identity_linear_layer():
    net = DenseNet([4, 4], "linear")
    net.set_params([np.eye(4), np.zeros(4)])
    x = np.array([1.0, -2.0, 0.5, 3.0])
    assert np.array_equal(net.forward(x), x)


def test_zero_weights_give_activated_bias():
    net = DenseNet([3, 2], "tanh")
    b = np.array([0.3, -0.7])
    net.set_params([np.zeros((3, 2)), b])
    assert np.allclose(net.forward(np.ones(3)), np.tanh(b), rtol=0, atol=1e-15)


def test_forward_matches_naive_oracle(rng):
    net = DenseNet([5, 7, 6, 3], ["relu", "tanh", "linear"], rng)
    for _ in range(5):
        x = rng.normal(size=5)
        assert np.allclose(net.forward(x), naive_forward(net, x), rtol=0, atol=1e-12)


def test_dimension_mismatch_rejected(rng):
    net = DenseNet([3, 2], "linear", rng)
    with pytest.raises(ValueError):
        net.forward(np.ones(4))
    _, cache = net.forward_train(np.ones((2, 3)))
    with pytest.raises(ValueError):
        net.backward(cache, np.ones((2, 3)))


def test_linear_weight_gradient_closed_form(rng):
    net = DenseNet([3, 2], "linear", rng)
    x = rng.normal(size=3)
    g = rng.normal(size=2)
    _, cache = net.forward_train(x)
    grads, dx = net.backward(cache, g)
    assert np.allclose(grads[0], np.outer(x, g), rtol=0, atol=1e-15)
    assert np.allclose(grads[1], g)
    assert np.allclose(dx, net.weights[0] @ g)


def test_relu_blocks_negative_units():
    net = DenseNet([1, 1, 1], ["relu", "linear"])
    net.set_params([np.array([[1.0]]), np.array([-5.0]), np.array([[2.0]]), np.array([0.0])])
    _, cache = net.forward_train(np.array([1.0]))
    grads, dx = net.backward(cache, np.array([1.0]))
    assert grads[0][0, 0] == 0.0 and dx[0] == 0.0


def _fd_check(net, x, g, h=1e-5):
    """Worst relative error, per parameter array, between analytic and central-difference grads."""
    _, cache = net.forward_train(x)
    grads, dx = net.backward(cache, g)
    loss = lambda: float(np.sum(net.forward(x) * g))
    worst = 0.0
    for p, gp in zip(net.params(), grads):
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            num[idx] = (up - down) / (2 * h)
        scale = max(np.linalg.norm(num), np.linalg.norm(gp), 1e-12)
        worst = max(worst, np.linalg.norm(num - gp) / scale)
    num_x = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = loss()
        x[idx] = old - h
        down = loss()
        x[idx] = old
        num_x[idx] = (up - down) / (2 * h)
    worst = max(worst, np.linalg.norm(num_x - dx) / max(np.linalg.norm(num_x), 1e-12))
    return worst


def random_gradient_checks(n_cases, seed=0):
    rng = np.random.default_rng(seed)
    kinds = ["relu", "tanh", "linear"]
    errors = []
    for _ in range(n_cases):
        depth = int(rng.integers(1, 4))
        sizes = [int(v) for v in rng.integers(1, 7, size=depth + 1)]
        acts = [kinds[int(k)] for k in rng.integers(0, 3, size=depth)]
        net = DenseNet(sizes, acts, rng)
        batch = int(rng.integers(1, 5))
        x = rng.normal(size=(batch, sizes[0]))
        g = rng.normal(size=(batch, sizes[-1]))
        errors.append(_fd_check(net, x, g))
    return errors


def test_gradient_check_small_sample():
    assert max(random_gradient_checks(10, seed=1)) < 1e-5


def test_deterministic(rng):
    net = DenseNet([4, 8, 2], ["relu", "linear"], rng)
    x = rng.normal(size=(3, 4))
    assert np.array_equal(net.forward(x), net.forward(x))


def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0])
    opt = Adam([p])
    opt.step([np.zeros(2)])
    assert np.array_equal(p, [1.0, -2.0])


def test_adam_moves_against_gradient_sign():
    p = np.array([0.0, 0.0])
    opt = Adam([p], lr=1e-2)
    prev = p.copy()
    for _ in range(50):
        opt.step([np.array([2.0, -3.0])])
        assert p[0] < prev[0] and p[1] > prev[1]
        prev = p.copy()


def test_adam_first_step_hand_value():
    p = np.array([0.5])
    opt = Adam([p])
    opt.step([np.array([1.0])])
    assert p[0] - 0.5 == pytest.approx(-0.00029999999700000004, rel=1e-12, abs=1e-12)


def test_adam_skips_non_finite():
    p = np.array([1.0])
    opt = Adam([p])
    assert not opt.step([np.array([np.nan])])
    assert opt.skipped == 1 and opt.step_count == 0 and p[0] == 1.0


def test_fits_sine():
    rng = np.random.default_rng(0)
    x = rng.uniform(-np.pi, np.pi, size=(1000, 1))
    y = np.sin(x)
    net = DenseNet([1, 32, 1], ["tanh", "linear"], rng)
    opt = Adam(net.params(), lr=1e-2)
    for _ in range(5000):
        out, cache = net.forward_train(x)
        grads, _ = net.backward(cache, 2 * (out - y) / len(x), need_input_grad=False)
        opt.step(grads)
    assert np.mean((net.forward(x) - y) ** 2) < 1e-2


def test_container_round_trip(tmp_path, rng):
    arrays = {"w": rng.normal(size=(3, 4)), "b": rng.normal(size=4)}
    save_container(tmp_path / "c.ckpt", arrays, {"note": "x"})
    back, meta = load_container(tmp_path / "c.ckpt")
    assert meta == {"note": "x"}
    for k in arrays:
        assert back[k].tobytes() == arrays[k].tobytes()


def test_container_detects_corruption(tmp_path, rng):
    path = tmp_path / "c.ckpt"
    save_container(path, {"w": rng.normal(size=100)}, {})
    data = bytearray(path.read_bytes())
    data[len(data) // 2] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError):
        load_container(path)
    path.write_bytes(b"not a zip")
    with pytest.raises(CheckpointError):
        load_container(path)

import numpy as np
import pytest

from mcalab import nn
from nn_oracles import dense_forward, fd_relative_errors


def test_finite_difference_gradients():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        worst, sizes = fd_relative_errors(rng)
        assert worst <= 1e-5, sizes


def test_forward_matches_dense_oracle(rng):
    mlp = nn.Mlp.init((5, 7, 6, 3), rng)
    for p in mlp.params[1::2]:
        p += rng.normal(size=p.shape)
    x = rng.normal(size=(8, 5))
    assert np.max(np.abs(mlp(x) - dense_forward(mlp.params, x))) < 1e-12
    assert np.allclose(mlp(x[0]), mlp(x)[0], rtol=0, atol=1e-15)


def test_zero_weights_return_output_bias():
    sizes = (4, 6, 6, 2)
    params = []
    for i, o in zip(sizes[:-1], sizes[1:]):
        params += [np.zeros((i, o)), np.full(o, 0.3)]
    out = nn.forward(params, np.ones(4))
    assert np.allclose(out, 0.3)


def test_relu_kills_negative_preactivation():
    params = [np.array([[1.0]]), np.array([-2.0]), np.array([[1.0]]), np.array([0.0])]
    assert nn.forward(params, np.array([1.0]))[0] == 0.0  # hidden pre-activation -1
    assert nn.forward(params, np.array([3.0]))[0] == 1.0


def test_shape_mismatch(rng):
    mlp = nn.Mlp.init((3, 4, 2), rng)
    with pytest.raises(nn.ShapeError):
        mlp(np.ones(5))
    with pytest.raises(nn.ShapeError):
        nn.Mlp((3, 4, 2), mlp.params[:2])


def test_backward_zero_and_linearity(rng):
    mlp = nn.Mlp.init((4, 5, 5, 3), rng)
    x = rng.normal(size=(6, 4))
    _, cache = nn.forward(mlp.params, x, return_cache=True)
    g = rng.normal(size=(6, 3))
    zero, _ = nn.backward(mlp.params, cache, np.zeros((6, 3)))
    assert all(np.all(z == 0) for z in zero)
    g1, _ = nn.backward(mlp.params, cache, g)
    g3, _ = nn.backward(mlp.params, cache, 3.0 * g)
    for a, b in zip(g1, g3):
        assert np.allclose(3.0 * a, b, rtol=1e-13, atol=1e-15)


def test_input_gradient_by_finite_differences(rng):
    mlp = nn.Mlp.init((3, 8, 8, 2), rng)
    x = rng.normal(size=3)
    G = rng.normal(size=2)
    _, cache = nn.forward(mlp.params, x, return_cache=True)
    _, gx = nn.backward(mlp.params, cache, G)
    h = 1e-6
    num = [(np.dot(mlp(x + h * e), G) - np.dot(mlp(x - h * e), G)) / (2 * h) for e in np.eye(3)]
    assert np.allclose(gx, num, rtol=1e-6, atol=1e-9)


def test_orthogonal_init_and_output_gain(rng):
    mlp = nn.Mlp.init((8, 64, 64, 2), rng, out_gain=0.01)
    W = mlp.params[2]
    assert np.allclose(W.T @ W, 2.0 * np.eye(64), atol=1e-10)  # hidden gain sqrt(2)
    Wout = mlp.params[4]
    assert np.allclose(Wout.T @ Wout, 1e-4 * np.eye(2), atol=1e-14)
    assert all(np.all(b == 0) for b in mlp.params[1::2])


def test_log_prob_of_mean_unit_sigma():
    lp = nn.gaussian_log_prob(np.zeros(2), np.zeros(2), np.zeros(2))
    assert lp == pytest.approx(-np.log(2 * np.pi), abs=1e-12)


def test_degenerate_gaussian_sample_is_mean(rng):
    mean = rng.normal(size=3)
    a, _ = nn.gaussian_logprob_and_sample(mean, np.full(3, -20.0), rng)
    assert np.max(np.abs(a - mean)) < 1e-7


def test_sample_statistics(rng):
    mean = np.array([0.5, -1.0])
    log_std = np.log(np.array([0.3, 2.0]))
    a, lp = nn.gaussian_logprob_and_sample(np.tile(mean, (100_000, 1)), log_std, rng)
    assert np.allclose(a.mean(0), mean, atol=0.02 * np.exp(log_std))
    assert np.allclose(a.std(0), np.exp(log_std), rtol=0.02)
    # log density agrees with scipy's
    from scipy.stats import norm
    ref = norm.logpdf(a[:100], mean, np.exp(log_std)).sum(1)
    assert np.allclose(lp[:100], ref, rtol=1e-12, atol=1e-12)


def test_entropy_closed_form():
    from scipy.stats import norm
    log_std = np.array([-1.0, 0.5])
    assert nn.gaussian_entropy(log_std) == pytest.approx(sum(norm(0, np.exp(s)).entropy() for s in log_std))


def test_log_prob_gradients_by_finite_differences(rng):
    a, m, s = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3) * 0.3
    dm, ds = nn.gaussian_log_prob_grads(a, m, s)
    h = 1e-6
    for i in range(3):
        e = np.eye(3)[i] * h
        assert dm[i] == pytest.approx((nn.gaussian_log_prob(a, m + e, s) - nn.gaussian_log_prob(a, m - e, s)) / (2 * h),
                                      rel=1e-6)
        assert ds[i] == pytest.approx((nn.gaussian_log_prob(a, m, s + e) - nn.gaussian_log_prob(a, m, s - e)) / (2 * h),
                                      rel=1e-6)


def test_adam_first_step_moves_by_lr():
    p = [np.array([1.0, -2.0, 3.0])]
    opt = nn.Adam(lr=1e-2)
    nn.adam_step(p, [np.array([0.5, -7.0, 1e-3])], opt)
    assert np.allclose(p[0], [1.0 - 1e-2, -2.0 + 1e-2, 3.0 - 1e-2], atol=1e-6)


def test_adam_zero_gradients_leave_params():
    p = [np.array([1.0, 2.0])]
    opt = nn.Adam()
    for _ in range(100):
        opt.step(p, [np.zeros(2)])
    assert np.array_equal(p[0], [1.0, 2.0])


def test_adam_quadratic_bowl():
    x = [np.array([3.0, -4.0])]
    opt = nn.Adam(lr=0.05)
    for _ in range(2000):
        opt.step(x, [2.0 * x[0]])
    assert np.max(np.abs(x[0])) < 1e-3


def test_adam_shape_mismatch():
    with pytest.raises(nn.ShapeError):
        nn.Adam().step([np.zeros(2)], [np.zeros(3)])


def test_clip_grad_norm():
    g = [np.array([3.0]), np.array([4.0])]
    clipped, norm = nn.clip_grad_norm(g, 1.0)
    assert norm == 5.0
    assert np.sqrt(sum(float(np.sum(c * c)) for c in clipped)) == pytest.approx(1.0)
    same, _ = nn.clip_grad_norm(g, 10.0)
    assert same[0] is g[0]


def test_save_load_bit_identical(tmp_path, rng):
    mlp = nn.Mlp.init((8, 64, 64, 2), rng)
    path = tmp_path / "w.mcaw"
    nn.save_weights(path, {**nn.mlp_tensors("policy", mlp), "policy.log_std": np.array([-1.0, -1.0])}, {"k": 1})
    tensors, meta = nn.load_weights(path)
    back = nn.mlp_from_tensors("policy", tensors, mlp.sizes)
    x = rng.normal(size=(16, 8))
    assert np.array_equal(back(x), mlp(x))
    assert meta == {"k": 1}
    assert path.read_bytes()[:8] == nn.MAGIC


def test_weight_file_byte_layout(tmp_path):
    import json
    import struct
    path = tmp_path / "w.mcaw"
    nn.save_weights(path, {"a": np.array([[1.0, 2.0], [3.0, 4.0]])})
    raw = path.read_bytes()
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen])
    assert header["tensors"] == [{"name": "a", "shape": [2, 2]}]
    assert np.frombuffer(raw[12 + hlen:], "<f8").tolist() == [1.0, 2.0, 3.0, 4.0]


@pytest.mark.parametrize("mutate", ["magic", "truncate", "trailing", "header"])
def test_corrupt_weight_files(tmp_path, mutate):
    path = tmp_path / "w.mcaw"
    nn.save_weights(path, {"a": np.ones(3)})
    raw = bytearray(path.read_bytes())
    if mutate == "magic":
        raw[0:1] = b"X"
    elif mutate == "truncate":
        raw = raw[:-4]
    elif mutate == "trailing":
        raw += b"\0"
    else:
        raw[12] = 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(nn.WeightFileError):
        nn.load_weights(path)

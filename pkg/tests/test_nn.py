import json
from pathlib import Path

import numpy as np
import pytest

from conftest import build_maze
from exermaze.maze import StateEncoding, encode_state
from exermaze.nn import (
    AdamState,
    QNetwork,
    adam_step,
    forward,
    forward_batch,
    grad_check,
    loss_and_gradients,
)
from oracles import naive_forward

GOLDEN = Path(__file__).parent / "golden"


def tiny_state(n_rooms=3, size=4):
    codes = np.zeros((size, size), dtype=np.int8)
    codes[1, 1] = 3
    codes[2, 2] = 1
    occupied = np.zeros(n_rooms, dtype=np.int8)
    occupied[0] = 1
    return StateEncoding(map_codes=codes, difficulty=0.4, crossings=1, occupied=occupied)


def tiny_net(seed=0, padding="same", size=4, n_rooms=3):
    return QNetwork(
        size, size, n_rooms, conv1_filters=3, conv2_filters=4, hidden=8,
        padding=padding, seed=seed,
    )


@pytest.fixture()
def default_state(grid):
    return encode_state(build_maze(grid, [3, 0, 6, 2]), 0.48)


# --- forward -----------------------------------------------------------------


def test_zero_network_outputs_zeros(default_state):
    net = QNetwork.zeros(16, 16, 8)
    assert np.array_equal(forward(net, default_state), np.zeros(9))


def test_forward_is_pure(default_state):
    net = QNetwork(16, 16, 8, seed=5)
    before = {k: v.copy() for k, v in net.params.items()}
    a = forward(net, default_state)
    b = forward(net, default_state)
    assert np.array_equal(a, b)
    for k in before:
        assert np.array_equal(before[k], net.params[k])


def test_forward_matches_naive_reimplementation(default_state):
    net = QNetwork(16, 16, 8, seed=202)
    fast = forward(net, default_state)
    naive = naive_forward(net, default_state)
    assert np.allclose(fast, naive, rtol=1e-11, atol=1e-12)


def test_forward_matches_naive_same_padding():
    net = tiny_net(seed=9, padding="same")
    state = tiny_state()
    assert np.allclose(forward(net, state), naive_forward(net, state), rtol=1e-11)


def test_forward_matches_golden_vector(default_state):
    net = QNetwork(16, 16, 8, seed=202)
    golden = json.loads((GOLDEN / "forward_vector.json").read_text())
    assert np.allclose(forward(net, default_state), np.array(golden), rtol=1e-9)


def test_forward_batch_consistent_with_single(default_state, grid):
    other = encode_state(build_maze(grid, [1]), 0.3)
    net = QNetwork(16, 16, 8, seed=3)
    batched = forward_batch(net, [default_state, other])
    assert np.allclose(batched[0], forward(net, default_state))
    assert np.allclose(batched[1], forward(net, other))


def test_output_length_is_rooms_plus_one(default_state):
    net = QNetwork(16, 16, 8, seed=1)
    assert forward(net, default_state).shape == (9,)


def test_too_small_map_rejected():
    with pytest.raises(ValueError):
        QNetwork(4, 4, 3, padding="valid")
    with pytest.raises(ValueError):
        QNetwork(8, 8, 3, padding="diagonal")


# --- loss and gradients ------------------------------------------------------


def test_zero_error_means_zero_loss_and_gradients(default_state):
    net = QNetwork(16, 16, 8, seed=4)
    # targets from a forward of the same batch shape: BLAS kernels may round
    # differently for different batch sizes, and the zero must be exact
    q = forward_batch(net, [default_state] * 3)
    batch = [(default_state, a, float(q[i, a])) for i, a in enumerate(range(3))]
    loss, grads = loss_and_gradients(net, batch)
    assert loss == 0.0
    for g in grads.values():
        assert np.array_equal(g, np.zeros_like(g))


def test_output_bias_gradient_closed_form(default_state):
    net = QNetwork(16, 16, 8, seed=4)
    action = 2
    q = float(forward(net, default_state)[action])
    target = q - 1.5
    loss, grads = loss_and_gradients(net, [(default_state, action, target)])
    assert loss == pytest.approx(2.25)
    assert grads["out_b"][action] == pytest.approx(2.0 * (q - target))
    others = np.delete(grads["out_b"], action)
    assert np.array_equal(others, np.zeros(8))
    assert np.array_equal(grads["out_w"][np.arange(9) != action], np.zeros((8, 128)))


def test_empty_batch_rejected(default_state):
    net = QNetwork(16, 16, 8, seed=4)
    with pytest.raises(ValueError):
        loss_and_gradients(net, [])


def test_non_finite_target_rejected(default_state):
    net = QNetwork(16, 16, 8, seed=4)
    with pytest.raises(ValueError):
        loss_and_gradients(net, [(default_state, 0, float("nan"))])


def test_gradients_match_finite_differences():
    worst = grad_check(tiny_net(seed=12), tiny_state(), action=1)
    assert worst < 1e-4


def test_grad_check_valid_padding():
    codes = np.zeros((8, 8), dtype=np.int8)
    codes[4, 0] = 3
    codes[4, 1] = 1
    state = StateEncoding(
        map_codes=codes, difficulty=0.3, crossings=0,
        occupied=np.array([0, 1, 0], dtype=np.int8),
    )
    net = tiny_net(seed=21, padding="valid", size=8)
    assert grad_check(net, state, action=0) < 1e-4


def test_grad_check_linear_region_is_tight():
    # All-positive weights and big positive biases keep every ReLU active,
    # so the loss is exactly quadratic per parameter and central differences
    # are exact up to roundoff.  Weights are kept large enough that no
    # gradient is small relative to that roundoff floor.
    net = tiny_net(seed=2)
    for name, arr in net.params.items():
        if name.endswith("_w"):
            arr[...] = np.abs(arr) * 0.5 + 0.1
        else:
            arr[...] = 3.0
    assert grad_check(net, tiny_state(), action=0) < 1e-7


def test_grad_check_zero_network_reports_near_zero():
    # Almost every entry is an indeterminate 0-vs-0 pair (reported as 0);
    # the output bias of the checked action keeps exact signal.
    net = QNetwork.zeros(4, 4, 3, conv1_filters=3, conv2_filters=4, hidden=8, padding="same")
    assert grad_check(net, tiny_state(), action=1) < 1e-9


def test_grad_check_sampling(default_state):
    net = QNetwork(16, 16, 8, seed=8)
    assert grad_check(net, default_state, action=3, sample_fraction=0.002) < 1e-4


# --- adam ---------------------------------------------------------------------


def test_adam_zero_gradients_keep_parameters():
    net = tiny_net(seed=5)
    before = {k: v.copy() for k, v in net.params.items()}
    grads = {k: np.zeros_like(v) for k, v in net.params.items()}
    adam_step(net, grads, AdamState.for_network(net), lr=0.1, t=1)
    for k in before:
        assert np.array_equal(before[k], net.params[k])


def test_adam_first_step_moves_by_lr():
    net = tiny_net(seed=5)
    grads = {k: np.zeros_like(v) for k, v in net.params.items()}
    grads["out_b"][0] = 1.0
    before = net.params["out_b"][0]
    adam_step(net, grads, AdamState.for_network(net), lr=0.1, t=1)
    assert net.params["out_b"][0] == pytest.approx(before - 0.1, abs=1e-6)


def test_adam_replay_is_deterministic():
    trace = []
    for _ in range(2):
        net = tiny_net(seed=5)
        state = AdamState.for_network(net)
        rng = np.random.default_rng(7)
        for t in range(1, 6):
            grads = {k: rng.normal(size=v.shape) for k, v in net.params.items()}
            adam_step(net, grads, state, lr=1e-3, t=t)
        trace.append({k: v.copy() for k, v in net.params.items()})
    for k in trace[0]:
        assert np.array_equal(trace[0][k], trace[1][k])


def test_adam_rejects_non_finite_gradients():
    net = tiny_net(seed=5)
    grads = {k: np.zeros_like(v) for k, v in net.params.items()}
    grads["fc1_w"][0, 0] = float("inf")
    with pytest.raises(ValueError):
        adam_step(net, grads, AdamState.for_network(net), lr=0.1, t=1)


def test_adam_rejects_bad_step_index():
    net = tiny_net(seed=5)
    grads = {k: np.zeros_like(v) for k, v in net.params.items()}
    with pytest.raises(ValueError):
        adam_step(net, grads, AdamState.for_network(net), lr=0.1, t=0)


def test_single_sample_regression_improves_90_percent(default_state):
    net = QNetwork(16, 16, 8, seed=1)
    state = AdamState.for_network(net)
    batch = [(default_state, 3, -2.0)]
    first, _ = loss_and_gradients(net, batch)
    loss = first
    for t in range(1, 101):
        loss, grads = loss_and_gradients(net, batch)
        adam_step(net, grads, state, lr=1e-3, t=t)
    assert loss <= 0.1 * first


# --- serialization ------------------------------------------------------------


def test_network_json_round_trip_bit_exact():
    net = QNetwork(16, 16, 8, seed=77)
    restored = QNetwork.from_json(net.to_json())
    assert restored.arch_dict() == net.arch_dict()
    for k, arr in net.params.items():
        assert np.array_equal(restored.params[k], arr)


def test_network_json_rejects_bad_version():
    net = tiny_net()
    doc = net.to_json_dict()
    doc["v"] = 99
    with pytest.raises(ValueError):
        QNetwork.from_json_dict(doc)


def test_network_json_rejects_wrong_shapes():
    from exermaze.nn import encode_array

    net = tiny_net()
    doc = net.to_json_dict()
    doc["params"]["out_b"] = encode_array(np.zeros(1))
    with pytest.raises(ValueError):
        QNetwork.from_json_dict(doc)


def test_clone_is_independent():
    net = tiny_net(seed=3)
    copy = net.clone()
    copy.params["out_b"][0] = 123.0
    assert net.params["out_b"][0] != 123.0

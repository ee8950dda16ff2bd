import math

import numpy as np
import pytest
from scipy.integrate import quad

from cltl_synth.model import ModelError, SingleAgentMdp, abstract_1d_gaussian, joint_label

LABELS = {"p1": [2.0, 4.0], "p2": [-4.0, -2.0]}


@pytest.fixture(scope="module")
def mdp():
    return abstract_1d_gaussian(labels=LABELS)


def test_shape_and_rows(mdp):
    assert mdp.kernel.shape == (101, 21, 101)
    np.testing.assert_allclose(mdp.kernel.sum(axis=2), 1.0, atol=1e-12)
    assert mdp.sink == 100
    assert mdp.kernel[100, :, 100].tolist() == [1.0] * 21


def test_cell_probability_by_quadrature(mdp):
    # cell 50 = [0, 0.2), centre 0.1; action 15 = u 1.0
    pdf = lambda y: math.exp(-0.5 * y * y) / math.sqrt(2 * math.pi)
    for target in (50, 55, 60, 99):
        lo = -10 + 0.2 * target
        want, _ = quad(pdf, lo - 1.1, lo + 0.2 - 1.1)
        assert mdp.kernel[50, 15, target] == pytest.approx(want, abs=1e-12)
    assert mdp.action_values[15] == pytest.approx(1.0)


def test_sink_mass_is_tail(mdp):
    # from centre 9.9 with u = +2 the mean lands at 11.9
    from scipy.stats import norm

    want = norm.sf(10 - 11.9) + norm.cdf(-10 - 11.9)
    assert mdp.kernel[99, 20, 100] == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize(
    "x, cell",
    [(-2.1, 39), (-1.9, 40), (0.1, 50), (2.4, 62), (-1.8, 41), (-1.7, 41), (1.8, 59),
     (1.7, 58), (2.3, 61), (1.0, 55), (1.5, 57), (0.0, 50), (-10.0, 0), (9.99, 99)],
)
def test_state_of(mdp, x, cell):
    assert mdp.state_of(x) == cell


def test_state_of_outside(mdp):
    assert mdp.state_of(10.0) == mdp.sink
    assert mdp.state_of(-11) == mdp.sink


def test_labels_on_centres(mdp):
    assert mdp.labels[60] == {"p1"}  # centre 2.1
    assert mdp.labels[69] == {"p1"}  # centre 3.9
    assert mdp.labels[70] == frozenset()
    assert mdp.labels[30] == {"p2"}  # centre -3.9
    assert mdp.labels[40] == frozenset()  # centre -1.9
    assert mdp.labels[mdp.sink] == frozenset()
    assert joint_label([60, 30], mdp) == (frozenset({"p1"}), frozenset({"p2"}))


def test_policy_matrix(mdp):
    pol = np.arange(mdp.n_states) % mdp.n_actions
    P = mdp.policy_matrix(pol)
    assert P.shape == (101, 101)
    np.testing.assert_array_equal(P[7], mdp.kernel[7, 7])


def test_roundtrip(tmp_path, mdp):
    path = tmp_path / "m.json"
    mdp.save(path)
    back = SingleAgentMdp.load(path)
    np.testing.assert_array_equal(back.kernel, mdp.kernel)
    assert back.labels == mdp.labels
    assert back.props == mdp.props
    assert back.state_of(2.4) == 62


def test_validation():
    with pytest.raises(ModelError):
        SingleAgentMdp(np.full((2, 1, 2), 0.4), [set(), set()], ())
    with pytest.raises(ModelError):
        SingleAgentMdp(np.full((2, 1, 3), 1 / 3), [set(), set()], ())
    with pytest.raises(ModelError):
        SingleAgentMdp(np.full((2, 1, 2), 0.5), [{"a"}, set()], ("b",))
    with pytest.raises(ModelError):
        abstract_1d_gaussian(noise_std=0)

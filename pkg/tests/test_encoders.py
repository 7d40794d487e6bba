"""GRU, region embedding, and raw-embedding encoders."""

import numpy as np
import pytest

from exam import autodiff as ad
from exam import encoders
from exam.autodiff import Tensor, check_gradients
from exam.errors import ConfigError


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def f64_gru(rng, ke, kh):
    return encoders.GruParams.init(rng, ke, kh, dtype=np.float64)


class TestGru:
    def test_zero_parameters_keep_state_at_zero(self):
        ke = kh = 3
        params = encoders.GruParams(
            M_z=ad.zeros((kh + ke, kh), requires_grad=True),
            M_r=ad.zeros((kh + ke, kh), requires_grad=True),
            M_h=ad.zeros((kh + ke, kh), requires_grad=True),
        )
        E = ad.zeros((5, ke))
        H = encoders.gru_encode(np.array([[1, 2, 3, 4]]), params, E)
        assert np.all(H.data == 0.0)

    def test_single_step_matches_scalar_oracle(self, rng):
        ke, kh = 2, 2
        params = f64_gru(rng, ke, kh)
        E = Tensor(rng.uniform(-1, 1, (4, ke)), dtype=np.float64)
        ids = np.array([[3]])
        H = encoders.gru_encode(ids, params, E)

        e = E.data[3]
        x = np.concatenate([np.zeros(kh), e])       # [h0, e]
        z = sigmoid(x @ params.M_z.data)
        h_cand = np.tanh(x @ params.M_h.data)       # r*h0 = 0 regardless of r
        expected = z * h_cand
        assert np.allclose(H.data[0, 0], expected, atol=1e-6)

    def test_causality_of_recurrence(self, rng):
        params = f64_gru(rng, 3, 4)
        E = Tensor(rng.uniform(-1, 1, (6, 3)), dtype=np.float64)
        base = np.array([[1, 2, 3, 4, 5]])
        changed = base.copy()
        changed[0, 2] = 5
        H_a = encoders.gru_encode(base, params, E).data
        H_b = encoders.gru_encode(changed, params, E).data
        assert np.array_equal(H_a[0, :2], H_b[0, :2])
        assert not np.array_equal(H_a[0, 2:], H_b[0, 2:])

    def test_state_bounded_below_one(self, rng):
        params = f64_gru(rng, 3, 4)
        E = Tensor(rng.uniform(-5, 5, (6, 3)), dtype=np.float64)
        H = encoders.gru_encode(rng.integers(0, 6, (2, 12)), params, E)
        assert np.all(np.abs(H.data) < 1.0)

    def test_as_printed_variant_drops_reset_and_reuses_m_r(self, rng):
        ke, kh = 2, 3
        params = f64_gru(rng, ke, kh)
        E = Tensor(rng.uniform(-1, 1, (4, ke)), dtype=np.float64)
        ids = np.array([[1, 3, 0]])
        H = encoders.gru_encode(ids, params, E, variant="as_printed")
        h = np.zeros(kh)
        for i in ids[0]:
            x = np.concatenate([h, E.data[i]])
            z = sigmoid(x @ params.M_z.data)
            h = (1 - z) * h + z * np.tanh(x @ params.M_r.data)
        assert np.allclose(H.data[0, -1], h, atol=1e-10)

    def test_unknown_variant_rejected(self, rng):
        params = f64_gru(rng, 2, 2)
        E = Tensor(np.zeros((3, 2)))
        with pytest.raises(ConfigError, match="variant"):
            encoders.gru_encode(np.array([[0]]), params, E, variant="fancy")

    def test_gradients_match_finite_differences(self, rng):
        params = f64_gru(rng, 2, 3)
        E = Tensor(rng.uniform(-1, 1, (5, 2)), requires_grad=True,
                   dtype=np.float64)
        ids = rng.integers(0, 5, (2, 4))
        w = Tensor(rng.normal(size=(2, 4, 3)), dtype=np.float64)
        err = check_gradients(
            lambda: ad.tensor_sum(ad.mul(encoders.gru_encode(ids, params, E), w)),
            [E, params.M_z, params.M_r, params.M_h], rtol=1e-3)
        assert err < 1e-3


def region_oracle(ids, E, U, s):
    """Independent loop-by-loop region embedding computation."""
    n = len(ids)
    k = E.shape[1]
    H = np.zeros((n, k))
    for i in range(n):
        best = np.full(k, -np.inf)
        for t in range(-s, s + 1):
            j = i + t
            if not 0 <= j < n:
                continue
            p = U[ids[i], t + s] * E[ids[j]]
            best = np.maximum(best, p)
        H[i] = best
    return H


class TestRegion:
    def make_params(self, rng, v, k, s):
        return encoders.RegionParams.init(rng, v, k, s, dtype=np.float64)

    def test_radius_zero_is_self_weighting(self, rng):
        params = self.make_params(rng, 5, 3, 0)
        ids = np.array([[1, 4, 2]])
        H = encoders.region_encode(ids, params).data[0]
        expected = params.U.data[ids[0], 0] * params.E.data[ids[0]]
        assert np.allclose(H, expected, atol=1e-12)

    def test_all_ones_weights_reduce_to_window_max(self, rng):
        params = self.make_params(rng, 6, 4, 1)
        params.U.data[...] = 1.0
        ids = np.array([[2, 5, 1, 3]])
        H = encoders.region_encode(ids, params).data[0]
        E = params.E.data
        for i in range(4):
            window = [E[ids[0][j]] for j in range(max(0, i - 1), min(4, i + 2))]
            assert np.allclose(H[i], np.max(window, axis=0), atol=1e-12)

    def test_hand_sized_case_matches_oracle(self, rng):
        params = self.make_params(rng, 5, 2, 1)
        ids = np.array([3, 0, 2])
        H = encoders.region_encode(ids[None, :], params).data[0]
        expected = region_oracle(ids, params.E.data, params.U.data, 1)
        assert np.allclose(H, expected, atol=1e-6)

    def test_oracle_agreement_over_seeds(self):
        for seed in range(10):
            gen = np.random.default_rng(seed)
            s = int(gen.integers(0, 3))
            params = self.make_params(gen, 7, 3, s)
            ids = gen.integers(0, 7, 6)
            H = encoders.region_encode(ids[None, :], params).data[0]
            expected = region_oracle(ids, params.E.data, params.U.data, s)
            assert np.allclose(H, expected, atol=1e-6)

    def test_locality_of_perturbation(self, rng):
        s = 1
        params = self.make_params(rng, 8, 3, s)
        base = np.array([1, 2, 3, 4, 5, 6])
        changed = base.copy()
        j = 3
        changed[j] = 7
        H_a = encoders.region_encode(base[None, :], params).data[0]
        H_b = encoders.region_encode(changed[None, :], params).data[0]
        for i in range(len(base)):
            if abs(i - j) > s:
                assert np.array_equal(H_a[i], H_b[i]), i

    def test_deterministic(self, rng):
        params = self.make_params(rng, 6, 3, 2)
        ids = np.array([[0, 3, 5, 1]])
        a = encoders.region_encode(ids, params).data
        b = encoders.region_encode(ids, params).data
        assert np.array_equal(a, b)

    def test_gradients_match_finite_differences(self, rng):
        params = self.make_params(rng, 6, 3, 1)
        ids = rng.integers(0, 6, (2, 5))
        w = Tensor(rng.normal(size=(2, 5, 3)), dtype=np.float64)
        err = check_gradients(
            lambda: ad.tensor_sum(ad.mul(encoders.region_encode(ids, params), w)),
            [params.E, params.U], rtol=1e-3)
        assert err < 1e-3


class TestEmbedOnly:
    def test_rows_are_embedding_rows(self, rng):
        E = Tensor(rng.uniform(-1, 1, (5, 3)), dtype=np.float64)
        ids = np.array([[4, 0, 2]])
        H = encoders.embed_only(ids, E).data[0]
        assert np.array_equal(H, E.data[[4, 0, 2]])

    def test_padding_id_yields_row_zero(self, rng):
        E = Tensor(rng.uniform(-1, 1, (5, 3)), dtype=np.float64)
        H = encoders.embed_only(np.array([[0]]), E).data
        assert np.array_equal(H[0, 0], E.data[0])

    def test_gradient_flows_only_to_looked_up_rows(self, rng):
        E = Tensor(rng.uniform(-1, 1, (5, 3)), requires_grad=True,
                   dtype=np.float64)
        ad.tensor_sum(encoders.embed_only(np.array([[1, 3]]), E)).backward()
        assert np.all(E.grad[[0, 2, 4]] == 0)
        assert np.all(E.grad[[1, 3]] == 1)

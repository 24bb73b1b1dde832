"""Model layer: guarded exponential, P polynomial, fields, hypotheses, loader."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turnpike.errors import ModelError
from turnpike.model import (PolyP, SlowFastModel, StateXY, StateXZ,
                            check_hypotheses, ddr_model, eval_f_lambda,
                            exp_neg_inv, load_model, make_g, make_zeta,
                            vector_field_xy, vector_field_xz)

from conftest import DDR_KV, build_n2


class TestExpNegInv:
    def test_zero_and_negative_clamp(self):
        assert exp_neg_inv(0.0) == 0.0
        assert exp_neg_inv(-1.0) == 0.0
        assert exp_neg_inv(-1e-300) == 0.0

    def test_underflow_guard(self):
        # 1/z > 745 would underflow exp; the guard returns an exact zero
        assert exp_neg_inv(1e-3) == 0.0
        assert exp_neg_inv(1.0 / 746.0) == 0.0
        assert exp_neg_inv(1.0 / 744.0) == math.exp(-744.0)

    def test_reference_values(self):
        assert exp_neg_inv(1.0) == pytest.approx(math.exp(-1.0), rel=0, abs=0)
        assert exp_neg_inv(0.5) == math.exp(-2.0)

    @given(st.floats(min_value=1e-2, max_value=1e6))
    def test_monotone_and_bounded(self, z):
        v = exp_neg_inv(z)
        assert 0.0 <= v < 1.0
        assert exp_neg_inv(z * 2.0) >= v


class TestPolyP:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ModelError):
            PolyP(n=0, lam=())
        with pytest.raises(ModelError):
            PolyP(n=1, lam=(1.0,))
        with pytest.raises(ModelError):
            PolyP(n=2, lam=(1.0, 2.0))

    def test_matches_polyval(self):
        rng = np.random.default_rng(7)
        for n in (1, 2, 3):
            lam = tuple(rng.uniform(-2, 2, size=2 * n))
            p = PolyP(n=n, lam=lam)
            vs = rng.uniform(-3, 3, size=11)
            ref = np.polyval(list(reversed(p.coeffs())), vs)
            assert np.allclose(p(vs), ref, rtol=0, atol=1e-12)

    def test_tail_poly_identity(self):
        # Q(u) = u^(2n) P(1/u) wherever u != 0
        p = PolyP(n=2, lam=(-1.0, 0.5, 0.25, -0.75))
        for u in (0.3, -0.9, 1.0, -1e-3):
            assert p.tail_poly(u) == pytest.approx(u ** 4 * p(1.0 / u), rel=1e-12)
        assert p.tail_poly(0.0) == -1.0

    def test_negative_definite_quadratic_boundary(self):
        assert PolyP(n=1, lam=(-2.0, 1.0)).is_negative_definite()
        # 4 lam0 + lam1^2 = 0: the parabola touches zero
        assert not PolyP(n=1, lam=(-1.0, 2.0)).is_negative_definite()
        assert PolyP(n=1, lam=(-1.0000001, 2.0)).is_negative_definite()
        assert not PolyP(n=1, lam=(1.0, 0.0)).is_negative_definite()

    def test_negative_definite_quartic(self):
        assert PolyP(n=2, lam=(-1.0, 0.5, 0.0, 0.0)).is_negative_definite()
        assert not PolyP(n=2, lam=(1.0, 0.0, 0.0, 0.0)).is_negative_definite()
        # max of -1 - v^4 over the reals sits at v = 0
        assert PolyP(n=2, lam=(-1.0, 0.0, 0.0, 0.0)).max_over_reals() == \
            pytest.approx(-1.0, abs=1e-12)

    def test_max_over_reals_matches_grid(self):
        p = PolyP(n=2, lam=(-0.5, 1.0, 2.0, -0.3))
        vs = np.linspace(-5, 5, 200001)
        assert p.max_over_reals() == pytest.approx(float(p(vs).max()), abs=1e-6)


class TestSlowFastModel:
    def test_ddr_fields(self, ddr):
        assert ddr.n == 1
        assert ddr.z_delta == pytest.approx(1.0 / math.log(2.0), rel=1e-15)
        assert ddr.zeta(0.0, 0.0) == -1.0
        assert ddr.g(0.3, 0.1, 0.01) == -1.0

    def test_validation_errors(self):
        good = dict(p=PolyP(n=1, lam=(-2.0, 1.0)),
                    zeta=make_zeta("ddr-beta", (1.0,)),
                    g=make_g("constant", (-1.0,)), delta=0.5,
                    I=(-3.0, 0.9), I_in=(1.002, 1.016), I_out=(-2.8, -1.01))
        SlowFastModel(**good)
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "delta": 0.0})
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "delta": 1.5})
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "I": (0.1, 0.9)})
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "I_in": (-0.5, 1.0)})
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "I_out": (-1.0, 0.5)})
        with pytest.raises(ModelError):
            SlowFastModel(**{**good, "zeta": lambda x, e: -0.5})

    def test_states_are_frozen(self):
        s = StateXZ(x=1.0, z=0.5, eps=0.01)
        with pytest.raises(AttributeError):
            s.x = 2.0
        s2 = StateXY(x=1.0, y=0.5, eps=0.01)
        with pytest.raises(AttributeError):
            s2.y = 2.0


class TestVectorFields:
    def test_eval_f_lambda_hand_value(self, ddr):
        # f(0.1, 0.01) = -2 eps^2 + eps x + x^2 (-1 + x) = -0.0082
        assert eval_f_lambda(ddr, 0.1, 0.01) == pytest.approx(-0.0082, rel=1e-14)
        # eps = 0 keeps only the x^(2n) zeta(x, 0) term
        assert eval_f_lambda(ddr, 0.5, 0.0) == pytest.approx(-0.125, rel=1e-14)
        assert eval_f_lambda(ddr, 0.0, 0.02) == pytest.approx(-8e-4, rel=1e-14)

    def test_raw_field(self, ddr):
        dx, dy = vector_field_xy(ddr, StateXY(x=0.2, y=0.3, eps=0.01))
        f = eval_f_lambda(ddr, 0.2, 0.01)
        assert dx == pytest.approx(0.01 * f - 0.3, rel=1e-14)
        assert dy == pytest.approx(-0.06, rel=1e-14)

    @settings(max_examples=200)
    @given(x=st.floats(-2.0, 2.0), z=st.floats(0.02, 5.0),
           eps=st.floats(0.0, 0.1))
    def test_transform_consistency(self, x, z, eps):
        # under y = exp(-1/z): dy/dt = (y / z^2) dz/dt, dx/dt agrees
        m = ddr_model()
        y = exp_neg_inv(z)
        dxz, dz = vector_field_xz(m, StateXZ(x=x, z=z, eps=eps))
        dxy, dy = vector_field_xy(m, StateXY(x=x, y=y, eps=eps))
        assert dxz == pytest.approx(dxy, rel=1e-12, abs=1e-300)
        assert dy == pytest.approx(y / z ** 2 * dz, rel=1e-12, abs=1e-300)

    def test_z_field_ignores_y_when_underflowed(self, ddr):
        dx, dz = vector_field_xz(ddr, StateXZ(x=0.5, z=1e-4, eps=0.01))
        assert dx == pytest.approx(0.01 * eval_f_lambda(ddr, 0.5, 0.01), rel=1e-14)
        assert dz == pytest.approx(-0.5 * 1e-8, rel=1e-14)


class TestHypotheses:
    def test_ddr_passes(self, ddr):
        rep = check_hypotheses(ddr)
        assert rep.passed
        assert rep.c == pytest.approx(0.1, rel=1e-12)
        assert rep.f_margin > 0.0
        assert rep.witness is None

    def test_quartic_passes(self, quartic):
        assert check_hypotheses(quartic).passed

    def test_positive_zeta_fails(self):
        m = SlowFastModel(
            p=PolyP(n=1, lam=(-2.0, 1.0)),
            zeta=make_zeta("poly", (-1.0, 2.0)),
            g=make_g("constant", (-1.0,)), delta=0.5,
            I=(-1.0, 0.9), I_in=(1.002, 1.016), I_out=(-0.9, -0.5),
            zeta_kind="poly", zeta_params=(-1.0, 2.0),
            g_kind="constant", g_params=(-1.0,))
        rep = check_hypotheses(m)
        assert not rep.passed
        assert rep.witness is not None and rep.witness[0] == "zeta"

    def test_indefinite_p_fails(self):
        m = build_n2(lam=(-1.0, 3.0, 0.0, 0.0))  # P(1) = 1 > 0
        rep = check_hypotheses(m)
        assert not rep.passed
        assert rep.witness is not None


class TestLoader:
    def test_round_trip(self, write_model):
        m = load_model(write_model(DDR_KV))
        ref = ddr_model()
        assert m.p.lam == ref.p.lam
        assert m.delta == ref.delta
        assert m.I == ref.I and m.I_in == ref.I_in and m.I_out == ref.I_out
        assert m.zeta(0.25, 0.0) == ref.zeta(0.25, 0.0)
        assert m.g(0.1, 0.2, 0.3) == -1.0

    def test_comments_and_blank_lines(self, write_model, tmp_path):
        path = tmp_path / "c.model"
        body = "".join(f"{k} = {v}\n" for k, v in DDR_KV.items())
        path.write_text("# leading comment\n\n" + body + "\n# trailing\n")
        assert load_model(path).n == 1

    def test_missing_key(self, write_model):
        kv = dict(DDR_KV)
        del kv["delta"]
        with pytest.raises(ModelError, match="delta"):
            load_model(write_model(kv))

    def test_missing_beta(self, write_model):
        kv = dict(DDR_KV)
        del kv["beta"]
        with pytest.raises(ModelError, match="beta"):
            load_model(write_model(kv))

    def test_missing_g_value(self, write_model):
        kv = dict(DDR_KV)
        del kv["g_value"]
        with pytest.raises(ModelError, match="g_value"):
            load_model(write_model(kv))

    def test_unknown_zeta_kind(self, write_model):
        with pytest.raises(ModelError, match="zeta"):
            load_model(write_model({**DDR_KV, "zeta": "mystery"}))

    def test_poly_zeta_needs_coeffs(self, write_model):
        with pytest.raises(ModelError, match="zeta_coeffs"):
            load_model(write_model({**DDR_KV, "zeta": "poly"}))

    def test_poly_zeta_c0_check(self, write_model):
        kv = {**DDR_KV, "zeta": "poly", "zeta_coeffs": "-0.5, 1"}
        with pytest.raises(ModelError, match="c0"):
            load_model(write_model(kv))

    def test_bad_line(self, tmp_path):
        path = tmp_path / "bad.model"
        path.write_text("n = 1\njust some words\n")
        with pytest.raises(ModelError, match="key = value"):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelError, match="cannot read"):
            load_model(tmp_path / "nowhere.model")

    def test_bad_number(self, write_model):
        with pytest.raises(ModelError):
            load_model(write_model({**DDR_KV, "delta": "half"}))

    def test_lam_count_mismatch(self, write_model):
        with pytest.raises(ModelError, match="2n"):
            load_model(write_model({**DDR_KV, "lambda": "-2, 1, 3"}))

    def test_shipped_models_load(self, models_dir):
        assert load_model(models_dir / "ddr.model").n == 1
        assert load_model(models_dir / "quartic_n2.model").n == 2
        assert load_model(models_dir / "canard_n2.model").p.lam == \
            (-1.0, 0.0, 0.0, 0.0)

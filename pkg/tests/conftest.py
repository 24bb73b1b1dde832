"""Shared fixtures: reference models and a model-file writer."""
from __future__ import annotations

from pathlib import Path

import pytest

from turnpike.model import PolyP, SlowFastModel, ddr_model, make_g, make_zeta

REPO_ROOT = Path(__file__).resolve().parent.parent
MODELS_DIR = REPO_ROOT / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture()
def ddr() -> SlowFastModel:
    """The worked n = 1 model: f = -2 eps^2 + eps x - x^2 (1 - x), g = -1."""
    return ddr_model()


def build_n2(lam=(-1.0, 0.5, 0.0, 0.0)) -> SlowFastModel:
    """n = 2 model with zeta = -1 and g = -1, sections at delta = 0.5."""
    return SlowFastModel(
        p=PolyP(n=2, lam=lam),
        zeta=make_zeta("constant-minus-one"),
        g=make_g("constant", (-1.0,)),
        delta=0.5,
        I=(-3.0, 3.0),
        I_in=(1.1, 1.3),
        I_out=(-1.3, -1.1),
        zeta_kind="constant-minus-one",
        zeta_params=(),
        g_kind="constant",
        g_params=(-1.0,),
    )


def decay_model() -> SlowFastModel:
    """g = 0 and eps = 0 freeze x, leaving the pure decay z' = -x z^2."""
    return SlowFastModel(
        p=PolyP(n=1, lam=(-2.0, 1.0)),
        zeta=make_zeta("constant-minus-one"),
        g=make_g("constant", (0.0,)),
        delta=0.5,
        I=(-3.0, 3.0),
        I_in=(1.0, 1.5),
        I_out=(-1.5, -1.0),
        zeta_kind="constant-minus-one",
        zeta_params=(),
        g_kind="constant",
        g_params=(0.0,),
    )


@pytest.fixture()
def quartic() -> SlowFastModel:
    return build_n2()


@pytest.fixture()
def write_model(tmp_path):
    """Write a key-value model file from a dict and return its path."""

    def _write(kv: dict, name: str = "m.model") -> Path:
        path = tmp_path / name
        path.write_text("".join(f"{k} = {v}\n" for k, v in kv.items()))
        return path

    return _write


DDR_KV = {
    "n": 1,
    "lambda": "-2, 1",
    "zeta": "ddr-beta",
    "beta": 1,
    "g": "constant",
    "g_value": -1,
    "delta": 0.5,
    "I": "-3, 0.9",
    "I_in": "1.004, 1.016",
    "I_out": "-2.8, -1.01",
}

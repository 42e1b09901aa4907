import contextlib
from pathlib import Path

import h5py
import pytest

from turnpoint.model import EquationSpec, ScaleParams, load_config


@pytest.fixture
def h5_context(tmp_path):
    @contextlib.contextmanager
    def make_context():
        f = h5py.File(tmp_path / Path("test.h5"), "w")
        try:
            yield f
        finally:
            f.close()

    return make_context


@pytest.fixture
def example1_config():
    return load_config("example1.json")


@pytest.fixture
def example2_config():
    return load_config("example2.json")


@pytest.fixture
def example1(example1_config):
    spec = EquationSpec.from_json(example1_config)
    return spec, ScaleParams.from_mapping(example1_config["params"], spec)


@pytest.fixture
def example2(example2_config):
    spec = EquationSpec.from_json(example2_config)
    return spec, ScaleParams.from_mapping(example2_config["params"], spec)


@pytest.fixture
def small_solver():
    "Coarse grids for quick fixed-point runs."
    return {"n_r": 40, "n_m": 17, "m_max": 12.0, "quad_nodes": 12}

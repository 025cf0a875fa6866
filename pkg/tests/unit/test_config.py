import os
import tempfile
import textwrap

import numpy as np
import pytest

from supportlab.config import (BodySpec, ConfigError, Settings, Theorem1Config, load_body, load_lemma41_config,
                               load_theorem1_config, read_key_values)
from supportlab.models.body import BodyKind


def write(tmpdir, name, text):
    path = os.path.join(tmpdir, name)
    with open(path, "w") as f:
        f.write(textwrap.dedent(text))
    return path


@pytest.fixture
def tmpdir():
    with tempfile.TemporaryDirectory() as d:
        yield d


class TestSettings:
    def test_defaults(self):
        settings = Settings()
        assert settings.lp_backend == "network"
        assert settings.sampler == "box"
        assert settings.atom_cap == 4000
        assert settings.block_size == 65536

    def test_validation(self):
        with pytest.raises(ValueError):
            Settings(atom_cap=0)
        with pytest.raises(ValueError):
            Settings(lp_backend="glpk")


class TestBodyFiles:
    def test_square(self, tmpdir):
        path = write(tmpdir, "square.body", """\
            kind=vpolytope
            vertices=0 0; 1 0; 1 1; 0 1
            label=square
            """)
        body = load_body(path)
        assert body.kind is BodyKind.VPOLYTOPE
        assert body.label == "square"
        assert body.vertices.shape == (4, 2)

    def test_halfspaces_carry_offset_last(self, tmpdir):
        path = write(tmpdir, "box.body", """\
            kind=hpolytope
            halfspaces=1 0 1; -1 0 0; 0 1 1; 0 -1 0
            outer_radius=0.5
            """)
        body = load_body(path)
        np.testing.assert_allclose(body.offsets, [1.0, 0.0, 1.0, 0.0])
        assert body.outer_radius == 0.5

    def test_ballcut_with_normalisation(self, tmpdir):
        path = write(tmpdir, "cut.body", """\
            kind=ballcut
            center=0 0
            radius=1
            halfspaces=2 0 1
            normalize=true
            """)
        body = load_body(path)
        np.testing.assert_allclose(body.normals, [[1.0, 0.0]])
        np.testing.assert_allclose(body.offsets, [0.5])

    def test_missing_field(self, tmpdir):
        path = write(tmpdir, "ball.body", "kind=ball\ncenter=0 0\n")
        with pytest.raises(ConfigError, match="radius"):
            load_body(path)

    def test_ragged_rows(self):
        with pytest.raises(ValueError):
            BodySpec(kind="vpolytope", vertices="0 0; 1")

    def test_invalid_body_becomes_config_error(self, tmpdir):
        path = write(tmpdir, "bad.body", "kind=hpolytope\nhalfspaces=2 0 1\n")
        with pytest.raises(ConfigError):
            load_body(path)

    def test_missing_file(self, tmpdir):
        with pytest.raises(ConfigError, match="does not exist"):
            load_body(os.path.join(tmpdir, "nope.body"))


class TestKeyValues:
    def test_dotted_keys_nest(self, tmpdir):
        path = write(tmpdir, "exp.cfg", """\
            # ladder experiment
            body.kind=ball
            body.center=0 0
            family.kind=translate
            seed=3
            """)
        assert read_key_values(path) == {"body": {"kind": "ball", "center": "0 0"},
                                         "family": {"kind": "translate"}, "seed": "3"}

    def test_scalar_block_clash(self, tmpdir):
        path = write(tmpdir, "clash.cfg", "body=square\nbody.kind=ball\n")
        with pytest.raises(ConfigError, match="clashes"):
            read_key_values(path)


class TestExperimentConfigs:
    def test_theorem1(self, tmpdir):
        path = write(tmpdir, "t1.cfg", """\
            body.kind=vpolytope
            body.vertices=0 0; 1 0; 1 1; 0 1
            family.kind=translate
            family.direction=1 0
            ladder=0.2,0.1,0.05
            samples=5000
            indices=0 1
            """)
        config = load_theorem1_config(path)
        assert config.ladder == [0.2, 0.1, 0.05]
        assert config.indices == [0, 1]
        assert config.family.direction == [1.0, 0.0]
        assert config.grid == 0.1
        assert config.seed == 0

    def test_cap_cut_needs_dimension(self):
        with pytest.raises(ValueError, match="dimension"):
            Theorem1Config(family={"kind": "cap_cut", "index": 1}, ladder=[0.2, 0.1])

    def test_translate_needs_body(self):
        with pytest.raises(ValueError, match="body"):
            Theorem1Config(family={"kind": "translate", "direction": [1, 0]}, ladder=[0.2, 0.1])

    @pytest.mark.parametrize("ladder", ["0.1,0.2", "0.2,0.2", "0.2,-0.1", "0.2"])
    def test_bad_ladder(self, tmpdir, ladder):
        path = write(tmpdir, "t1.cfg", f"dimension=3\nfamily.kind=cap_cut\nladder={ladder}\n")
        with pytest.raises(ConfigError):
            load_theorem1_config(path)

    def test_lemma41(self, tmpdir):
        path = write(tmpdir, "l41.cfg", """\
            body_k.kind=ball
            body_k.center=0 0
            body_k.radius=1
            body_l.kind=vpolytope
            body_l.vertices=-1 -1; 1 -1; 1 1; -1 1
            rho=0.5
            """)
        config = load_lemma41_config(path)
        assert config.rho == 0.5
        assert config.grid == 0.05
        assert config.body_l.build().kind is BodyKind.VPOLYTOPE

import numpy as np
import pytest

from supportlab.config import Theorem1Config
from supportlab.experiments import run_theorem1, theorem1_csv, verify_lemma41
from supportlab.models.body import ConvexBody

pytestmark = pytest.mark.slow

SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


def random_polytope(rng, n):
    return ConvexBody.vpolytope(rng.uniform(-1.0, 1.0, size=(n + 5, n)))


def random_pair(rng, trial):
    n = 2 + trial % 2
    K = random_polytope(rng, n)
    kind = trial % 3
    if kind == 0:
        L = ConvexBody.ball(rng.uniform(-0.2, 0.2, n), rng.uniform(0.5, 1.0))
    elif kind == 1:
        L = K.translated(rng.normal(scale=0.1, size=n))
    else:
        L = ConvexBody.vpolytope(K.vertices + rng.normal(scale=0.1, size=K.vertices.shape))
    return K, L


class TestShellComparison:
    def test_inequality_holds_on_random_pairs(self):
        rng = np.random.default_rng(41)
        held = 0
        for trial in range(100):
            K, L = random_pair(rng, trial)
            rho = (0.5, 1.0)[(trial // 2) % 2]
            report = verify_lemma41(K, L, rho, count=800, seed=trial, grid=0.25)
            held += report.holds
        assert held >= 95


class TestLadders:
    def test_translation_ladder(self):
        config = Theorem1Config(body={"kind": "vpolytope", "vertices": SQUARE, "label": "square"},
                                family={"kind": "translate", "direction": [1.0, 0.0]},
                                ladder=[0.2, 0.1, 0.05, 0.025, 0.0125], samples=2000, seed=3, indices=[1],
                                grid=0.01)
        result = run_theorem1(config)
        assert not any(r.failed for r in result.records)
        assert [r.delta for r in result.records] == pytest.approx([0.2, 0.1, 0.05, 0.025, 0.0125])
        assert result.violations == []
        assert result.fits[1].slope >= 0.9

    def test_cap_cut_ladder(self):
        ladder = [0.4 * 2.0 ** (-k / 2.0) for k in range(5)]
        config = Theorem1Config(dimension=2, family={"kind": "cap_cut", "index": 1}, ladder=ladder, samples=4000,
                                seed=5, indices=[1], grid=0.05)
        result = run_theorem1(config)
        assert not any(r.failed for r in result.records)
        deltas = [r.delta for r in result.records]
        for coarse, fine in zip(deltas, deltas[1:]):
            assert 0.4 <= fine / coarse <= 0.6
        assert result.violations == []


class TestDeterminism:
    CONFIG = Theorem1Config(body={"kind": "vpolytope", "vertices": SQUARE, "label": "square"},
                            family={"kind": "translate", "direction": [1.0, 1.0]},
                            ladder=[0.2, 0.1, 0.05], samples=1500, seed=9, grid=0.2)

    def test_repeated_runs_give_identical_csv(self):
        assert theorem1_csv(run_theorem1(self.CONFIG)) == theorem1_csv(run_theorem1(self.CONFIG))

    def test_worker_count_does_not_change_csv(self):
        assert theorem1_csv(run_theorem1(self.CONFIG, workers=1)) == theorem1_csv(run_theorem1(self.CONFIG, workers=8))

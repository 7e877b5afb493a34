import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbnple.core import ParameterError, wavelength_to_energy
from hbnple.correlation import spacing_density
from hbnple.fitting import TransitionSet
from hbnple.simulate import (DEFAULT_MODES, SimConfig, ZPL_WINDOW, generate_dataset,
                             generate_emitter, placement_probability, synthetic_zpls)


def test_placement_examples():
    assert placement_probability(1, 0) == 1.0
    assert placement_probability(1, 2) == 0.75
    assert placement_probability(3, 4) == 0.375
    with pytest.raises(ParameterError):
        placement_probability(0, 0)


@given(st.integers(1, 50), st.integers(0, 50))
def test_placement_formula(m, k):
    n = 2 * k
    assert placement_probability(m, n) == min(1.0, 3.0 / (m + n + 1))


def test_deterministic_ladder():
    cfg = SimConfig(modes=((0.165, 1.0),), jitter_sigma=0.0, skip=False)
    em = generate_emitter(2.16, cfg, np.random.default_rng(0))
    np.testing.assert_allclose(em.transitions, [2.490, 2.655, 2.820], atol=1e-12)
    # 2.325, 2.490, 2.655, 2.820 and the terminating 2.985 were all generated
    assert em.generated_count == 5


def test_forced_placement_matches_skip_disabled():
    cfg = SimConfig(modes=((0.165, 1.0),), jitter_sigma=0.0)
    em = generate_emitter(2.16, cfg, np.random.default_rng(0), placement=lambda m, n: 1.0)
    np.testing.assert_allclose(em.transitions, [2.490, 2.655, 2.820], atol=1e-12)


def test_zpl_near_top_gives_empty():
    cfg = SimConfig()
    em = generate_emitter(2.88 - 0.09, cfg, np.random.default_rng(0))
    # one step of the smallest mode already leaves the range unless jitter pulls it back
    nojit = SimConfig(jitter_sigma=0.0)
    assert generate_emitter(2.80, nojit, np.random.default_rng(0)).transitions == ()
    assert generate_emitter(2.95, cfg, np.random.default_rng(0)).transitions == ()
    assert em.generated_count >= len(em.transitions)


def test_skip_forced_after_first_draw():
    cfg = SimConfig(modes=((0.165, 1.0),), jitter_sigma=0.0)
    em = generate_emitter(2.2, cfg, np.random.default_rng(0),
                          placement=lambda m, n: 1.0 if n == 0 else 0.0)
    # only the first line (2.365) can be placed
    np.testing.assert_allclose(em.transitions, [2.365])


def test_m_counts_consecutive_skips():
    seen = []

    def probe(m, n):
        seen.append((m, n))
        return 0.0 if len(seen) in (2, 3) else 1.0

    cfg = SimConfig(modes=((0.1, 1.0),), jitter_sigma=0.0, range=(2.0, 2.75))
    generate_emitter(2.2, cfg, np.random.default_rng(0), placement=probe)
    assert seen[:5] == [(1, 0), (1, 2), (2, 4), (3, 6), (1, 8)]


def test_dataset_sizes_and_determinism():
    zpls = synthetic_zpls(152, seed=3)
    cfg = SimConfig(seed=42)
    a = generate_dataset(zpls, cfg)
    assert len(a) == 1064
    assert a == generate_dataset(zpls, cfg)
    assert len(generate_dataset(zpls[:10], SimConfig(duplication=1))) == 10
    with pytest.raises(ValueError):
        generate_dataset([], cfg)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_emitter_invariants(seed):
    cfg = SimConfig(seed=seed)
    for em in generate_dataset(synthetic_zpls(20, seed), cfg):
        t = np.array(em.transitions)
        assert np.all(np.diff(t) > 0)
        assert np.all((t >= 2.34) & (t <= 2.88))
        assert em.generated_count >= len(t)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0.1, 0.165, 0.19]))
def test_single_mode_diffs_are_multiples(seed, d):
    cfg = SimConfig(modes=((d, 1.0),), jitter_sigma=0.0, seed=seed, duplication=1)
    for em in generate_dataset(synthetic_zpls(30, seed), cfg):
        for v in TransitionSet(0, em.zpl, em.transitions).pairwise_diffs:
            assert v / d == pytest.approx(round(v / d), abs=1e-9)


def test_default_density_structure():
    sim = generate_dataset(synthetic_zpls(152, seed=42), SimConfig(seed=42))
    sets = [TransitionSet(i, e.zpl, e.transitions) for i, e in enumerate(sim)]
    dm = spacing_density(sets)
    top = dm.centers[np.argmax(dm.values)]
    assert 0.155 <= top <= 0.175
    band = (dm.centers >= 0.315) & (dm.centers <= 0.345)
    assert dm.values[band].max() > dm.values[(dm.centers > 0.22) & (dm.centers < 0.28)].max()
    mean_n = np.mean([len(e.transitions) for e in sim])
    assert 0 < mean_n < 8


def test_synthetic_zpl_window():
    z = synthetic_zpls(500, seed=1)
    assert ZPL_WINDOW[0] == pytest.approx(wavelength_to_energy(585.0))
    assert np.all((z >= ZPL_WINDOW[0]) & (z <= ZPL_WINDOW[1]))
    assert ZPL_WINDOW[0] == pytest.approx(2.119, abs=1e-3)
    assert ZPL_WINDOW[1] == pytest.approx(2.234, abs=1e-3)


@pytest.mark.parametrize("kwargs", [dict(modes=((0.1, 0.0),)), dict(modes=((-0.1, 1.0),)),
                                    dict(jitter_sigma=-1.0), dict(range=(2.9, 2.3)),
                                    dict(duplication=0)])
def test_config_validation(kwargs):
    with pytest.raises(ParameterError):
        SimConfig(**kwargs)


def test_default_config_values():
    cfg = SimConfig()
    assert cfg.modes == DEFAULT_MODES
    assert cfg.jitter_sigma == 0.017 and cfg.range == (2.34, 2.88) and cfg.duplication == 7
    np.testing.assert_allclose(cfg.mode_probabilities, np.array([25, 2, 2]) / 29)

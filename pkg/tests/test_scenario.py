import numpy as np
import pytest

from risregion.errors import ConfigurationError, ValidationError
from risregion.scenario import (
    DEFAULT_IQI,
    FadingConfig,
    GeometryConfig,
    IqiConfig,
    ScenarioConfig,
    available_realizations,
    db_to_linear,
    fixture_config,
    generate_scene,
    load_fixed_realization,
    path_gain,
    rayleigh,
    rician,
    ula_response,
)

# printed benchmark values, transcribed independently of the data file
PRINTED = {
    "C1": [[[-1.3992 + 0.0292j]], [[0.2353 - 0.1238j]]],
    "C2": [[[0.3672 + 0.8681j]], [[0.2798 + 0.9214j]]],
    "C3": [[[0.5909 - 1.0615j]], [[0.2540 - 0.0052j]]],
    "C4": [
        [[-1.6952 + 1.7244j, -0.5196 - 0.1194j], [0.0665 + 0.3475j, 0.1105 + 0.3237j]],
        [[-0.0233 + 0.6539j, 0.2841 + 0.8593j], [-0.2500 - 1.2059j, 0.8494 + 0.5047j]],
    ],
    "C5": [
        [[0.2949 - 0.7399j, -2.1314 + 0.5059j], [-1.5491 + 0.3702j, -0.1943 + 0.9528j]],
        [[-0.7849 + 2.4803j, 0.0522 - 0.0681j], [-1.5022 + 0.1034j, 0.4433 - 1.0066j]],
    ],
}


@pytest.mark.parametrize("name", sorted(PRINTED))
def test_fixed_realizations_match_printed_values(name):
    scene = load_fixed_realization(name)
    np.testing.assert_array_equal(scene.F, np.array(PRINTED[name]))
    assert scene.n_ris == 0


def test_fixture_shapes():
    assert available_realizations() == ["C1", "C2", "C3", "C4", "C5"]
    assert load_fixed_realization("C1").F.shape == (2, 1, 1)
    assert load_fixed_realization("c4").F.shape == (2, 2, 2)


def test_unknown_realization_lists_available():
    with pytest.raises(ConfigurationError, match="C1, C2, C3, C4, C5"):
        load_fixed_realization("C9")


def test_db_conversion():
    assert db_to_linear(10.0) == 10.0
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(-3.0) == pytest.approx(0.501187, rel=1e-5)
    assert fixture_config("C1", power_db=20.0).power_linear == pytest.approx(100.0)


@pytest.mark.parametrize("cfg", [
    ScenarioConfig(),
    fixture_config("C3", n_ris=16, iqi=IqiConfig(**vars(DEFAULT_IQI))),
    ScenarioConfig(mode="generative", realization=None, n_bs=2, n_u=2, n_ris=4, seed=9, power_db=7.5),
])
def test_config_round_trip_is_byte_identical(cfg):
    text = cfg.dumps()
    again = ScenarioConfig.loads(text)
    assert again == cfg
    assert again.dumps() == text


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ScenarioConfig(mode="generative", realization=None, seed=None).validate()
    with pytest.raises(ConfigurationError):
        ScenarioConfig(mode="generative", realization="C1").validate()
    with pytest.raises(ConfigurationError):
        ScenarioConfig(mode="other").validate()
    with pytest.raises(ConfigurationError):
        ScenarioConfig(realization="C4").validate()  # dims mismatch
    with pytest.raises(ConfigurationError):
        ScenarioConfig.from_dict({"bogus": 1})
    with pytest.raises(ValidationError):
        ScenarioConfig(sigma2=0.0).validate()


def test_same_seed_same_scene():
    cfg = ScenarioConfig(mode="generative", realization=None, n_bs=2, n_u=2, n_ris=8, seed=42)
    a, b = generate_scene(cfg), generate_scene(cfg)
    for x, y in [(a.F, b.F), (a.G, b.G), (a.G0, b.G0)]:
        np.testing.assert_array_equal(x, y)
    cfg.seed = 43
    assert not np.array_equal(generate_scene(cfg).F, a.F)


def test_fixed_mode_ris_links_from_geometry():
    scene = generate_scene(fixture_config("C3", n_ris=16))
    assert scene.G.shape == (2, 1, 16) and scene.G0.shape == (16, 1)
    np.testing.assert_array_equal(scene.F, np.array(PRINTED["C3"]))


def test_rician_infinite_k_is_line_of_sight():
    rng = np.random.default_rng(0)
    H = rician(rng, 4, 3, 0.25, np.inf, 0.3, -0.7)
    los = 0.5 * np.outer(ula_response(4, 0.3), ula_response(3, -0.7).conj())
    np.testing.assert_allclose(H, los, atol=1e-15)
    cfg = fixture_config("C3", n_ris=4, fading=FadingConfig(rician_k=np.inf))
    s1 = generate_scene(cfg)
    cfg.seed = 99
    s2 = generate_scene(cfg)
    np.testing.assert_allclose(s1.G0, s2.G0, atol=1e-15)


def test_rayleigh_second_moment():
    rng = np.random.default_rng(1)
    gain = path_gain(3.0, 3.0)
    draws = np.array([rayleigh(rng, 1, 1, gain)[0, 0] for _ in range(10_000)])
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(gain, rel=0.03)


def test_rician_second_moment():
    rng = np.random.default_rng(2)
    draws = np.array([rician(rng, 1, 1, 0.1, 3.0, 0.2, 0.4)[0, 0] for _ in range(10_000)])
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(0.1, rel=0.03)


def test_generated_direct_links_follow_path_loss():
    cfg = ScenarioConfig(mode="generative", realization=None, seed=0)
    powers = []
    for s in range(2000):
        cfg.seed = s
        powers.append(np.abs(generate_scene(cfg).F[:, 0, 0]) ** 2)
    expect = [path_gain(np.linalg.norm(u), cfg.fading.alpha_direct) for u in cfg.geometry.users]
    np.testing.assert_allclose(np.mean(powers, axis=0), expect, rtol=0.08)


def test_zero_distance_raises():
    with pytest.raises(ValidationError):
        path_gain(0.0, 3.0)
    cfg = fixture_config("C1", n_ris=2, geometry=GeometryConfig(ris=[0.0, 0.0]))
    with pytest.raises(ValidationError):
        generate_scene(cfg)


def test_exponent_notation_in_yaml_is_a_float():
    cfg = ScenarioConfig.loads("rel_tol: 1e-5\nepsilon: 2e-2\n")
    assert cfg.rel_tol == 1e-5 and cfg.epsilon == 0.02
    with pytest.raises(ConfigurationError):
        ScenarioConfig.loads("rel_tol: fast\n")

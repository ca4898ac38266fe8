import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalfs.citest import ci_test
from causalfs.discovery import (
    DiscoveryConfig,
    ParentSet,
    build_mci_samples,
    discover,
    mci_step,
    pc1_parents,
)
from causalfs.exceptions import ConfigError, DiscoveryError
from causalfs.series import EnsembleTimeSeries, LaggedFeature, build_lagged_samples
from causalfs.synth import Edge, SyntheticSpec, generate, random_lagged_dag

from .conftest import make_ensemble


def _chain(seed, n_members=50, length=100):
    # w_{t-16} -> x_{t-8} -> y_t, no direct w -> y edge
    spec = SyntheticSpec(
        n_vars=3,
        edges=(Edge(0, 1, 8, 0.8), Edge(1, 2, 8, 0.8)),
        names=("w", "x", "y"),
        n_members=n_members,
        length=length,
        seed=seed,
    )
    return generate(spec)


W16, X8 = LaggedFeature(0, 16), LaggedFeature(1, 8)


@pytest.mark.parametrize("kwargs", [
    {"tau_min": 0}, {"tau_min": 5, "tau_max": 4}, {"pc_alpha": 0.0}, {"pc_alpha": 1.0},
    {"alpha_level": 1.5}, {"method": "PC"}, {"max_cond_dim": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        DiscoveryConfig(**kwargs)


def test_defaults_roundtrip():
    cfg = DiscoveryConfig()
    assert (cfg.tau_min, cfg.tau_max, cfg.pc_alpha) == (8, 24, 0.02)
    assert DiscoveryConfig.from_dict(cfg.to_dict()) == cfg


def test_single_strong_parent():
    found = false_pos = nulls = 0
    for seed in range(10):
        spec = SyntheticSpec(
            n_vars=4, edges=(Edge(1, 0, 8, 0.8),), names=("y", "x1", "x2", "x3"),
            n_members=50, length=100, seed=seed,
        )
        ens, truth = generate(spec)
        data = build_lagged_samples(ens, "y", 8, 24)
        ps = pc1_parents(data, DiscoveryConfig())
        assert truth["y"] == {LaggedFeature(1, 8)}
        found += LaggedFeature(1, 8) in ps.features
        false_pos += len(set(ps.features) - truth["y"])
        nulls += data.n_features - 1
    # 67 null candidates per run, each kept with probability about pc_alpha
    assert found == 10
    assert false_pos / nulls <= 2 * 0.02


def test_chain_k0_keeps_then_removes_indirect():
    ens, _ = _chain(seed=0)
    data = build_lagged_samples(ens, "y", 8, 24)
    k0 = pc1_parents(data, DiscoveryConfig(max_cond_dim=0))
    assert W16 in k0.features and X8 in k0.features
    full = pc1_parents(data, DiscoveryConfig())
    assert full.features == [X8]
    # brute-force oracle: w16 is independent of y given x8
    cols = data.column_index()
    assert ci_test(data.X[:, cols[W16]], data.y, data.X[:, [cols[X8]]]).p_value > 0.02


def test_chain_mci():
    ens, _ = _chain(seed=1)
    res = discover(ens, ["y"], DiscoveryConfig(method="PCMCI"))["y"]
    assert X8 in res.features
    assert W16 not in res.features


def test_links_respect_contract():
    ens, _ = _chain(seed=2)
    data = build_lagged_samples(ens, "y", 8, 24)
    ps = pc1_parents(data, DiscoveryConfig())
    cands = set(data.columns)
    for link in ps.links:
        assert link.feature in cands
        assert 8 <= link.feature.lag <= 24
        assert link.p_value <= 0.02
    assert len(set(ps.features)) == len(ps)
    # most significant first
    ps_p = [l.p_value for l in ps.links]
    assert ps_p == sorted(ps_p)


def test_null_k0_expectation_3978():
    rng = np.random.default_rng(0)
    names = [f"v{i}" for i in range(234)] + ["y"]
    ens = EnsembleTimeSeries([rng.standard_normal((30, 235)) for _ in range(50)], names)
    data = build_lagged_samples(ens, "y", 8, 24, [LaggedFeature(i, l) for i in range(234) for l in range(8, 25)])
    assert data.X.shape == (300, 3978)
    k0 = pc1_parents(data, DiscoveryConfig(max_cond_dim=0))
    # 0.02 * 3978 = 79.6 expected, binomial sd about 8.8
    assert 50 <= len(k0) <= 110
    full = pc1_parents(data, DiscoveryConfig(max_cond_dim=3))
    assert len(full) <= len(k0)


def test_null_control_rate():
    survivors = total = 0
    for seed in range(50):
        ens = make_ensemble([100] * 10, n_vars=6, seed=seed)
        data = build_lagged_samples(ens, "y", 1, 5)
        survivors += len(pc1_parents(data, DiscoveryConfig(1, 5, 0.02, max_cond_dim=0)))
        total += data.n_features
    assert 0.01 <= survivors / total <= 0.03


@given(st.integers(0, 10**6), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_k0_monotone_in_pc_alpha(seed, a, b):
    a, b = sorted((a, b))
    ens = make_ensemble([40] * 5, n_vars=4, seed=seed)
    data = build_lagged_samples(ens, "y", 1, 4)
    sa = set(pc1_parents(data, DiscoveryConfig(1, 4, a, max_cond_dim=0)).features)
    sb = set(pc1_parents(data, DiscoveryConfig(1, 4, b, max_cond_dim=0)).features)
    assert sa <= sb


def test_insufficient_samples_names_k_and_n():
    # one short member: n = 8 rows, 30 noise candidates, a permissive threshold
    ens = make_ensemble([8 + 10], n_vars=4, seed=3)
    data = build_lagged_samples(ens, "y", 1, 10)
    with pytest.raises(DiscoveryError, match=r"k=\d+.*n=8"):
        pc1_parents(data, DiscoveryConfig(1, 10, 0.95))


def test_mci_empty_parents_is_unconditional():
    ens = make_ensemble([80] * 6, n_vars=3, seed=5)
    cfg = DiscoveryConfig(1, 2, 0.5, alpha_level=0.3)
    samples = build_mci_samples(ens, "y", cfg)
    empty = {n: ParentSet(n, (), cfg, 0) for n in ens.names}
    res = mci_step({"y": samples}, empty, cfg)["y"]
    cols = samples.column_index()
    expect = set()
    for f in samples.columns:
        if 1 <= f.lag <= 2 and ci_test(samples.X[:, cols[f]], samples.y).p_value <= 0.3:
            expect.add(f)
    assert set(res.features) == expect
    assert res.test_count == 4


def test_mci_samples_reach_twice_tau_max():
    ens = make_ensemble([60] * 2, n_vars=3)
    s = build_mci_samples(ens, "y", DiscoveryConfig(2, 5))
    assert max(f.lag for f in s.columns) == 10
    assert s.n_samples == 2 * (60 - 10)


def test_mci_missing_parent_set():
    ens = make_ensemble([60] * 2, n_vars=3)
    cfg = DiscoveryConfig(1, 2)
    with pytest.raises(ConfigError):
        mci_step({"y": build_mci_samples(ens, "y", cfg)}, {}, cfg)


def test_pcmci_agrees_with_pc1_without_autocorrelation():
    agree = total = 0
    for seed in range(20):
        spec, targets = random_lagged_dag(
            n_vars=5, n_parents=2, coef_range=(0.5, 0.7), seed=seed, n_members=20, length=100
        )
        ens, _ = generate(spec)
        a = discover(ens, targets, DiscoveryConfig(1, 3, 0.005, 0.005, method="PC1"))
        b = discover(ens, targets, DiscoveryConfig(1, 3, 0.005, 0.005, method="PCMCI"))
        for t in targets:
            total += 1
            agree += set(a[t].features) == set(b[t].features)
    assert agree >= 0.9 * total


def test_mci_fewer_false_positives_under_autocorrelation():
    fp_k0 = fp_mci = 0
    for seed in range(20):
        spec = SyntheticSpec(
            n_vars=2, edges=(Edge(0, 1, 2, 0.5),), autocorr=(0.9, 0.0), names=("x", "y"),
            n_members=20, length=100, seed=seed,
        )
        ens, truth = generate(spec)
        k0 = pc1_parents(build_lagged_samples(ens, "y", 1, 5), DiscoveryConfig(1, 5, max_cond_dim=0))
        mci = discover(ens, ["y"], DiscoveryConfig(1, 5, method="PCMCI"))["y"]
        fp_k0 += len(set(k0.features) - truth["y"])
        fp_mci += len(set(mci.features) - truth["y"])
    assert fp_mci < fp_k0


def test_pc1_method_equals_direct_call():
    ens, _ = _chain(seed=4, n_members=20)
    cfg = DiscoveryConfig()
    via = discover(ens, ["y", "x"], cfg)
    for t in ("y", "x"):
        direct = pc1_parents(build_lagged_samples(ens, t, 8, 24), cfg)
        assert via[t].to_dict() == direct.to_dict()


@pytest.mark.parametrize("method", ["PC1", "PCMCI"])
def test_thread_count_independent(method):
    spec, targets = random_lagged_dag(n_vars=6, n_parents=2, seed=7, n_members=10, length=60)
    ens, _ = generate(spec)
    cfg = DiscoveryConfig(1, 3, method=method)
    one = discover(ens, targets, cfg, n_jobs=1)
    many = discover(ens, targets, cfg, n_jobs=4)
    assert list(one) == list(many) == targets
    assert [one[t].to_dict() for t in targets] == [many[t].to_dict() for t in targets]


def test_parent_set_roundtrip():
    ens, _ = _chain(seed=5, n_members=20)
    ps = discover(ens, ["y"], DiscoveryConfig(method="PCMCI"))["y"]
    d = ps.to_dict()
    assert set(d) == {"target", "config", "links", "n", "test_count", "variables"}
    assert set(d["links"][0]) >= {"variable", "lag", "r", "p"}
    assert ParentSet.from_dict(d) == ps

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import counts, line_topology
from vnfplace import netmodel
from vnfplace.netmodel import ConfigError, Dist, GenConfig, Tier, VnfType


def test_topology_shape_and_invariants():
    cfg = GenConfig(n_servers=15, base_seed=42)
    topo = netmodel.generate_topology(cfg, 0)
    assert topo.n_servers == 15
    assert topo.delay.shape == (15, 15)
    assert np.array_equal(topo.delay, topo.delay.T)
    assert np.all(np.diag(topo.delay) == 0)
    assert np.all(topo.delay >= 0)


def test_generation_is_deterministic():
    cfg = GenConfig(n_servers=15, base_seed=42)
    a = netmodel.generate_topology(cfg, 3)
    b = netmodel.generate_topology(cfg, 3)
    assert np.array_equal(a.delay, b.delay)
    assert a.servers == b.servers
    sa = netmodel.build_sfc(cfg, 3)
    sb = netmodel.build_sfc(cfg, 3)
    assert sa.instances == sb.instances and sa.tolerance == sb.tolerance


def test_batch_topologies_are_distinct():
    cfg = GenConfig(n_servers=30, base_seed=1)
    mats = [netmodel.generate_topology(cfg, i).delay.tobytes() for i in range(100)]
    assert len(set(mats)) == 100


def test_too_few_servers_rejected():
    with pytest.raises(ConfigError):
        GenConfig(n_servers=2, replica_counts=counts(1, 1, 1, 1))


def test_intra_tier_delays_statistically_smaller():
    cfg = GenConfig(n_servers=15, base_seed=5)
    tiers = netmodel.tier_assignment(15)
    intra, cross = [], []
    for k in range(50):
        topo = netmodel.generate_topology(cfg, k)
        for i in range(15):
            for j in range(i + 1, 15):
                (intra if tiers[i] == tiers[j] else cross).append(topo.delay[i, j])
    assert np.mean(intra) < np.mean(cross)
    assert np.percentile(intra, 90) < np.percentile(cross, 50)


def test_tier_split_ratio():
    tiers = netmodel.tier_assignment(15)
    assert tiers.count(Tier.CORE) == 3
    assert tiers.count(Tier.AGGREGATION) == 6
    assert tiers.count(Tier.ACCESS) == 6
    for n in (3, 7, 30):
        t = netmodel.tier_assignment(n)
        assert len(t) == n
        assert all(t.count(x) >= 1 for x in Tier)


@pytest.mark.parametrize(
    "replicas,n_inst,n_cps",
    [((1, 2, 2, 1), 6, 4), ((2, 3, 3, 2), 10, 36), ((1, 1, 1, 1), 4, 1)],
)
def test_sfc_instance_and_path_counts(replicas, n_inst, n_cps):
    cfg = GenConfig(n_servers=30, replica_counts=counts(*replicas))
    sfc = netmodel.build_sfc(cfg, 0)
    assert sfc.n_instances == n_inst
    assert sfc.n_paths == n_cps


def test_server_delay_reads_matrix():
    topo = line_topology([100.0, 250.0, 50.0])
    assert netmodel.server_delay(topo, 3, 3) == 0
    assert netmodel.server_delay(topo, 1, 2) == netmodel.server_delay(topo, 2, 1)
    assert netmodel.server_delay(topo, 0, 2) == 350.0
    with pytest.raises(IndexError):
        netmodel.server_delay(topo, 0, 9)


@settings(max_examples=25, deadline=None)
@given(
    n_servers=st.integers(min_value=6, max_value=20),
    base_seed=st.integers(min_value=0, max_value=2**31),
    index=st.integers(min_value=0, max_value=1000),
)
def test_generated_topology_invariants_property(n_servers, base_seed, index):
    cfg = GenConfig(n_servers=n_servers, base_seed=base_seed)
    topo = netmodel.generate_topology(cfg, index)
    assert np.array_equal(topo.delay, topo.delay.T)
    assert np.all(np.diag(topo.delay) == 0)
    assert np.all(topo.delay >= 0)
    sfc = netmodel.build_sfc(cfg, index)
    assert sum(sfc.replica_counts.values()) == sfc.n_instances


def test_normal_dist_clipped_at_zero():
    d = Dist("normal", 0.0, 5.0)
    rng = np.random.default_rng(0)
    assert np.all(d.sample(rng, 1000) >= 0)


def test_invalid_dist_rejected():
    with pytest.raises(ConfigError):
        Dist("uniform", 5.0, 1.0)
    with pytest.raises(ConfigError):
        Dist("pareto", 1.0, 2.0)


def test_bad_config_rejected():
    with pytest.raises(ConfigError):
        GenConfig(n_servers=4, replica_counts=counts(2, 3, 3, 2))
    with pytest.raises(ConfigError):
        GenConfig(replica_counts=counts(0, 1, 1, 1))


def test_batch_round_trip(tmp_path):
    cfg = GenConfig(n_servers=8, n_topologies=3, base_seed=9)
    topos = [netmodel.generate_topology(cfg, i) for i in range(3)]
    sfcs = [netmodel.build_sfc(cfg, i) for i in range(3)]
    path = tmp_path / "batch.json"
    netmodel.save_batch(path, topos, sfcs, cfg)
    t2, s2, cfg2 = netmodel.load_batch(path)
    assert cfg2 == cfg
    for a, b in zip(topos, t2):
        assert np.array_equal(a.delay, b.delay)
        assert a.servers == b.servers
    for a, b in zip(sfcs, s2):
        assert a.instances == b.instances
        assert a.tolerance == b.tolerance

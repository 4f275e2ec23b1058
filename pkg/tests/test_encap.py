import pytest
from hypothesis import given, strategies as st

from wabsim.encap import (
    EncapConfig,
    Fragmentation,
    LayerKind,
    MtuPolicy,
    Packet,
    decap,
    effective_mtu,
    encap,
    fragment_count,
    gtpu,
    inner_gtpu,
    overhead,
    payload_efficiency,
    vpn,
    wab_stack,
)
from wabsim.errors import EmptyStack, OverheadExceedsMtu, StackOverflow


def test_vpn_reduces_1420_to_1384():
    assert effective_mtu(MtuPolicy(1420), [vpn()]) == 1384


def test_full_stack_mtu():
    assert effective_mtu(MtuPolicy(1500), wab_stack()) == 1500 - 108


def test_overhead_at_mtu_raises():
    with pytest.raises(OverheadExceedsMtu):
        effective_mtu(MtuPolicy(108), wab_stack())


def test_stack_order_innermost_first():
    kinds = [layer.kind for layer in wab_stack(7, 9)]
    assert kinds == [LayerKind.INNER_GTPU, LayerKind.VPN, LayerKind.GTPU]
    assert wab_stack(7, 9)[0].tunnel_id == 7 and wab_stack(7, 9)[2].tunnel_id == 9


def test_default_efficiency():
    # 1384 B of user payload inside 108 B of headers
    assert EncapConfig().efficiency() == pytest.approx(1384 / 1492)


def test_decap_empty():
    with pytest.raises(EmptyStack):
        decap(Packet(100))


def test_depth_limit():
    p = Packet(100)
    for _ in range(4):
        p = encap(p, gtpu())
    with pytest.raises(StackOverflow):
        encap(p, gtpu())


def test_fragmentation_policy():
    p = Packet(1400, wab_stack())
    assert fragment_count(MtuPolicy(1500), p) == 0
    assert fragment_count(MtuPolicy(1500, Fragmentation.ALLOWED), p) == 2
    assert fragment_count(MtuPolicy(1500), Packet(1392, wab_stack())) == 1


def test_config_round_trip():
    cfg = EncapConfig()
    assert EncapConfig.from_dict(cfg.to_dict()) == cfg


layers = st.one_of(
    st.builds(gtpu, st.integers(0, 2**32 - 1), st.integers(8, 64)),
    st.builds(inner_gtpu, st.integers(0, 2**32 - 1), st.integers(8, 64)),
    st.builds(vpn, st.integers(8, 64)),
)


@given(st.integers(1, 9000), st.lists(layers, max_size=4))
def test_round_trip_and_sizes(payload, stack):
    p = Packet(payload)
    for layer in stack:
        p = encap(p, layer)
    assert p.total_bytes == payload + overhead(stack)
    popped = []
    while p.layers:
        layer, p = decap(p)
        popped.append(layer)
    assert popped[::-1] == stack
    assert p == Packet(payload)


@given(st.integers(1, 1500), st.lists(layers, max_size=4))
def test_efficiency_bounds(payload, stack):
    e = payload_efficiency(stack, payload)
    assert 0 < e <= 1
    assert (e == 1) == (overhead(stack) == 0)

from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from conftest import star
from wabsim.errors import IllegalTransition, NodeNotOperational, NoN3Session, NotRegistered, WrongRole
from wabsim.topology import (
    CarriedInterface,
    NodeRole,
    RejectReason,
    SessionState,
    ViolationKind,
    WabNodeState,
    attach_ue,
    e2e_path,
    establish_bh_pdu_session,
    handover_wab_mt,
    integrate_wab_node,
    mark_backhaul_loss,
    release_bh_session,
    restore_backhaul,
    setup_xn,
    validate_topology,
)


def test_integration_phases_in_order():
    net = star()
    assert integrate_wab_node(net, "w0", "bh0") is WabNodeState.OPERATIONAL
    phases = [e["phase"] for e in net.events if e["kind"] == "SessionSignal"]
    assert phases == ["MtRegistration", "BhSessionEstablishment", "BhSessionEstablishment", "GnbRegistration"]
    carried = [s.carried for s in net.bh_sessions.values()]
    assert carried == [CarriedInterface.N2, CarriedInterface.N3]


def test_integration_is_idempotent():
    net = star()
    integrate_wab_node(net, "w0", "bh0")
    before = net.to_json()
    integrate_wab_node(net, "w0", "bh0")
    assert net.to_json() == before


def test_integrate_through_wab_gnb_rejected_without_mutation():
    net = star(n_wab=2)
    integrate_wab_node(net, "w0", "bh0")
    before = net.to_json()
    with pytest.raises(WrongRole):
        integrate_wab_node(net, "w1", "w0-gnb")
    assert net.to_json() == before


def test_attach_ue_and_path():
    net = star(with_ue=True)
    integrate_wab_node(net, "w0", "bh0")
    s = attach_ue(net, "ue", "w0-gnb")
    assert (s.drb_id, s.n3_tunnel_id) == (1, 1)
    assert e2e_path(net, s.session_id) == ["ue", "w0-gnb", "w0-mt", "bh0", "bh5gc", "core"]


def test_attach_needs_operational_node():
    net = star(with_ue=True)
    with pytest.raises(NodeNotOperational):
        attach_ue(net, "ue", "w0-gnb")


def test_release_n3_cascades():
    net = star(with_ue=True)
    integrate_wab_node(net, "w0", "bh0")
    s = attach_ue(net, "ue", "w0-gnb")
    release_bh_session(net, s.carried_by)
    assert net.ue_sessions[s.session_id].state is SessionState.RELEASED
    with pytest.raises(NoN3Session):
        attach_ue(net, "ue", "w0-gnb")


def test_session_needs_registration():
    net = star()
    with pytest.raises(NotRegistered):
        establish_bh_pdu_session(net, "w0-mt", CarriedInterface.XN)


def test_degraded_and_restore():
    net = star()
    integrate_wab_node(net, "w0", "bh0")
    mark_backhaul_loss(net, "w0")
    assert net.states["w0"] is WabNodeState.DEGRADED
    restore_backhaul(net, "w0")
    assert net.states["w0"] is WabNodeState.OPERATIONAL
    mark_backhaul_loss(net, "w0")
    with pytest.raises(IllegalTransition):
        integrate_wab_node(net, "w0", "bh0")


def test_handover_between_donors_keeps_sessions():
    net = star(n_donors=2)
    integrate_wab_node(net, "w0", "bh0")
    ids = sorted(net.bh_sessions)
    out = handover_wab_mt(net, "w0-mt", "bh1")
    assert out.completed
    assert net.donor_of("w0-mt") == "bh1"
    assert sorted(s.session_id for s in net.active_bh_sessions("w0-mt")) == ids


def test_handover_reasons():
    net = star(n_wab=2)
    integrate_wab_node(net, "w0", "bh0")
    assert handover_wab_mt(net, "w0-mt", "nowhere").reason is RejectReason.UNKNOWN_TARGET
    assert handover_wab_mt(net, "w0-mt", "bh5gc").reason is RejectReason.WRONG_TARGET_ROLE
    assert handover_wab_mt(net, "w0-mt", "w1-gnb").reason is RejectReason.FORBIDDEN_TARGET_KIND
    assert handover_wab_mt(net, "w1-mt", "bh0").reason is RejectReason.NOT_REGISTERED
    assert handover_wab_mt(net, "w0-mt", "bh0").completed


def test_xn_tunnelled_over_backhaul():
    net = star(n_wab=2)
    integrate_wab_node(net, "w0", "bh0")
    integrate_wab_node(net, "w1", "bh0")
    link = setup_xn(net, "w0-gnb", "bh0")
    assert net.bh_sessions[link.tunneled_via].owner_mt == "w0-mt"
    assert setup_xn(net, "w1-gnb", "w0-gnb").tunneled_via != 0
    assert validate_topology(net).ok


def test_corrupted_parent_reports_depth():
    net = star(n_wab=2)
    integrate_wab_node(net, "w0", "bh0")
    net.donors["w1-mt"] = ["w0-gnb"]
    assert ViolationKind.DEPTH_EXCEEDED in validate_topology(net).kinds()


def test_serialisation_is_stable():
    a, b = star(n_wab=2), star(n_wab=2)
    for net in (a, b):
        integrate_wab_node(net, "w1", "bh0")
        integrate_wab_node(net, "w0", "bh0")
    assert a.to_json() == b.to_json()


# property tests -------------------------------------------------------------------


def bfs_depths(net):
    """Hop count of each WAB-MT from the nearest BH-gNB, following donor edges."""
    children = {}
    for mt, donors in net.donors.items():
        for d in donors:
            parent = d
            if d in net.nodes and net.nodes[d].role is NodeRole.WAB_GNB:
                parent = net.chassis_pair(net.nodes[d].chassis)[0].id  # the WAB node's own MT
            children.setdefault(parent, []).append(mt)
    depth = {}
    q = deque((n, 0) for n, node in net.nodes.items() if node.role is NodeRole.BH_GNB)
    while q:
        n, k = q.popleft()
        for c in children.get(n, []):
            if c not in depth:
                depth[c] = k + 1
                q.append((c, k + 1))
    return depth


def star_oracle_ok(net):
    depth = bfs_depths(net)
    for mt, donors in net.donors.items():
        if len(donors) != 1 or depth.get(mt) != 1:
            return False
    return True


@st.composite
def operations(draw):
    n_donors = draw(st.integers(1, 3))
    n_wab = draw(st.integers(1, 3))
    ops = draw(st.lists(
        st.tuples(st.sampled_from(["integrate", "handover"]), st.integers(0, n_wab - 1),
                  st.integers(0, n_donors + n_wab - 1)),
        max_size=50,
    ))
    return n_donors, n_wab, ops


def target_name(i, n_donors):
    return f"bh{i}" if i < n_donors else f"w{i - n_donors}-gnb"


@settings(max_examples=300, deadline=None)
@given(operations())
def test_star_preserved_by_completed_operations(case):
    n_donors, n_wab, ops = case
    net = star(n_donors, n_wab)
    for op, w, t in ops:
        target = target_name(t, n_donors)
        if op == "integrate":
            if net.states[f"w{w}"] is WabNodeState.OFF and target.startswith("bh"):
                integrate_wab_node(net, f"w{w}", target)
        else:
            before = net.to_json()
            out = handover_wab_mt(net, f"w{w}-mt", target)
            if not out.completed:
                assert net.to_json() == before
        assert validate_topology(net).ok
        assert star_oracle_ok(net)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 2), st.integers(1, 2), st.data())
def test_validator_agrees_with_bfs_oracle(n_donors, n_wab, data):
    # at most 2 + 2 + 2*2 = 8 nodes; graphs with <= 6 radio nodes
    net = star(n_donors, n_wab)
    gnbs = [f"bh{i}" for i in range(n_donors)] + [f"w{i}-gnb" for i in range(n_wab)]
    for i in range(n_wab):
        if data.draw(st.booleans()):
            choices = [g for g in gnbs if g != f"w{i}-gnb"]
            net.donors[f"w{i}-mt"] = [data.draw(st.sampled_from(choices))]
    report = validate_topology(net)
    assert report.ok == star_oracle_ok(net)
    assert (ViolationKind.DEPTH_EXCEEDED in report.kinds()) == any(
        net.nodes[d[0]].role is NodeRole.WAB_GNB for d in net.donors.values()
    )

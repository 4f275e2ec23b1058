import json

import pytest

from wabsim import scenario_path
from wabsim.engine import load_scenario
from wabsim.topology import NetworkState, Node, NodeRole


def star(n_donors=1, n_wab=1, with_ue=False):
    """Cores, ``n_donors`` BH-gNBs and ``n_wab`` WAB chassis, nothing integrated."""
    net = NetworkState()
    net.add_node(Node("core", NodeRole.SERVING_CORE))
    net.add_node(Node("bh5gc", NodeRole.BH_5GC))
    net.link("bh5gc", "core")
    for i in range(n_donors):
        net.add_node(Node(f"bh{i}", NodeRole.BH_GNB, radio="fr2"))
        net.link(f"bh{i}", "bh5gc")
    for i in range(n_wab):
        net.add_node(Node(f"w{i}-mt", NodeRole.WAB_MT, chassis=f"w{i}", radio="fr2"))
        net.add_node(Node(f"w{i}-gnb", NodeRole.WAB_GNB, chassis=f"w{i}", radio="fr1"))
    if with_ue:
        net.add_node(Node("ue", NodeRole.END_UE, radio="fr1"))
    return net


@pytest.fixture
def vehicular():
    return load_scenario(scenario_path("vehicular"))


@pytest.fixture
def o2i():
    return load_scenario(scenario_path("o2i"))


@pytest.fixture
def vehicular_dict():
    return json.loads(scenario_path("vehicular").read_text())


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])

import numpy as np
import pytest

from emdim.cases import tc1_case, tc2_case, tc3_case, verify_manufactured
from emdim.errors import InvalidGeometryError
from emdim.graph import CLASS_DIRICHLET, CLASS_NEUMANN_TIP


def test_tc1_derived_data_values():
    R = 1e-2
    case = tc1_case(R)
    center = np.array([[1.0, 1.0, 0.5]])
    assert np.allclose(case.q_over_eps0(center), -2.0 / R)
    assert np.allclose(case.g(center), -2.0)
    assert np.allclose(case.phi_axis(0.3), R / 2.0)
    assert np.allclose(case.phi_radial_amp(0.3), 1.0 / (2.0 * R))
    # interface continuity of the exact splitting
    wall = case.phi_axis(0.5) + case.phi_radial_amp(0.5) * R * R
    probe = np.array([[1.0 + R, 1.0, 0.5]])
    assert np.allclose(wall, case.phi_s(probe))
    assert len(case.notes) == 4


def test_tc1_strong_equation_plugin():
    # Interior balance of the 1D strong equation with the derived data:
    # 0 + 4*pi*(R/2 - R) - pi*R^2*(-2/R) = 0.
    R = 1e-2
    case = tc1_case(R)
    phi_hat = R  # exact circle average at the tube wall
    resid = (4.0 * np.pi * (case.phi_axis(0.5)[0] - phi_hat)
             - np.pi * R * R * case.q_over_eps0(np.zeros((1, 3)))[0])
    assert abs(resid) <= 1e-18


def test_tc1_line_strength_balance():
    # Flux of the exact field through the tube wall per unit length (2*pi*R)
    # equals the exchange minus wall-charge contribution.
    R = 1e-2
    case = tc1_case(R)
    flux = 2.0 * np.pi * R
    expect = (4.0 * np.pi * (R / 2.0 - R)
              - 2.0 * np.pi * R * case.g(np.zeros((1, 3)))[0])
    assert abs(flux - expect) <= 1e-18


def test_tc1_radius_guard():
    with pytest.raises(InvalidGeometryError):
        tc1_case(0.5)
    with pytest.raises(InvalidGeometryError):
        tc1_case(0.0)


def test_verify_manufactured_tc1_residuals():
    report = verify_manufactured(tc1_case(1e-2))
    assert report.max_residual <= 1e-8
    assert report.residuals["graph_equation"] <= 1e-10
    assert report.residuals["line_strength"] <= 1e-12
    assert report.residuals["interface_continuity"] <= 1e-15


def test_verify_manufactured_flags_perturbed_wall_charge():
    R = 1e-2
    case = tc1_case(R)
    base = case.g
    case.g = lambda pts: base(pts) + 1.0
    report = verify_manufactured(case)
    assert abs(report.residuals["line_strength"] - 2.0 * np.pi * R) <= 1e-12


def test_verify_manufactured_flags_published_data():
    # The published listing (wall charge 0) breaks the line balance by
    # exactly 2*pi*R*2.
    R = 1e-2
    case = tc1_case(R)
    case.g = lambda pts: np.zeros(len(np.atleast_2d(pts)))
    report = verify_manufactured(case)
    assert abs(report.residuals["line_strength"] - 4.0 * np.pi * R) <= 1e-12


def test_verify_manufactured_zero_case():
    case = tc1_case(1e-2)
    zero = lambda pts: np.zeros(len(np.atleast_2d(pts)))
    case.phi_s = zero
    case.d_s = lambda pts: np.zeros_like(np.atleast_2d(pts))
    case.phi_axis = lambda s: np.zeros_like(np.atleast_1d(np.asarray(s, float)))
    case.phi_radial_amp = case.phi_axis
    case.q_over_eps0 = zero
    case.g = zero
    case.nu = lambda pts, normals: np.zeros(len(np.atleast_2d(pts)))
    case.phi_bar = zero
    case.dirichlet_value = 0.0

    def network_factory(n_e):
        from emdim.graph import Network1D
        nodes = np.vstack(case.line)
        return Network1D(nodes, [(0, 1, case.radius, n_e)],
                         dirichlet_values={0: 0.0, 1: 0.0})

    case.network_factory = network_factory
    report = verify_manufactured(case)
    assert report.max_residual == 0.0


def test_tc2_geometry_and_classes():
    case = tc2_case(1e-2)
    assert case.has_tip
    net = case.network(10)
    assert net.node_class[0] == CLASS_DIRICHLET
    assert net.node_class[1] == CLASS_NEUMANN_TIP
    assert abs(net.nodes[1][2] - 0.6) <= 1e-15
    assert case.phi_s is None
    with pytest.raises(InvalidGeometryError):
        tc2_case(1e-2, tip_height=1.5)


def test_tc3_small_scale_instance():
    prob = tc3_case(seed=3, scale=0.3)
    assert prob.network.node_class[0] == CLASS_DIRICHLET
    assert prob.network.dirichlet_values[0] == 1.0
    leaves = [n for n in range(len(prob.network.nodes))
              if prob.network.degree[n] == 1 and n != 0]
    assert all(prob.network.node_class[n] == CLASS_NEUMANN_TIP for n in leaves)

    again = tc3_case(seed=3, scale=0.3)
    assert np.array_equal(prob.network.nodes, again.network.nodes)

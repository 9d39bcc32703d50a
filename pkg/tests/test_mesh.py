import math

import numpy as np
import pytest

from cornerlayer.mesh import (
    InvalidM,
    InvalidN,
    Mesh1D,
    mesh_csv,
    space_mesh,
    tensor,
    time_mesh,
)


def test_space_transition_formula():
    m = space_mesh(64, 2.0 ** -12, 1.0)
    sigma = 2.0 * math.sqrt(2.0 ** -12) * math.log(64)
    assert m.transitions[0] == sigma  # formula evaluated once, inserted exactly
    assert sigma == pytest.approx(0.1299650963, abs=1e-9)
    assert m.nodes[16] == sigma  # N/4-th node is the transition, bit-exactly
    assert m.nodes[48] == 1.0 - sigma


def test_space_clamped_is_uniform():
    m = space_mesh(64, 1.0, 1.0)
    assert m.transitions[0] == 0.25
    h = np.diff(m.nodes)
    assert np.all(np.abs(h - 1.0 / 64) < 1e-16)


def test_space_mesh_cell_counts_and_endpoints():
    m = space_mesh(128, 1e-6, 2.0)
    assert m.nodes.size == 129
    assert m.nodes[0] == 0.0 and m.nodes[-1] == 1.0
    sigma = m.transitions[0]
    assert np.sum(m.nodes <= sigma + 1e-15) == 33  # N/4 cells in [0, sigma]


def test_space_mesh_invalid_N():
    with pytest.raises(InvalidN):
        space_mesh(6, 0.1, 1.0)
    with pytest.raises(InvalidN):
        space_mesh(66, 0.1, 1.0)
    with pytest.raises(InvalidN):
        space_mesh(4, 0.1, 1.0)


def test_time_transition_formula():
    m = time_mesh(16, 2.0 ** -12, 1.0)
    tau = 2.0 ** -12 * math.log(16)
    assert m.transitions[0] == tau
    assert tau == pytest.approx(6.769e-4, abs=1e-6)
    assert m.nodes[8] == tau


def test_time_clamped_uniform():
    m = time_mesh(16, 1.0, 1.0)
    assert m.transitions[0] == 0.5
    assert np.all(np.abs(np.diff(m.nodes) - 1.0 / 16) < 1e-16)


def test_time_mesh_invalid_M():
    with pytest.raises(InvalidM):
        time_mesh(7, 0.1, 1.0)
    with pytest.raises(InvalidM):
        time_mesh(2, 0.1, 1.0)


def test_time_general_horizon_scaling():
    m = time_mesh(16, 1.0, 1.0, T=4.0)
    assert m.transitions[0] == 2.0  # clamp at T/2
    assert m.nodes[-1] == 4.0
    m2 = time_mesh(16, 1e-4, 1.0, T=4.0)
    assert m2.transitions[0] == 1e-4 * math.log(16)


def test_time_tau_override():
    m = time_mesh(32, 0.5, 1.0, tau=0.125)
    assert m.transitions[0] == 0.125
    assert m.nodes[16] == 0.125
    with pytest.raises(ValueError):
        time_mesh(32, 0.5, 1.0, tau=1.5)


def test_within_piece_spacing_uniform_to_ulp():
    # Spacing jitter within a piece stays at the rounding level of the
    # piece's coordinates.
    m = space_mesh(256, 1e-8, 1.0)
    h = np.diff(m.nodes)
    sigma = m.transitions[0]
    for piece, scale in ((h[:64], sigma), (h[64:192], 1.0 - sigma), (h[192:], 1.0)):
        assert np.max(piece) - np.min(piece) <= 8 * np.spacing(scale)


def test_spacing_sums_to_domain_length():
    for eps in (1.0, 1e-4, 2.0 ** -30):
        m = space_mesh(128, eps, 1.0)
        assert abs(np.sum(np.diff(m.nodes)) - 1.0) <= 1e-14
        mt = time_mesh(64, eps, 1.0)
        assert abs(np.sum(np.diff(mt.nodes)) - 1.0) <= 1e-14


def test_refinement_not_nested():
    # sigma depends on ln N, so doubled meshes do not share layer nodes.
    s64 = space_mesh(64, 2.0 ** -12, 1.0)
    s128 = space_mesh(128, 2.0 ** -12, 1.0)
    assert s64.transitions[0] != s128.transitions[0]
    shared = np.intersect1d(s64.nodes, s128.nodes)
    assert shared.size < s64.nodes.size


def test_fine_and_coarse_spacings():
    N, eps = 64, 2.0 ** -20
    m = space_mesh(N, eps, 1.0)
    sigma = m.transitions[0]
    h = np.diff(m.nodes)
    assert h[0] == pytest.approx(4.0 * sigma / N, rel=1e-14)
    assert h[N // 2] == pytest.approx(2.0 * (1.0 - 2.0 * sigma) / N, rel=1e-14)


def test_tensor_uniform_counts():
    tm = tensor(Mesh1D.uniform(0, 1, 4, "space"), Mesh1D.uniform(0, 1, 2, "time"))
    assert (tm.N + 1) * (tm.M + 1) == 15
    assert np.all(tm.hbar == 0.25)
    assert tm.h.size == 4 and tm.k.size == 2


def test_tensor_hbar_at_transition():
    eps = 1e-4
    tm = tensor(space_mesh(8, eps, 1.0), time_mesh(4, eps, 1.0))
    h = tm.h
    i = 8 // 4  # transition node index
    assert tm.hbar[i - 1] == (h[i - 1] + h[i]) / 2.0


def test_table_pairing_accepted():
    tm = tensor(space_mesh(64, 1e-3, 1.0), time_mesh(16, 1e-3, 1.0))
    assert tm.N == 64 and tm.M == 16


def test_mesh_immutable():
    m = space_mesh(8, 0.1, 1.0)
    with pytest.raises(ValueError):
        m.nodes[0] = 5.0


def test_mesh1d_validates_ordering():
    with pytest.raises(ValueError):
        Mesh1D(np.array([0.0, 0.5, 0.5, 1.0]), (), "space")


def test_mesh_csv_one_coordinate_per_line():
    m = Mesh1D.uniform(0, 1, 4, "space")
    lines = mesh_csv(m).strip().split("\n")
    assert lines == ["0.0", "0.25", "0.5", "0.75", "1.0"]

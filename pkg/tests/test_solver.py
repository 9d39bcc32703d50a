import numpy as np
import pytest

from cornerlayer.mesh import Mesh1D, space_mesh, tensor, time_mesh
from cornerlayer.problem import amplitude_A0, example23, from_dict
from cornerlayer.solver import (
    GridFunction,
    NumericalBreakdown,
    TridiagonalSystem,
    assemble_level,
    march_arrays,
    max_principle_probe,
    reconstruct_u,
    solve_y,
    thomas_solve,
)


def tiny_problem(b="1", f="0", gL="0", gR="0", phi="0", eps=1.0, beta=0.5):
    return from_dict({"eps": eps, "beta": beta, "T": 1.0,
                      "b": b, "f": f, "gL": gL, "gR": gR, "phi": phi})


def unit_mesh(N, M):
    return tensor(Mesh1D.uniform(0, 1, N, "space"), Mesh1D.uniform(0, 1, M, "time"))


def test_assemble_single_interior_node_by_hand():
    # h = 0.5, eps = 1, k = 1, b = 1, f = 0, zero boundary, prev = (0,1,0):
    # the one interior equation is 10*Y_1 = 1.
    p = tiny_problem()
    mesh = unit_mesh(2, 1)
    sys = assemble_level(p, mesh, A0=0.0, j=1, prev=np.array([0.0, 1.0, 0.0]))
    assert sys.sub[0] == -4.0
    assert sys.sup[0] == -4.0
    assert sys.diag[0] == 10.0
    assert sys.rhs[0] == 1.0
    assert thomas_solve(sys)[0] == pytest.approx(0.1, rel=1e-15)


def test_assemble_folds_boundary_values():
    p = tiny_problem(gL="1", gR="2", phi="0")
    mesh = unit_mesh(4, 2)
    sys = assemble_level(p, mesh, A0=0.0, j=2, prev=np.zeros(5))
    # sub_1*left and sup_{N-1}*right move to the rhs with opposite sign
    assert sys.rhs[0] == -sys.sub[0] * 1.0
    assert sys.rhs[-1] == -sys.sup[-1] * 2.0


def test_sign_pattern_on_layer_mesh_every_level():
    p = example23().with_eps(2.0 ** -12)
    mesh = tensor(space_mesh(64, p.eps, p.beta), time_mesh(16, p.eps, p.beta))
    prev = np.zeros(mesh.N + 1)
    for j in range(1, mesh.M + 1):
        sys = assemble_level(p, mesh, -1.0, j, prev)
        kj = mesh.k[j - 1]
        brow = p.b.eval_array(x=mesh.space.nodes[1:-1], t=float(mesh.time.nodes[j]))
        assert np.all(sys.sub <= 0.0)
        assert np.all(sys.sup <= 0.0)
        assert np.all(sys.diag > 0.0)
        # strict dominance: diag + sub + sup == eps/k_j + b
        assert np.allclose(sys.diag + sys.sub + sys.sup, p.eps / kj + brow, rtol=1e-12)


def test_thomas_identity():
    r = np.array([3.0, -1.0, 2.5])
    sys = TridiagonalSystem(np.zeros(3), np.ones(3), np.zeros(3), r)
    assert np.array_equal(thomas_solve(sys), r)


def test_thomas_against_dense_oracle():
    rng = np.random.default_rng(5)
    n = 50
    sub = -rng.random(n)
    sup = -rng.random(n)
    diag = np.abs(sub) + np.abs(sup) + rng.random(n) + 0.5
    rhs = rng.standard_normal(n)
    got = thomas_solve(TridiagonalSystem(sub, diag, sup, rhs))
    A = np.diag(diag) + np.diag(sub[1:], -1) + np.diag(sup[:-1], 1)
    want = np.linalg.solve(A, rhs)
    assert np.max(np.abs(got - want)) <= 1e-11
    # residual of the returned solution
    assert np.max(np.abs(A @ got - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_thomas_nonpositive_pivot_raises():
    # Elimination drives the second pivot negative: 1 - (-2)(-2)/1 = -3.
    sys = TridiagonalSystem(
        np.array([0.0, -2.0]), np.array([1.0, 1.0]), np.array([-2.0, 0.0]),
        np.array([1.0, 1.0]),
    )
    with pytest.raises(NumericalBreakdown):
        thomas_solve(sys)


def test_constant_solution_exact():
    # b*c = f with compatible data c: the scheme reproduces c to rounding.
    p = tiny_problem(b="1", f="1", gL="1", gR="1", phi="1", beta=0.9)
    mesh = unit_mesh(16, 8)
    Y = solve_y(p, mesh)
    assert np.max(np.abs(Y.values - 1.0)) <= 1e-12

    p2 = from_dict({"eps": 0.01, "beta": 1.0, "T": 1.0, "b": "1+x^2+t",
                    "f": "2*(1+x^2+t)", "gL": "2", "gR": "2", "phi": "2"})
    mesh2 = tensor(space_mesh(32, p2.eps, p2.beta), time_mesh(8, p2.eps, p2.beta))
    Y2 = solve_y(p2, mesh2)
    assert np.max(np.abs(Y2.values - 2.0)) <= 1e-12


def test_solve_deterministic_bit_identical():
    p = example23().with_eps(2.0 ** -6)
    mesh = tensor(space_mesh(32, p.eps, p.beta), time_mesh(8, p.eps, p.beta))
    a = solve_y(p, mesh).values
    b = solve_y(p, mesh).values
    assert np.array_equal(a, b)


def test_solve_sets_boundary_and_initial_rows():
    p = example23().with_eps(2.0 ** -10)
    mesh = tensor(space_mesh(16, p.eps, p.beta), time_mesh(8, p.eps, p.beta))
    from cornerlayer.problem import y_data

    data = y_data(p, amplitude_A0(p))
    Y = solve_y(p, mesh)
    assert np.array_equal(Y.values[:, 0], data.initial_values(mesh.space.nodes))
    for j in range(1, mesh.M + 1):
        t = float(mesh.time.nodes[j])
        assert Y.values[0, j] == data.left(t)
        assert Y.values[-1, j] == data.right(t)


def test_richardson_first_order_in_time():
    # Fixed space mesh, halving k: successive differences shrink ~2x.
    p = from_dict({"eps": 1.0, "beta": 0.9, "T": 1.0, "b": "1", "f": "x*(1-x)",
                   "gL": "0", "gR": "0", "phi": "sin(pi*x)"})
    sm = space_mesh(32, p.eps, p.beta)
    sol = {M: solve_y(p, tensor(sm, time_mesh(M, p.eps, p.beta))).values
           for M in (64, 128, 256)}
    d1 = np.max(np.abs(sol[64] - sol[128][:, ::2]))
    d2 = np.max(np.abs(sol[128] - sol[256][:, ::2]))
    assert 1.6 <= d1 / d2 <= 2.4


def test_discrete_comparison_principle():
    mesh = unit_mesh(12, 6)
    rng = np.random.default_rng(2)
    N, M = mesh.N, mesh.M
    b_rows = 1.0 + rng.random((N - 1, M))
    g1 = rng.random((N - 1, M))
    left1 = rng.random(M + 1)
    right1 = rng.random(M + 1)
    init1 = rng.random(N + 1)
    # data2 <= data1 componentwise
    g2 = g1 - rng.random((N - 1, M)) * 0.5
    left2 = left1 - 0.1
    right2 = right1 - 0.2
    init2 = init1 - 0.3
    Y1 = march_arrays(mesh, 0.5, b_rows, g1, left1, right1, init1).values
    Y2 = march_arrays(mesh, 0.5, b_rows, g2, left2, right2, init2).values
    assert np.all(Y1 >= Y2 - 1e-13)


def test_stability_bound():
    # |Y| <= max boundary/initial + max|rhs| / beta for random data.
    mesh = unit_mesh(10, 5)
    N, M = mesh.N, mesh.M
    rng = np.random.default_rng(9)
    for _ in range(10):
        b_rows = 0.5 + rng.random((N - 1, M))
        g = rng.standard_normal((N - 1, M))
        left = rng.standard_normal(M + 1)
        right = rng.standard_normal(M + 1)
        init = rng.standard_normal(N + 1)
        Y = march_arrays(mesh, 0.25, b_rows, g, left, right, init).values
        beta = b_rows.min()
        bound = max(np.abs(left).max(), np.abs(right).max(), np.abs(init).max())
        assert np.abs(Y).max() <= bound + np.abs(g).max() / beta + 1e-12


def test_max_principle_probe_zero_and_positive_data():
    p = tiny_problem(b="1", beta=0.9)
    mesh = unit_mesh(8, 4)
    # zero data -> zero solution
    Y = march_arrays(mesh, 1.0, np.ones((7, 4)), np.zeros((7, 4)),
                     np.zeros(5), np.zeros(5), np.zeros(9))
    assert np.all(Y.values == 0.0)
    # rhs = 1, zero boundary/initial -> strictly positive interior
    Y = march_arrays(mesh, 1.0, np.ones((7, 4)), np.ones((7, 4)),
                     np.zeros(5), np.zeros(5), np.zeros(9))
    assert np.all(Y.values[1:-1, 1:] > 0.0)


def test_max_principle_probe_on_layer_mesh():
    p = example23().with_eps(2.0 ** -20)
    mesh = tensor(space_mesh(128, p.eps, p.beta), time_mesh(32, p.eps, p.beta))
    assert max_principle_probe(p, mesh, ndata=20, seed=0) is True


def test_reconstruct_identity_when_A0_zero():
    p = tiny_problem(b="1", f="1", gL="1", gR="1", phi="1", beta=0.9)
    mesh = unit_mesh(8, 4)
    Y = solve_y(p, mesh)
    U = reconstruct_u(Y, 0.0, p)
    assert np.array_equal(U.values, Y.values)


def test_reconstruct_recovers_left_boundary_exactly():
    p = example23().with_eps(2.0 ** -8)
    mesh = tensor(space_mesh(32, p.eps, p.beta), time_mesh(8, p.eps, p.beta))
    A0 = amplitude_A0(p)
    U = reconstruct_u(solve_y(p, mesh), A0, p)
    for j in range(1, mesh.M + 1):
        t = float(mesh.time.nodes[j])
        assert U.values[0, j] == p.gL(t=t)
    # corner carries A0*1 + phi(0) = gL(0) = 0
    assert U.values[0, 0] == 0.0


def test_grid_function_shape_validated():
    mesh = unit_mesh(4, 2)
    with pytest.raises(ValueError):
        GridFunction(mesh, np.zeros((3, 3)))


def test_march_rejects_nonpositive_reaction():
    mesh = unit_mesh(6, 3)
    b_rows = np.full((5, 3), -10.0)  # destroys diagonal dominance
    with pytest.raises(NumericalBreakdown):
        march_arrays(mesh, 1e-6, b_rows, np.zeros((5, 3)),
                     np.zeros(4), np.zeros(4), np.zeros(7))

import json
import math

import numpy as np
import pytest

from cornerlayer.problem import (
    MissingDerivative,
    amplitude_A0,
    amplitude_A1,
    amplitude_A2,
    check_compatibility,
    default_beta,
    example23,
    from_dict,
    load_problem,
    y_data,
)
from cornerlayer.specfun import z0


def compatible_constant_problem(eps=1.0):
    # Steady solution u == 1: b*1 = f with matching boundary/initial data.
    return from_dict(
        {
            "eps": eps, "beta": 0.9, "T": 1.0,
            "b": "1", "f": "1", "gL": "1", "gR": "1", "phi": "1",
            "derivatives": {
                "gL_t": "0", "gL_tt": "0", "gR_t": "0", "gR_tt": "0",
                "phi_x": "0", "phi_xx": "0", "phi_xxxx": "0",
                "b_t": "0", "b_x": "0", "b_xx": "0", "f_t": "0", "f_xx": "0",
            },
        }
    )


def zero_problem(eps=0.5):
    return from_dict(
        {
            "eps": eps, "beta": 0.9, "T": 1.0,
            "b": "1", "f": "0", "gL": "0", "gR": "0", "phi": "0",
            "derivatives": {
                "gL_t": "0", "gL_tt": "0", "gR_t": "0", "gR_tt": "0",
                "phi_x": "0", "phi_xx": "0", "phi_xxxx": "0",
                "b_t": "0", "b_x": "0", "b_xx": "0", "f_t": "0", "f_xx": "0",
            },
        }
    )


def test_A0_example23():
    assert amplitude_A0(example23()) == -1.0


def test_A0_compatible_data_is_zero():
    assert amplitude_A0(compatible_constant_problem()) == 0.0


def test_A0_depends_only_on_corner_traces():
    p = from_dict({"eps": 1.0, "beta": 0.5, "b": "1", "f": "0",
                   "gL": "t^2", "gR": "0", "phi": "1-x"})
    assert amplitude_A0(p) == -1.0
    # changing f and b leaves A0 alone
    q = from_dict({"eps": 1.0, "beta": 0.5, "b": "2+x", "f": "exp(-x)*t",
                   "gL": "t^2", "gR": "0", "phi": "1-x"})
    assert amplitude_A0(q) == amplitude_A0(p)


@pytest.mark.parametrize("k", [8, 12, 20])
def test_A1_example23_is_minus_inverse_eps(k):
    p = example23().with_eps(2.0 ** -k)
    A0 = amplitude_A0(p)
    assert amplitude_A1(p, A0) == -(2.0 ** k)


def test_A1_zero_for_fully_compatible_problem():
    p = compatible_constant_problem()
    assert amplitude_A1(p, amplitude_A0(p)) == 0.0


def test_A1_arithmetic_case():
    # eps=1, gL'(0)=2, phi''(0)=1, b(0,0)=1, A0=0, phi(0)=1, f(0,0)=1 -> A1=1
    p = from_dict(
        {
            "eps": 1.0, "beta": 0.9, "b": "1", "f": "1",
            "gL": "1+2*t", "gR": "1-t", "phi": "1+x^2/2",
            "derivatives": {"gL_t": "2", "phi_xx": "1"},
        }
    )
    assert amplitude_A1(p, 0.0) == 1.0


def test_A1_missing_derivative():
    p = from_dict({"eps": 1.0, "beta": 0.5, "b": "1", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0"})
    with pytest.raises(MissingDerivative) as exc:
        amplitude_A1(p, 0.0)
    assert "gL_t" in exc.value.names and "phi_xx" in exc.value.names


def test_A2_zero_for_zero_data():
    p = zero_problem()
    A0 = amplitude_A0(p)
    A1 = amplitude_A1(p, A0)
    assert (A0, A1) == (0.0, 0.0)
    assert amplitude_A2(p, A0, A1) == 0.0


def test_A2_example23_eps1():
    # Value derived by independent symbolic substitution of the
    # second-order corner identity: A2 = 4 at eps = 1.
    p = example23().with_eps(1.0)
    A0 = amplitude_A0(p)
    A1 = amplitude_A1(p, A0)
    assert A1 == -1.0
    assert amplitude_A2(p, A0, A1) == pytest.approx(4.0, abs=1e-12)


def test_A2_linear_in_forcing_curvature():
    # Doubling (f_t + f_xx)(0,0) moves A2 by -increment/(2 eps).
    base = {
        "eps": 0.25, "beta": 0.9, "T": 1.0,
        "b": "1", "gL": "0", "gR": "0", "phi": "0",
        "derivatives": {
            "gL_t": "0", "gL_tt": "0", "phi_xx": "0", "phi_xxxx": "0",
            "b_t": "0", "b_x": "0", "b_xx": "0",
        },
    }
    p1 = from_dict({**base, "f": "t",
                    "derivatives": {**base["derivatives"], "f_t": "1", "f_xx": "0"}})
    p2 = from_dict({**base, "f": "2*t",
                    "derivatives": {**base["derivatives"], "f_t": "2", "f_xx": "0"}})
    a1 = amplitude_A2(p1, 0.0, amplitude_A1(p1, 0.0))
    a2 = amplitude_A2(p2, 0.0, amplitude_A1(p2, 0.0))
    assert a2 - a1 == pytest.approx(-1.0 / (2 * 0.25), rel=1e-12)


def test_compatibility_example23():
    rep = check_compatibility(example23())
    assert rep.level0_left == 1.0          # phi(0) - gL(0), violated
    assert rep.level0_right == 0.0         # satisfied at x = 1
    assert rep.flags["level0_left"] is False
    assert rep.flags["level0_right"] is True
    # first-order and second-order identities at x=1 both fail
    assert rep.flags["first_right"] is False
    assert rep.flags["second_right"] is False
    assert rep.first_right == pytest.approx(-math.exp(-1.0), rel=1e-12)


def test_compatibility_fully_compatible_toy():
    rep = check_compatibility(compatible_constant_problem())
    for name in rep.CONDITIONS:
        assert rep.residual(name) == 0.0
        assert rep.flags[name] is True


def test_compatibility_missing_derivatives_not_fatal():
    p = from_dict({"eps": 1.0, "beta": 0.5, "b": "1", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0"})
    rep = check_compatibility(p)
    assert rep.first_left is None
    assert rep.flags["first_left"] is None
    assert "gL_t" in rep.missing["first_left"]
    # level 0 never needs derivatives
    assert rep.level0_left == 0.0


def test_compatibility_second_right_needs_phi_x_only_with_bx():
    # b_x(1,0) = 0 here, so phi_x is not demanded.
    d = {
        "gL_t": "0", "gL_tt": "0", "gR_t": "0", "gR_tt": "0",
        "phi_xx": "0", "phi_xxxx": "0",
        "b_t": "0", "b_x": "0", "b_xx": "0", "f_t": "0", "f_xx": "0",
    }
    p = from_dict({"eps": 1.0, "beta": 0.9, "b": "1", "f": "1",
                   "gL": "1", "gR": "1", "phi": "1", "derivatives": d})
    rep = check_compatibility(p)
    assert rep.second_right == 0.0
    # with b_x(1,0) != 0 and no phi_x the condition is reported missing
    d2 = dict(d, b_x="2*x")
    p2 = from_dict({"eps": 1.0, "beta": 0.9, "b": "1+x^2", "f": "1",
                    "gL": "1", "gR": "1", "phi": "1", "derivatives": d2})
    rep2 = check_compatibility(p2)
    assert rep2.second_right is None
    assert rep2.missing["second_right"] == ("phi_x",)


def test_y_data_example23():
    p = example23().with_eps(2.0 ** -8)
    A0 = amplitude_A0(p)
    data = y_data(p, A0)
    sp = p.singular_params()
    # rhs = exp(-x) + (x^2 + t) z0;  left = z0(0, t);  right = -t^2 + z0(1, t)
    for x, t in ((0.3, 0.2), (0.7, 0.9), (0.05, 0.01)):
        want = math.exp(-x) + (x * x + t) * z0(x, t, sp)
        assert data.rhs(x, t) == pytest.approx(want, rel=1e-14)
    for t in (0.0, 0.1, 1.0):
        assert data.left(t) == z0(0.0, t, sp)
        assert data.right(t) == pytest.approx(-t * t + z0(1.0, t, sp), rel=1e-14, abs=1e-300)
    assert data.initial(0.25) == 0.75


def test_y_data_row_matches_pointwise():
    p = example23().with_eps(0.5)
    data = y_data(p, amplitude_A0(p))
    xs = np.linspace(0.0, 1.0, 9)
    row = data.rhs_row(xs, 0.3)
    for x, v in zip(xs, row):
        assert v == pytest.approx(data.rhs(float(x), 0.3), rel=1e-14)


def test_y_data_transformed_boundary_continuous():
    p = example23().with_eps(2.0 ** -12)
    data = y_data(p, amplitude_A0(p))
    assert abs(data.left(0.0) - data.initial(0.0)) <= 1e-12
    assert abs(data.right(0.0) - data.initial(1.0)) <= 1e-12


def test_y_data_identity_when_A0_zero():
    p = compatible_constant_problem()
    data = y_data(p, 0.0)
    for x, t in ((0.2, 0.4), (0.9, 0.1)):
        assert data.rhs(x, t) == p.f(x=x, t=t)
    assert data.left(0.5) == p.gL(t=0.5)
    assert data.right(0.5) == p.gR(t=0.5)


def test_builtin_example23_fields():
    p = example23()
    assert p.eps == 2.0 ** -12
    assert p.beta == 1.0
    assert p.T == 1.0
    assert p.b(x=0.0, t=0.0) == 1.0
    assert p.phi(x=0.0) == 1.0
    assert p.gL(t=0.0) == 0.0


def test_bx_corner_assumption_enforced():
    with pytest.raises(ValueError):
        from_dict({"eps": 1.0, "beta": 0.5, "b": "1+x", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0",
                   "derivatives": {"b_x": "1"}})


def test_b_must_dominate_beta():
    with pytest.raises(ValueError):
        from_dict({"eps": 1.0, "beta": 2.0, "b": "1", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0"})
    # equality up to rounding is fine (beta pinned to min b)
    from_dict({"eps": 1.0, "beta": 1.0, "b": "1+x^2+t", "f": "0",
               "gL": "0", "gR": "0", "phi": "0"})


def test_default_beta_rule():
    p = from_dict({"eps": 1.0, "b": "2+x", "f": "0", "gL": "0", "gR": "0", "phi": "0"})
    assert p.beta == pytest.approx(0.999 * 2.0, rel=1e-12)
    from cornerlayer.expr import parse
    assert default_beta(parse("1+x^2+t", {"x", "t"}), 1.0) == pytest.approx(0.999, rel=1e-12)


def test_eps_accepts_dyadic_literal():
    p = from_dict({"eps": "2^-12", "beta": 0.5, "b": "1", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0"})
    assert p.eps == 2.0 ** -12


def test_load_problem_json_roundtrip(tmp_path):
    path = tmp_path / "prob.json"
    payload = {
        "eps": 0.125, "beta": 0.9, "T": 2.0,
        "b": "1+t", "f": "x", "gL": "0", "gR": "t", "phi": "x^2",
        "derivatives": {"gL_t": "0", "phi_xx": "2"},
    }
    path.write_text(json.dumps(payload))
    p = load_problem(path)
    assert p.eps == 0.125
    assert p.T == 2.0
    assert p.b(x=0.0, t=1.0) == 2.0
    assert p.derivatives["phi_xx"](x=0.3) == 2.0
    assert p.name == "prob"


def test_load_problem_builtin_name():
    assert load_problem("example23").name == "example23"


def test_unknown_derivative_key_rejected():
    with pytest.raises(ValueError):
        from_dict({"eps": 1.0, "beta": 0.5, "b": "1", "f": "0",
                   "gL": "0", "gR": "0", "phi": "0",
                   "derivatives": {"phi_xxx": "0"}})


def test_amplitudes_scalings_recorded():
    from cornerlayer.problem import Amplitudes

    amp = Amplitudes(-1.0, -4096.0, 1.0e7)
    s = amp.scalings(2.0 ** -12)
    assert s["A0"] == -1.0
    assert s["eps_A1"] == -1.0
    assert "eps2_A2" in s

"""Smoke test for the holobound extension module."""

import json
import math

import holobound


def main():
    square = holobound.ConvexFunction({"rule": "power", "p": 2})
    assert square(3.0) == 9.0
    si = square.sup_inverse()
    assert si.kind == "root" and si.p == 2.0
    assert abs(si(4.0) - 2.0) < 1e-12
    print("classify(t^2):", square.classify())

    fock = {"type": "abs-sq"}
    plane = {"type": "full-space", "n": 1}
    assert abs(holobound.ball_mean(fock, [1.0, 0.0], 1.0) - 1.5) < 1e-12

    norm = holobound.weighted_norm({"type": "poly", "coeffs": [[1, 0]]}, 2.0, fock, plane)
    assert abs(norm - math.sqrt(math.pi)) < 1e-9

    b = holobound.bound_thm31(1.0, fock, 2.0, [0.0, 0.0], plane)
    assert abs(b["r_star"] - math.sqrt(2.0)) < 1e-8
    row = holobound.fock_row([0.5, -0.5])
    assert row["abs_error"] < 1e-6
    assert abs(row["gap_factor"] - math.sqrt(math.e / 2)) < 1e-6

    exp = holobound.ConvexFunction({"rule": "exponential", "p": 1})
    t41 = holobound.bound_thm41(1.0, exp, {"type": "im-part"}, [0.0, 3.0], {"type": "half-plane"})
    hp = holobound.halfplane_row(3.0)
    assert abs(t41["bound"] - hp["thm41"]) < 1e-12
    assert hp["difference"] < 0.0

    jensen = holobound.jensen_property_run(trials=500, seed=7)
    assert jensen["violations"] == 0

    summary, reports = holobound.dbar_check({"type": "bump-poly", "radius": 1.0, "terms": [{"coef": [1, 0], "z": 0, "zbar": 0}]}, [[0.0, 0.0, 0.5], [2.0, 1.0, 0.9]])
    assert len(reports) == 2 and summary["min_slack"] >= -1e-6

    code, out, err = holobound.run_cli(["halfplane-demo", "--format", "json", "--quiet"])
    assert code == 0, err
    assert len(json.loads(out)) == 4

    try:
        holobound.bound_thm31(-1.0, fock, 2.0, [0.0, 0.0], plane)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative norm accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()

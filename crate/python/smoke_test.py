"""Smoke test for the ufhom_py extension.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

from fractions import Fraction

import ufhom_py as uf


def main() -> None:
    z = uf.Presentation.lattice(1)
    assert z.distance([0], [5]) == 5
    w = z.window([0], 5, 1)
    assert len(w) == 11 and len(w.interior()) == 9

    c = w.chain("1 : (0)\n-1 : (3)")
    assert c.degree == 0 and c.sup_norm() == "1"
    e = uf.Chain.parse("1 : (0, 1)\n1 : (1, 2)")
    assert e.boundary() == uf.Chain.parse("-1 : (0)\n1 : (2)")
    assert e.boundary().boundary().is_zero()

    v = uf.class_verdict(z, [10, 20, 40])
    assert v["verdict"] == "nontrivial" and v["conclusive"], v
    assert [Fraction(x) for x in v["c_min"]] == [Fraction(19, 2), Fraction(39, 2), Fraction(79, 2)]

    tree = uf.class_verdict(uf.Presentation.regular_tree(3), [2, 3, 4])
    assert tree["verdict"] == "trivial" and tree["conclusive"], tree

    # 2 chi_2Z - 1 has mean zero and bounds over Q
    balanced = "periodic period=2 offset=0 coeff=2 shape=(0)\nconstant value=-1"
    assert uf.class_verdict(z, [10, 20, 40], cycle=balanced, ring="Q")["verdict"] == "trivial"
    sn = uf.seminorm(z, [8, 16], cycle="periodic period=2 offset=0 coeff=2 shape=(0)")
    assert sn["certified"] and Fraction(sn["t"]) == 1, sn

    p = uf.prism(3, radius=20)
    assert p["verified"] and p["chain"].degree == 2
    rw = uf.rewrite(4, radius=20)
    assert rw["disjoint"] and rw["homologous"] and rw["sup_norm"] == "1"

    rho = uf.rho_check(uf.Presentation.lattice(2), radius=6, samples=20)
    assert rho["holds"], rho

    code, files = uf.run_scenario(
        'name = "bilip"\noperation = "bilip"\n[map]\nkind = "identity"\n'
    )
    out = dict(files)
    assert code == 0 and "answer\tYES" in out["summary.tsv"], out["summary.tsv"]

    try:
        uf.run_scenario('name = "x"\noperation = "verdict"\n[space]\nkind = "nope"\n')
    except ValueError as exc:
        assert "line 4" in str(exc), exc
    else:
        raise AssertionError("unknown space kind accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()

"""Smoke test for the meridian_py extension.

Install first with `pip install --no-build-isolation -e crates/py`.
"""

import meridian_py as m

SAT3 = 'sat(braid 3 "s2 s1^-1 s2 s2", torus(3,2))'
TWO_TREFOILS = "sum(torus(3,2), torus(3,2))"


def main():
    assert m.bridge_number("torus(3,2)") == 2
    assert m.bridge_number(SAT3) == 6
    assert m.bridge_number("sum(torus(3,2), torus(5,2))") == 3

    report = m.tree_report(SAT3)
    assert report["bridge"] == 6 and report["heights"]["1"] == 3

    assert "composing space" in m.presentation(TWO_TREFOILS)

    assert m.peripheral_basis(2, [("", 1), ("", 2)]) is None
    assert m.peripheral_basis(2, [("", 1)]) == [("1", 1)]
    assert len(m.peripheral_basis(3, [("x2", 1), ("", 2)])) == 2

    dup = m.fold(SAT3, "a:1 e:1 a:1 e:1 a:1\na:1 e:1 a:1 e:1 a:1")
    assert dup["sound"] and [s["move"] for s in dup["steps"]] == ["IA"] * 3

    paths = "\n".join(["a:1 e:1 a:1 e:1 a:1", "a:1 e:1 a:u e:1 a:1", "a:1 e:2 a:u e:2 a:1"])
    complete = m.fold(TWO_TREFOILS, paths, exact_torus=True)
    assert complete["sound"] and complete["complete"] and complete["c1"] == 3

    cert = m.torus_certificate(5, 3, 2)
    assert cert["holds"] and cert["index_bound"] == "-7"

    try:
        m.bridge_number("torus(3,")
    except ValueError as e:
        assert "line 1" in str(e)
    else:
        raise AssertionError("malformed tree accepted")

    print("meridian_py smoke test passed")


if __name__ == "__main__":
    main()

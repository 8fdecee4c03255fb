"""Smoke test for the pywlat extension. Run with pytest or as a script."""

import json

import pywlat


def test_version_and_catalog():
    assert pywlat.version()
    cat = pywlat.catalog()
    assert {"ZA", "Lambda", "Q", "ZD", "G2"} <= set(cat)


def test_describe():
    d = pywlat.describe("ZA:3")
    assert d["rank"] == 2
    assert len(d["generator_matrices"]) == len(d["generators"])


def test_cohomology():
    assert pywlat.cohom("ZA:3", 1)["invariants"] == {"torsion": [3], "free_rank": 0}
    assert pywlat.cohom("ZA:3", 0)["invariants"]["torsion"] == []
    assert pywlat.cohom("ZA:3", 1, subgroup=["(1 2 3)"])["invariants"]["torsion"] == [3]


def test_sha_on_table_subgroup():
    gens = ["(1 3 5 7)(2 4 6 8)", "(1 2)(5 6)"]
    r = pywlat.sha("Q:8:4", 1, subgroup=gens)
    assert r["invariants"]["free_rank"] == 0


def test_obstructions():
    assert pywlat.qp_check("Lambda:4")["verdict"] == "notQuasiPermutation"
    assert pywlat.qp_check("ZA:4")["verdict"] == "obstructionAbsent"
    assert pywlat.reproduce_an(6, 3)["verdict"] == "notQuasiPermutation"
    assert pywlat.reproduce_dn(3)["verdict"] == "notQuasiPermutation"


def test_cokernel():
    assert pywlat.cokernel([[2, 0], [0, 6]]) == {"torsion": [2, 6], "free_rank": 0}
    assert pywlat.cokernel([[1], [2], [3]])["free_rank"] == 2


def test_errors():
    for call in (lambda: pywlat.cohom("Nope:3", 1), lambda: pywlat.sha("ZA:3", 3), lambda: pywlat.reproduce_an(6, 1)):
        try:
            call()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


def test_cli_in_process():
    code, out, _ = pywlat.run_cli(
        ["--no-cache", "--json", "sha", "--lattice", "Q:8:4", "--subgroup", "table:8:2", "--degree", "1"]
    )
    assert code == 0
    assert json.loads(out)["invariants"]["torsion"] == [2]
    assert pywlat.run_cli(["--no-cache", "qp-check", "--lattice", "Lambda:4"])[0] == 3


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print("ok", name)

"""Smoke test for the chabauty extension module.

Build and install it first:
    pip install --no-build-isolation -e crates/python
"""

import json
import pathlib
import tempfile

import chabauty

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ex2 = chabauty.Curve(["1", "-8", "28", "-56", "72", "-56", "24", "-4"], scaling=("-4", "256"))
    z = ex2.zeta(7)
    assert z.points_fp == 11 and z.coleman_bound == 15, z
    assert z == ex2.zeta_brute_force(7)
    assert z.functional_equation_holds()

    pts = ex2.search_points(10)
    assert pts == ["∞", "(0, -1)", "(0, 1)", "(1, -1)", "(1, 1)"], pts

    a = ex2.integrate(7, 1, "0,1", "1,-1")
    b = ex2.integrate(7, 1, "1,-1", "0,1")
    assert a != b

    r = ex2.zero_set("1,1", ["0,1", "0,-1", "1,-1"], p=7)
    assert r.status == "Complete", r.summary()
    assert sorted(r.extra_minpolys()) == [("x^2 - x + 1", "y^2 + 3")] * 2
    report = json.loads(r.to_json())
    assert report["parameters"]["p"] == 7

    job = (ROOT / "jobs" / "example1.json").read_text()
    outcome = json.loads(chabauty.analyze_job(job))
    assert outcome["status"] == "ok"
    assert outcome["report"]["torsion"][0]["reduction_order"] == 12

    with tempfile.TemporaryDirectory() as d:
        rows = json.loads(chabauty.batch((ROOT / "jobs" / "examples.jsonl").read_text(), 2, d))
        assert [row["id"] for row in rows] == ["example1", "example2", "example3"]
        assert all(row["status"] == "ok" for row in rows)
        assert (pathlib.Path(d) / "summary.csv").exists()

    try:
        chabauty.Curve(["1", "2"])
    except ValueError:
        pass
    else:
        raise AssertionError("degree check missing")

    print("python smoke test passed")


if __name__ == "__main__":
    main()

"""Smoke test for the defect_forge extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/defect_forge-*.whl
"""

import json

import defect_forge as df

T_GATE = "input q\nt q\noutput q\n"


def main():
    c = df.parse(T_GATE)
    assert c.t_count == 1 and not c.is_icm()
    assert df.parse(c.to_qc()) == c

    prog = c.expand()
    icm = prog.circuit
    assert icm.is_icm()
    assert (len(icm.qubits), icm.cnot_count) == (6, 6)

    report = prog.verify(c, inputs=3, seed=1)
    assert report["passed"] and len(report["checks"]) == 3 * 32

    again = df.IcmProgram.from_parts(icm.to_qc(), prog.corrections_json())
    assert again.corrections()["gadgets"]["g0"]["gadget"] == "t"

    wires = icm.schedule()
    assert wires["wire_count"] == wires["max_live"]

    assert df.boxes_needed(1, 0.9, 0.999) == 3

    stats = df.stats(T_GATE)
    assert stats["required"] == {"A": 1, "Y": 1}

    out = df.compile(T_GATE, name="t", seed=7, obj=True)
    assert set(out) == {f"t.{ext}" for ext in
                        ["icm.qc", "corrections.json", "wires.json", "plan.json", "assembly.json", "obj", "report.json"]}
    assert df.compile(T_GATE, name="t", seed=7, obj=True) == out
    assembly = json.loads(out["t.assembly.json"])
    duals = [d for d in assembly["defects"] if d["kind"] == "dual"]
    assert len(duals) == 6

    try:
        df.parse("input q\nbogus q\n")
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()

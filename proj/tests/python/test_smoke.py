import pathlib

import pytest

import ukc

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def test_kernel_names():
    assert ukc.kernels() == [
        "fill", "sum", "relu", "conv3x3", "maxpool3x3", "sumpool3x3", "matmul", "matmult",
    ]


def test_flop_count():
    assert ukc.flop_count("matmul", 1, 5, 200) == 2000
    assert ukc.flop_count("conv3x3", 4, 8) == 576


def test_compile_full_pipeline():
    c = ukc.compile("matmul", 1, 5, 200)
    assert c["symbol"] == "matmul"
    assert c["static_freps"] == 1
    assert c["assembly"].count("frep.o ") == 1
    regs = c["registers"]
    assert (regs["fp_used"], regs["fp_pool"]) == (8, 20)
    assert (regs["int_used"], regs["int_pool"]) == (7, 15)


def test_compile_baseline_has_explicit_memory_ops():
    c = ukc.compile("sum", 4, 4, streams=False, scalar_replacement=False, frep=False,
                    fuse_fill=False, unroll_and_jam=False)
    assert "fld " in c["assembly"]
    assert "ssr.enable" not in c["assembly"]


def test_run_is_exact_and_deterministic():
    a = ukc.run("relu", 4, 16, seed=7)
    b = ukc.run("relu", 4, 16, seed=7)
    assert a["ok"] and a["status"] == "ok"
    assert a["metrics"] == b["metrics"]
    assert 0.0 <= a["metrics"]["fpu_utilization"] <= 1.0
    assert a["metrics"]["loads"] == 0


def test_ablation_counts():
    rows = ukc.ablate("matmul", 1, 5, 200)
    assert [r["metrics"]["loads"] for r in rows] == [3000, 1000, 5, 5, 0, 0]
    assert [r["metrics"]["stores"] for r in rows] == [1005, 1000, 5, 5, 0, 0]
    assert [r["static_freps"] for r in rows] == [0, 0, 0, 2, 1, 1]
    cycles = [r["metrics"]["cycles"] for r in rows]
    assert cycles[0] > cycles[1] > cycles[2] >= cycles[3]
    assert min(cycles) == cycles[-1]


def test_run_assembly_detects_wrong_code():
    asm = ukc.compile("sum", 4, 4)["assembly"]
    assert ukc.run_assembly(asm, "sum", 4, 4)["ok"]
    bad = ukc.run_assembly(asm.replace("fadd.d", "fsub.d", 1), "sum", 4, 4)
    assert bad["status"] == "mismatch"
    assert bad["mismatches"] == 16


def test_trace():
    r = ukc.run("sum", 4, 4, trace=True)
    lines = r["trace"].splitlines()
    assert len(lines) == r["metrics"]["instructions"]
    assert lines[-1].endswith("ret")


def test_errors():
    with pytest.raises(ValueError):
        ukc.run("nosuch", 4, 4)
    with pytest.raises(ukc.CompileError):
        ukc.compile("conv3x3", 4, 4, dtype="f32")
    with pytest.raises(ukc.OutOfRegisters):
        ukc.compile("conv3x3", 4, 8, streams=False, scalar_replacement=False, frep=False,
                    fuse_fill=False, unroll_and_jam=False)
    with pytest.raises(ukc.ParseError):
        ukc.roundtrip("builtin.module() ({")
    assert issubclass(ukc.OutOfRegisters, ukc.Error)


def test_suites():
    assert "matrix" in ukc.suite_names()
    shapes = ukc.suite("registers")
    assert ("matmult", 4, 16, 16, "f32") in shapes
    with pytest.raises(ValueError):
        ukc.suite("nosuch")


def test_roundtrip_listings():
    for path in sorted(DATA.glob("*.ir")):
        text = path.read_text()
        printed = ukc.roundtrip(text)
        assert ukc.roundtrip(printed) == printed


def test_csv_header():
    assert ukc.csv_header().startswith("kernel,dtype,n,m,k,stages,cycles")
    assert ukc.run("fill", 4, 4)["csv"].startswith("fill,f64,4,4,,")

"""Smoke test for the sublab Python bindings.

Run after `cargo build -p sublab-py --release --features extension-module`
(or `maturin develop -m crates/py/Cargo.toml`):

    python3 python/smoke.py
"""

import importlib.machinery
import importlib.util
import pathlib
import sys


def load():
    try:
        import sublab_py

        return sublab_py
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent / "target"
    for profile in ("release", "debug"):
        for name in ("libsublab_py.so", "libsublab_py.dylib", "sublab_py.dll"):
            path = root / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("sublab_py", str(path))
                spec = importlib.util.spec_from_file_location("sublab_py", path, loader=loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("sublab_py not built; see the module docstring")


def main():
    s = load()
    m = s.Machine(capacity=20, workers=2)

    assert s.is_program("0") and not s.is_program("1")
    assert s.decode_nat(s.encode_nat(12345)) == 12345
    assert s.index_of(s.nth_string(10**30)) == 10**30
    assert "codeword PI_OMEGA 11110" in s.published_constants()

    assert m.psum("poly:2,1", 0) == (0, 0)
    assert m.psum("poly:2,1", 4) == (9, 4)
    table = m.bb_table("poly:2,1", 12)
    assert all(bb_plus == bb + 1 for _, bb, bb_plus, _ in table)
    assert m.bb_plus("poly:2,1", 12) == 31

    num, exp = m.psum("poly:2,1", 10)
    assert m.pi_omega("poly:2,1", num, exp, 14) == m.bb_plus("poly:2,1", 10)
    assert m.pi_omega("poly:2,1", 0, 0, 14) == 0
    assert m.pi_omega("poly:2,1", 1, 0, 14) is None

    value, numeric = m.eval_sub("poly:2,1", "0")
    assert (value, numeric) == ("0", 0)
    assert m.time_bound("diag:poly:2,1", "101") == 10

    import json

    w = json.loads(m.build_witness("poly:2,1", 8))
    assert w["ok"] and w["output"] == str(m.bb_plus("diag:poly:2,1", 8))
    t = json.loads(m.verify_totality("poly:2,1", 10))
    assert t["total"] and t["guard_violations"] == 0

    try:
        m.time_bound("poly:0,1", "0")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("python smoke: ok")


if __name__ == "__main__":
    main()

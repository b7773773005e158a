"""Builds the extension with cargo, imports it and exercises the main calls.

Usage: python3 python/smoke_test.py
"""

import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "noisealloc-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libnoisealloc_py.so"
    dest = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, dest / "noisealloc_py.so")
    sys.path.insert(0, str(dest))


def main():
    build()
    import noisealloc_py as na

    grid = na.NoiseGrid(0.0, 100.0, 10)
    assert grid.representatives == [5.0 + 10.0 * i for i in range(10)]
    model = na.LinearModel(10.0)
    assert model.effective_variance(grid, [1.0] * 10) == 3325.0
    assert abs(model.train(grid, [1.0] * 10) - 100.0 / 3425.0) < 1e-12
    assert model.conditional_risk(0.5, 10.0) == 50.0

    narrow = na.NoiseGrid(0.0, 10.0, 40)
    sol = na.solve_p1(model, narrow, [1.0] * 40, 9.0)
    ref = na.oracle_p1(model, narrow, [1.0] * 40, 9.0)
    assert sol.converged and sol.max_gap <= 9.0 + 1e-3
    assert abs(sol.gain - ref.gain) < 1e-3
    print(f"p1 on [0, 10]: {sol.rounds} rounds, gain {sol.gain:.6f} (oracle {ref.gain:.6f})")

    wide = na.NoiseGrid(0.0, 20.0, 40)
    try:
        na.oracle_p1(model, wide, [1.0] * 40, 9.0)
        raise AssertionError("expected infeasible")
    except na.InfeasibleError as e:
        print(f"p1 on [0, 20]: {e}")
    p2 = na.solve_p2(model, wide, max_rounds=5000, step=0.1)
    mm = na.oracle_min_max(model, wide)
    assert abs(p2.max_gap - mm.epsilon_min) <= 0.01 * mm.epsilon_min
    print(f"p2 on [0, 20]: epsilon_min {p2.max_gap:.4f} (oracle {mm.epsilon_min:.4f})")

    assert na.format_percentages([0.0685, 0.9315]) == ["6.9%", "93.2%"]
    try:
        na.NoiseGrid(1.0, 1.0, 3)
        raise AssertionError("expected an error")
    except na.NoiseAllocError:
        pass

    config = (ROOT / "configs" / "linear_p1.toml").read_text()
    with tempfile.TemporaryDirectory() as out:
        code = na.run_experiment(config, out)
        assert code == 0, code
        assert (pathlib.Path(out) / "rounds.csv").exists()
    print("smoke test passed")


if __name__ == "__main__":
    main()

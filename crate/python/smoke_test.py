"""Smoke test of the Python bindings: a few coarse FSI steps plus small checks."""

import math
import tempfile

import fsi_gcsi


def main():
    gamma, alphas = fsi_gcsi.bdf(2)
    assert abs(gamma - 2 / 3) < 1e-15 and alphas == [-4 / 3, 1 / 3]

    vx, vy = fsi_gcsi.inflow_profile(0.205, 1.0, 0.41)
    assert abs(vx - 1.5) < 1e-14 and vy == 0.0

    t = [0.005 * i for i in range(1, 1201)]
    y = [1.23e-3 + 80.77e-3 * math.sin(4 * math.pi * s) for s in t]
    osc = fsi_gcsi.oscillation_stats(t, y, 1.0)
    assert abs(osc["frequency"] - 2.0) < 0.02, osc
    assert fsi_gcsi.oscillation_stats(t, [1.0] * len(t)) is None

    with tempfile.TemporaryDirectory() as out:
        cfg = fsi_gcsi.RunConfig.parse(
            "benchmark = fsi2i\nmesh.refinements = 1\ntime.tau = 0.01\ntime.end = 0.03\n"
            f"output.dir = {out}\noutput.progress = false\n"
        )
        print(cfg, cfg.dof_counts())
        solver = fsi_gcsi.Solver(cfg)
        v0 = solver.solid_volume()
        for _ in range(3):
            report = solver.step()
            print(report)
            assert all(r < 1e-6 for r in report["stage_residuals"])
        ux, uy = solver.displacement_at_a()
        assert ux > 0 and abs(solver.time - 0.03) < 1e-15
        assert abs(solver.solid_volume() / v0 - 1) < 1e-2
        fields = solver.vertex_fields()
        assert len(fields["points"]) == len(fields["pressure"])

        summary = fsi_gcsi.run(cfg, quiet=True)
        assert summary["ux_a"][-1] == ux and summary["uy_a"][-1] == uy

    try:
        fsi_gcsi.RunConfig.parse("benchmark = fsi2i\nbogus.key = 1\n")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("unknown key accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()

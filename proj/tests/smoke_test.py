"""Smoke tests for the python bindings: build problems, solve references,
run an estimator to convergence, and touch the theory and certification
helpers."""

import math
import os
import tempfile

import numpy as np

import proxsg


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# --- quadratic objective with a known optimum -------------------------------
centers = np.array([[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]])
obj = proxsg.objective_from_centers(centers)
assert obj.n == 4 and obj.dim == 2
assert approx(obj.L, 1.0) and approx(obj.L_max, 1.0)

x = np.array([1.0, 1.0])
assert approx(obj.value(x), 3.0)  # 0.5|x|^2 plus the centers' mean energy
assert np.allclose(obj.gradient(x), x, atol=1e-12)
assert approx(obj.component_value(0, x), 0.5 * (1.0 + 1.0))

prob = proxsg.Problem(obj, proxsg.regularizer(proxsg.RegKind.zero))
ref = proxsg.solve_reference(prob, tol=1e-12)
assert ref.converged
assert np.allclose(ref.x_star, np.zeros(2), atol=1e-9)
assert approx(ref.F_star, 2.0)

# --- proximal operator -------------------------------------------------------
reg = proxsg.regularizer(proxsg.RegKind.l1, 1.0)
assert np.allclose(reg.prox(0.5, np.array([1.0, -0.2])), [0.5, 0.0],
                   atol=1e-15)
assert approx(reg.value(np.array([1.0, -0.2])), 1.2)

# --- sparse file loading ------------------------------------------------------
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "tiny.svm")
    with open(path, "w", encoding="ascii") as f:
        f.write("1 1:2\n-1 2:1\n")
    loaded = proxsg.load_libsvm(path, proxsg.LossKind.least_squares)
    assert loaded.n == 2 and loaded.dim == 2

# --- a variance-reduced run on synthetic data -------------------------------
obj2 = proxsg.gen_synthetic(proxsg.LossKind.least_squares, n=40, d=6,
                            condition=5.0, seed=3)
assert obj2.n == 40 and obj2.dim == 6
assert obj2.L_max >= obj2.L

prob2 = proxsg.Problem(obj2, proxsg.regularizer(proxsg.RegKind.zero))
ref2 = proxsg.solve_reference(prob2, tol=1e-12)
assert ref2.converged

est = proxsg.saga(obj2, b=2)
assert est.name == "saga"
c = est.constants(ref2)
assert c.B == 2.0 and c.rho > 0.0 and c.D1 == 0.0
assert repr(c).startswith("EstimatorConstants(")

gamma = proxsg.vr_constant_step(c)
assert 0.0 < gamma < 1.0 / obj2.L

stop = proxsg.StoppingRule()
stop.max_iters = 200000
stop.eps_rel = 1e-6
traj = proxsg.run(prob2, est, proxsg.StepSizePolicy.constant(gamma), stop,
                  ref2, seed=1)
assert traj.reached_target and not traj.diverged
assert traj.final_rel_subopt < 1e-6
assert traj.points[0].k == 0
assert traj.points[-1].sigma_sq < 1e-3 * traj.points[0].sigma_sq
assert est.sigma_sq(ref2) >= 0.0

# determinism: the same seed reproduces the trajectory exactly
est_again = proxsg.saga(obj2, b=2)
traj_again = proxsg.run(prob2, est_again,
                        proxsg.StepSizePolicy.constant(gamma), stop, ref2,
                        seed=1)
assert traj_again.iters == traj.iters
assert np.array_equal(traj_again.x_final, traj.x_final)

# --- theory helpers -----------------------------------------------------------
assert proxsg.k_saga(10, 10, 2.0, 7.0, 1.0, 0.1) == 1600.0
assert proxsg.optimal_b_saga(2, 1.0, 1.0) == 1
assert proxsg.optimal_b_sega(17) >= 1

inputs = proxsg.BoundInputs()
inputs.r0_sq = float(np.dot(ref2.x_star, ref2.x_star))
inputs.delta0 = prob2.value(np.zeros(6)) - ref2.F_star
inputs.sigma0_sq = 0.0
inputs.c = c
inputs.L = obj2.L
inputs.zero_regularizer = True
assert proxsg.vr_bound(inputs, gamma, 10) > proxsg.vr_bound(inputs, gamma, 1000)
gs = proxsg.default_constant_step(c, obj2.L)
assert proxsg.fixed_step_bound(inputs, 0.9 * gs, 100) >= \
    proxsg.fixed_step_bound(inputs, 0.9 * gs, 10000)
assert math.isfinite(
    proxsg.unified_bound(inputs, proxsg.StepSizePolicy.inv_sqrt(0.9 * gs),
                         1000))

q = proxsg.Quantizer.random_sparsification(3, 1)
assert q.omega == 2.0
assert proxsg.Quantizer.identity(3).omega == 0.0

d_est = proxsg.diana(obj2, nodes=4, quantizer=proxsg.Quantizer.identity(6))
assert d_est.name == "diana"

# --- certification ------------------------------------------------------------
reports = proxsg.default_suite(0)
assert len(reports) == 18
assert proxsg.all_passed(reports)
summary = proxsg.render_summary(reports)
assert "PASS" in summary and "FAIL" not in summary

print("smoke ok:", len(reports), "certification checks passed")

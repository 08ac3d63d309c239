import numpy as np
import pytest

from saddlepc.dense import qr_eigen, sym_eigen
from saddlepc.preconditioners import build_P
from saddlepc.problems import gen_example1, gen_example2, random_saddle
from saddlepc.saddle import build_S, check_theorem_condition, exact_schur
from saddlepc.stationary import (iteration_matrix, iteration_matrix_spectrum, spectral_radius,
                                 stationary_solve, stationary_step)
from saddlepc.sparse import identity


def test_exact_schur_converges_in_few_steps():
    for sys in (gen_example1(4), gen_example2(2), random_saddle(12, 8, 4, 1)):
        S, _ = build_S(sys, "exact")
        rep = stationary_solve(sys, S, tol=1e-10)
        assert rep.converged and rep.iterations <= 3
        assert rep.relres_history[-1] < 1e-10


def test_zero_rhs_converges_immediately():
    sys = gen_example1(2).with_rhs(np.zeros(16))
    rep = stationary_solve(sys, identity(4))
    assert rep.converged and rep.iterations == 0


def test_small_S_diverges():
    sys = random_saddle(12, 8, 4, 2)
    K = exact_schur(sys)
    eps = 0.1 * sym_eigen(K)[-1]
    S = eps * np.eye(8)
    assert not check_theorem_condition(sys, S)[0]
    rep = stationary_solve(sys, S)
    assert not rep.converged
    assert rep.relres_history[-1] > rep.relres_history[0]


def test_report_invariants():
    sys = random_saddle(10, 6, 3, 5)
    S = 0.8 * exact_schur(sys)
    rep = stationary_solve(sys, S, tol=1e-9)
    assert rep.relres_history
    assert rep.converged == (rep.relres_history[-1] < 1e-9)
    assert len(rep.relres_history) == rep.iterations + 1
    assert rep.final_x.shape == (sys.size,)
    with pytest.raises(ValueError):
        stationary_solve(sys, S, tol=0)


def test_fixed_point():
    sys = random_saddle(10, 6, 3, 6)
    S, sS = build_S(sys, "diag")
    P = build_P(sys, S, sS)
    x = np.ones(sys.size)
    y = stationary_step(P, x, sys.b)
    assert np.linalg.norm(y - x) <= 1e-10 * np.linalg.norm(x)


def test_iteration_matrix_spectrum_real():
    # the zero eigenvalue of G is defective and its computed copies scatter
    # by about sqrt(eps), so realness is checked away from zero
    cases = [(gen_example1(p), identity(p * p)) for p in (2, 4)]
    rs = random_saddle(12, 8, 4, 3)
    cases.append((rs, 0.9 * exact_schur(rs)))
    for sys, S in cases:
        eigs = iteration_matrix_spectrum(sys, S)
        big = eigs[np.abs(eigs) > 1e-6]
        assert np.abs(big.imag).max(initial=0.0) <= 1e-8 * np.abs(eigs).max()
        assert np.abs(eigs[np.abs(eigs) <= 1e-6]).max(initial=0.0) <= 1e-6


def test_exact_schur_iteration_matrix_nilpotent():
    for sys in (gen_example1(2), gen_example2(2), random_saddle(10, 7, 3, 0)):
        S, _ = build_S(sys, "exact")
        assert spectral_radius(iteration_matrix_spectrum(sys, S)) <= 1e-6
        G = iteration_matrix(sys, S)
        assert np.linalg.norm(G @ G) <= 1e-8 * max(1.0, np.linalg.norm(G))


@pytest.mark.parametrize("p", [2, 4, 8])
def test_spectral_radius_below_one_when_condition_holds(p):
    sys = gen_example1(p)
    S = identity(sys.m)
    assert check_theorem_condition(sys, S)[0]
    assert spectral_radius(iteration_matrix_spectrum(sys, S)) < 1


def test_observed_rate_bounded_by_spectral_radius():
    for seed in range(5):
        sys = random_saddle(12, 8, 4, seed)
        S = 0.7 * exact_schur(sys)
        assert check_theorem_condition(sys, S)[0]
        rho = spectral_radius(iteration_matrix_spectrum(sys, S))
        rep = stationary_solve(sys, S, tol=1e-12)
        assert rep.converged
        assert rep.observed_rate <= rho + 0.05


def test_spectrum_relation_with_preconditioned_operator():
    sys = random_saddle(10, 7, 3, 8)
    S = 0.9 * exact_schur(sys)
    P = build_P(sys, S)
    from saddlepc.dense import dense_image
    H = dense_image(lambda e: P.apply_inv(sys.matvec(e)), sys.size)
    mu = iteration_matrix_spectrum(sys, S, precond=P)
    lam = qr_eigen(H)
    left = sorted(1 - mu, key=lambda z: (round(z.real, 5), z.imag))
    right = sorted(lam, key=lambda z: (round(z.real, 5), z.imag))
    assert np.max(np.abs(np.array(left) - np.array(right))) <= 1e-6


def test_cap_enforced():
    sys = gen_example1(4)
    with pytest.raises(ValueError, match="cap"):
        iteration_matrix(sys, identity(16), cap=10)

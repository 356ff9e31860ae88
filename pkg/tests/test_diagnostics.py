import math

import numpy as np
import pytest
from scipy.linalg import expm

from fixtures import random_generic, random_stoquastic
from vgpdiag.diagnostics import (SpectralCache, calF, diagnose, exact_avg_sign, exact_mean_order, f_eta,
                                 f_stoq, gauge_flux_residual, m_map, off_diagonal, spectral_vgp,
                                 weighted_flux_residual)
from vgpdiag.models import h_hard_model, heisenberg_edges, square_lattice
from vgpdiag.numerics import seeded_rng
from vgpdiag.pauli import PauliSum, PauliTerm, conjugate_pauli, to_dense
from vgpdiag.pmr import pmr_decompose


def test_f_eta_matches_expm():
    rng = seeded_rng(0)
    mat = to_dense(random_generic(3, rng, 6))
    off = off_diagonal(mat)
    direct = np.trace(expm(np.abs(off))).real - np.trace(expm(-off)).real
    assert math.isclose(f_eta(mat, 1.0), direct, rel_tol=1e-10, abs_tol=1e-12)


def test_f_stoq_zero_for_stoquastic():
    mat = to_dense(random_stoquastic(4, seeded_rng(1), 3))
    assert f_stoq(mat) == 0
    assert spectral_vgp(mat)


def test_disguised_stoquastic_is_vgp_not_stoquastic():
    h = conjugate_pauli(random_stoquastic(3, seeded_rng(2), 3), 0b011, 0b101)
    mat = to_dense(h)
    rep = diagnose(h)
    assert rep.vgp and rep.f_vgp <= 1e-9
    assert f_stoq(mat) >= 0


def test_afm_triangle_non_vgp_with_witness():
    h = heisenberg_edges(3, [(0, 1), (1, 2), (0, 2)], [1, 1, 1])
    rep = diagnose(h)
    assert not rep.vgp
    assert rep.witness is not None and rep.witness.q == 3
    d = rep.to_dict()
    assert d["witness"]["indices"] and len(d["witness"]["weight"]) == 2


def test_avg_sign_and_calF_definitions():
    h = heisenberg_edges(3, [(0, 1), (1, 2), (0, 2)], [1, 1, 1])
    mat = to_dense(h)
    beta = 0.7
    num = np.trace(expm(-beta * mat)).real
    den = np.trace(expm(beta * m_map(mat))).real
    assert math.isclose(exact_avg_sign(mat, beta), num / den, rel_tol=1e-12)
    assert math.isclose(SpectralCache(mat).avg_sign(beta), num / den, rel_tol=1e-12)
    assert math.isclose(calF(mat), np.trace(expm(m_map(mat))).real, rel_tol=1e-12)
    with pytest.raises(ValueError):
        calF(mat, np.ones((8, 8)))


def test_mean_order_by_finite_difference():
    # <q> = -beta d/dbeta log Z_|W| at fixed diagonal is beta <|H_off|>
    mat = to_dense(heisenberg_edges(4, [(0, 1), (1, 2), (2, 3)], [1.0, -0.5, 0.8]))
    absoff = np.abs(off_diagonal(mat))
    hb = np.diag(np.diag(mat).real) - absoff
    beta = 0.9
    rho = expm(-beta * hb)
    expect = beta * np.trace(rho @ absoff).real / np.trace(rho).real
    assert math.isclose(exact_mean_order(mat, beta), expect, rel_tol=1e-10)


def test_flux_residuals():
    good = pmr_decompose(conjugate_pauli(random_stoquastic(4, seeded_rng(3), 3), 1, 6))
    assert gauge_flux_residual(good) < 1e-9 and weighted_flux_residual(good) < 1e-9
    bad = pmr_decompose(h_hard_model(4, square_lattice(2, 2), np.zeros(4), np.ones(4), np.full(4, 2.0)))
    assert gauge_flux_residual(bad) > 1e-3 and weighted_flux_residual(bad) > 1e-3


def test_diagnose_empty_offdiagonal():
    rep = diagnose(PauliSum(2, [PauliTerm(1.0, 0, 3)]))
    assert rep.vgp and rep.f_eta == 0 and rep.f_stoq == 0

import numpy as np
import pytest

from vgpdiag.diagnostics import f_eta
from vgpdiag.numerics import seeded_rng
from vgpdiag.pauli import to_dense
from vgpdiag.search import (EXACT_RESIDUAL, UnitCellParams, apply_rz_rotation, lattice_bonds,
                            optimize_unit_cell, tile_periodic, tiled_vgp, unit_f_eta, unit_hamiltonian,
                            verify_conjecture, walk_residual)

TILDE = UnitCellParams.from_vector([1.0, 0.3, -1.0] * 4)


def test_bond_counts():
    assert len(lattice_bonds(1, 1)) == 4
    assert len(lattice_bonds(2, 1)) == 12
    assert len(lattice_bonds(2, 2)) == 32
    assert len(lattice_bonds(1, 1, diagonal=True)) == 5
    with pytest.raises(ValueError):
        lattice_bonds(0, 1)


def test_rz_rotation_is_unitary_equivalence():
    rng = seeded_rng(0)
    cell = UnitCellParams.from_vector(rng.uniform(-1, 1, 12))
    rot = apply_rz_rotation(cell, rng)
    a, b = to_dense(unit_hamiltonian(cell)), to_dense(unit_hamiltonian(rot))
    assert np.allclose(np.linalg.eigvalsh(a), np.linalg.eigvalsh(b), atol=1e-12)
    assert unit_f_eta(rot) == pytest.approx(unit_f_eta(cell), abs=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        UnitCellParams([(0, 3, 1.0, 0.0, 0.0)] + [(0, 1, float("nan"), 0.0, 0.0)])
    with pytest.raises(ValueError):
        UnitCellParams([(1, 2, 1.0, 0.0, 0.0)])
    assert UnitCellParams.from_vector(np.zeros(12)).is_degenerate()


def test_optimizer_converges_from_sign_consistent_start():
    res = optimize_unit_cell(TILDE, rng=seeded_rng(1))
    assert res.converged and not res.degenerate
    assert walk_residual(res.params.vector) <= EXACT_RESIDUAL
    for nx, ny in ((2, 1), (1, 2), (2, 2)):
        ok, val, _ = tiled_vgp(apply_rz_rotation(res.params, seeded_rng(2)), nx, ny, 1e-8)
        assert ok, (nx, ny, val)


def test_optimizer_flags_degenerate_start():
    res = optimize_unit_cell(UnitCellParams.from_vector(np.zeros(12)), rng=seeded_rng(0))
    assert res.degenerate and res.f_eta == 0.0


def test_tiling_is_translation_invariant():
    mat = to_dense(tile_periodic(TILDE, 2, 1))
    # shifting every site by two columns is a symmetry of the 4x2 torus
    n, w = 8, 4
    perm = np.zeros(1 << n, dtype=int)
    for z in range(1 << n):
        out = 0
        for s in range(n):
            if (z >> s) & 1:
                y, x = divmod(s, w)
                out |= 1 << (y * w + (x + 2) % w)
        perm[z] = out
    assert np.allclose(mat[np.ix_(perm, perm)], mat)
    assert f_eta(mat, 1.0) == pytest.approx(f_eta(mat[np.ix_(perm, perm)], 1.0))


def test_verify_conjecture_small_and_needs_rng():
    with pytest.raises(ValueError):
        verify_conjecture(1)
    rep = verify_conjecture(2, rng=seeded_rng(5))
    assert rep.instances == 2 and rep.unit_pass == rep.tiled_pass == 2
    assert rep.to_dict()["failures"] == []

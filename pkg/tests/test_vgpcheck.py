import numpy as np
import pytest

from vgpdiag.diagnostics import spectral_vgp
from vgpdiag.models import ModelSpec, build_model, h1_model, h_hard_model, square_lattice, two_local_xx_model
from vgpdiag.pauli import PauliSum, PauliTerm, to_dense
from vgpdiag.pmr import pmr_decompose
from vgpdiag.vgpcheck import (PreconditionError, check_2local_triangle, check_dx_vgp, check_spectral,
                              check_tilde_heis)

LAT = square_lattice(2, 2)


def test_dx_hard_witness_fields():
    v = check_dx_vgp(pmr_decompose(h_hard_model(4, LAT, np.zeros(4), np.ones(4), np.full(4, 2.0))))
    assert not v.vgp
    w = v.violations[0]
    assert w["cycle_length"] == 4 and set(w) >= {"sites", "alpha", "alpha_prime", "phase_residue"}


def test_dx_requires_independent_masks():
    h = PauliSum(3, [PauliTerm(1.0, 0b011, 0), PauliTerm(1.0, 0b110, 0), PauliTerm(1.0, 0b101, 0)])
    with pytest.raises(PreconditionError) as err:
        check_dx_vgp(pmr_decompose(h))
    assert sorted(err.value.circuit) == [0, 1, 2]


def test_h1_mixed_signs_non_vgp():
    # real couplings of both signs break the cycle phases on the 3x3 lattice
    rng = np.random.default_rng(0)
    edges = square_lattice(3, 3)
    h = h1_model(9, edges, rng.uniform(-1, 1, len(edges)))
    v = check_dx_vgp(pmr_decompose(h))
    assert not v.vgp and v.vgp == spectral_vgp(to_dense(h))


def test_triangle_cases():
    sign_consistent = [(0, 1, -1.0, 0.3, 0.3, 1.0), (1, 2, -1.0, 0.3, 0.3, 1.0), (0, 2, -1.0, 0.3, 0.3, 1.0)]
    assert check_2local_triangle(sign_consistent).vgp
    literal = [(0, 1, 1.0, 0.3, 0.3, -1.0), (1, 2, 1.0, 0.3, 0.3, -1.0), (0, 2, 1.0, 0.3, 0.3, -1.0)]
    v = check_2local_triangle(literal)
    assert not v.vgp
    assert not spectral_vgp(to_dense(two_local_xx_model(3, literal)))
    case2 = [(0, 1, 1.0, 0.2, 0.5, 0.0), (1, 2, 1.0, -0.3, 0.1, 0.0), (0, 2, 1.0, 0.4, 0.0, 0.0)]
    v = check_2local_triangle(case2)
    assert not v.vgp and v.details["case"] == 2
    with pytest.raises(ValueError):
        check_2local_triangle(sign_consistent[:2])


def test_triangle_with_missing_edge_falls_back():
    params = [(0, 1, -1.0, 0.0, 0.0, 0.0), (1, 2, -1.0, 0.0, 0.0, 0.0), (0, 2, 0.0, 0.0, 0.0, 0.0)]
    v = check_2local_triangle(params)
    assert v.method == "spectral_fallback" and v.vgp


def test_tilde_heis_paths():
    rng = np.random.default_rng(1)
    v = check_tilde_heis(ModelSpec("tilde_heis", n=6), rng)
    assert v.vgp and v.method == "parity_appendix_b" and v.details["cross_check_agrees"]
    mixed = ModelSpec("tilde_heis", n=6, params={"h0": 1.0, "h1": [0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5]})
    v = check_tilde_heis(mixed)
    assert v.method == "spectral_fallback"
    assert v.vgp == spectral_vgp(to_dense(build_model(mixed)))


def test_spectral_verdict_dict():
    h = PauliSum(2, [PauliTerm(1.0, 3, 0), PauliTerm(0.5, 3, 1)])
    d = check_spectral(h, 1e-9).to_dict()
    assert d["method"] == "spectral_fallback" and "f_eta" in d

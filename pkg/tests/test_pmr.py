import numpy as np

from fixtures import random_generic
from vgpdiag.pauli import to_dense
from vgpdiag.pmr import edge_weight, pmr_decompose, pmr_to_dense, pmr_to_dict, pmr_to_paulisum
from vgpdiag.numerics import seeded_rng


def test_pmr_roundtrip_dense_and_pauli():
    rng = seeded_rng(3)
    for _ in range(30):
        h = random_generic(int(rng.integers(1, 6)), rng, int(rng.integers(1, 10)))
        p = pmr_decompose(h)
        assert np.allclose(pmr_to_dense(p), to_dense(h), atol=1e-12)
        back = pmr_to_paulisum(p)
        assert np.allclose(to_dense(back), to_dense(h), atol=1e-12)


def test_edge_weight_is_matrix_element():
    rng = seeded_rng(4)
    h = random_generic(4, rng, 10)
    p = pmr_decompose(h)
    mat = to_dense(h)
    for j in range(len(p.masks)):
        for z in range(16):
            zp, w = edge_weight(p, j, z)
            # several terms can share a mask only through the same P_j, so the element is exact
            assert np.isclose(mat[zp, z], w, atol=1e-12)


def test_weight_table_and_dict():
    rng = seeded_rng(5)
    p = pmr_decompose(random_generic(3, rng, 6))
    table = p.weight_table()
    assert table.shape == (len(p.masks), 8)
    d = pmr_to_dict(p)
    assert d["n"] == 3 and len(d["off"]) == len(p.masks)

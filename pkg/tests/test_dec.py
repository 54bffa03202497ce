import numpy as np
import pytest
import scipy.sparse as sp

from curleig.dec import (
    assemble,
    hodge_decompose,
    inner_product_0,
    inner_product_1,
    one_form_laplacian,
    rotated_differential,
    scalar_laplacian,
    export_operators,
)
from curleig.mesh import TriangleMesh
from curleig.spectral import SpectrumRequest, rayleigh_quotient, solve_scalar_spectrum


@pytest.fixture(scope="module")
def ops32(torus32):
    return assemble(torus32)


@pytest.fixture(scope="module")
def ops_sphere(sphere3):
    return assemble(sphere3)


class TestExactIdentities:
    def test_d1_d0_zero(self, ops32, ops_sphere):
        for ops in (ops32, ops_sphere):
            prod = ops.d1 @ ops.d0
            assert prod.nnz == 0 or abs(prod).max() == 0.0

    def test_stiffness_is_cotangent_matrix(self, torus32, ops32):
        # Assemble the textbook cotangent matrix directly and compare.
        mesh, ops = torus32, ops32
        V = mesh.n_vertices
        i, j, k = mesh.triangles.T
        L = ops.lengths[mesh.face_edges]
        A = ops.face_areas
        cot_k = (L[:, 2] ** 2 + L[:, 1] ** 2 - L[:, 0] ** 2) / (4 * A)
        cot_i = (L[:, 0] ** 2 + L[:, 2] ** 2 - L[:, 1] ** 2) / (4 * A)
        cot_j = (L[:, 1] ** 2 + L[:, 0] ** 2 - L[:, 2] ** 2) / (4 * A)
        rows = np.concatenate([i, j, j, k, k, i])
        cols = np.concatenate([j, i, k, j, i, k])
        vals = 0.5 * np.concatenate([cot_k, cot_k, cot_i, cot_i, cot_j, cot_j])
        W = sp.csr_matrix((vals, (rows, cols)), shape=(V, V))
        S_ref = sp.dia_matrix((np.asarray(W.sum(axis=1)).ravel(), 0),
                              shape=(V, V)) - W
        assert abs(ops.S - S_ref).max() < 1e-12

    def test_wedge_pairing_identity(self, ops32, ops_sphere):
        # Integration by parts of Whitney forms: J^T d0 = -d1^T Avg.
        for ops in (ops32, ops_sphere):
            diff = ops.J.T @ ops.d0 + ops.B
            assert (abs(diff).max() if diff.nnz else 0.0) < 1e-14

    def test_stiffness_symmetric(self, ops32):
        assert (ops32.S != ops32.S.T).nnz == 0

    def test_star1_spd(self, sphere3):
        ops = assemble(sphere3)
        dense = ops.star1.toarray()
        np.linalg.cholesky(dense)   # raises if not SPD

    def test_star0_star2_positive(self, ops32):
        assert np.all(ops32.star0_diag > 0)
        assert np.all(ops32.star2.diagonal() > 0)

    def test_uniform_grid_dual_areas_equal(self, ops32):
        d = ops32.star0_diag
        assert np.allclose(d, d[0], rtol=1e-12)


class TestConformalBehavior:
    def test_constant_shift_scales_star0_fixes_star1(self, torus32):
        c = 0.31
        base = assemble(torus32)
        shifted = assemble(torus32, np.full(torus32.n_vertices, 2 * c))
        assert np.allclose(shifted.star0_diag,
                           np.exp(2 * c) ** 2 * base.star0_diag, rtol=1e-12)
        # 1-form Dirichlet energy is conformally invariant in 2D.
        assert abs(shifted.star1 - base.star1).max() < 1e-12 * abs(base.star1).max()

    def test_dirichlet_form_invariant(self, torus32):
        rng = np.random.default_rng(3)
        f = rng.standard_normal(torus32.n_vertices)
        base = assemble(torus32)
        shifted = assemble(torus32, np.full(torus32.n_vertices, 0.6))
        assert np.isclose(f @ (base.S @ f), f @ (shifted.S @ f), rtol=1e-12)


class TestScalarLaplacian:
    def test_constants_in_kernel(self, ops32):
        S, _ = scalar_laplacian(ops32)
        c = np.full(ops32.mesh.n_vertices, 2.7)
        assert np.abs(S @ c).max() < 1e-10

    def test_flat_torus_rayleigh(self, torus64):
        ops = assemble(torus64)
        S, M = scalar_laplacian(ops)
        x = torus64.planar_coords[:, 0]
        f = np.cos(x)
        f -= (ops.star0_diag @ f) / ops.star0_diag.sum()
        q = rayleigh_quotient(S, M, f)
        assert abs(q - 1.0) < 0.01

    def test_disconnected_mesh_kernel_dimension(self):
        # Two disjoint tetrahedra: one constant per component.
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
        faces = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
        verts2 = np.vstack([verts, verts + 5.0])
        faces2 = np.vstack([faces, faces + 4])
        mesh = TriangleMesh(verts2, faces2)
        assert mesh.n_components == 2
        ops = assemble(mesh)
        S, _ = scalar_laplacian(ops)
        w = np.linalg.eigvalsh(S.toarray())
        assert np.sum(w < 1e-10) == 2


class TestOneFormLaplacian:
    def test_commutes_with_d_on_eigenfunctions(self, torus32):
        ops = assemble(torus32)
        S, M = scalar_laplacian(ops)
        pairs = solve_scalar_spectrum(S, M, SpectrumRequest(2))
        nu, f = pairs[0].eigenvalue, pairs[0].eigenvector
        A1, M1 = one_form_laplacian(ops)
        df = ops.d0 @ f
        lhs = ops.star1_solve(A1 @ df)
        rel = np.linalg.norm(lhs - nu * df) / np.linalg.norm(nu * df)
        assert rel < 1e-8

    @pytest.mark.parametrize("fixture,expected", [
        ("torus32", 2), ("sphere3", 0)])
    def test_harmonic_dimension(self, fixture, expected, request):
        mesh = request.getfixturevalue(fixture)
        ops = assemble(mesh)
        basis = ops.harmonic_basis()
        assert len(basis) == expected

    def test_genus2_harmonic_dimension(self, genus2_obj):
        from curleig.mesh import load_mesh
        ops = assemble(load_mesh(genus2_obj))
        assert len(ops.harmonic_basis()) == 4


class TestRotation:
    def test_constant_function_rotates_to_zero(self, ops32):
        f = np.full(ops32.mesh.n_vertices, 3.0)
        w = rotated_differential(ops32, f)
        assert np.abs(w).max() < 1e-12

    def test_result_coclosed(self, torus32):
        ops = assemble(torus32)
        x = torus32.planar_coords[:, 0]
        f = np.cos(x)
        w = rotated_differential(ops, f)
        res = ops.d0.T @ (ops.star1 @ w)
        assert np.linalg.norm(res) < 1e-8 * np.linalg.norm(f)

    def test_rotated_cos_x_points_in_y(self, torus32):
        # star df for f = cos x is -sin x dy: vertical edges carry the mass.
        ops = assemble(torus32)
        x = torus32.planar_coords[:, 0]
        w = rotated_differential(ops, np.cos(x))
        i, j = torus32.edges[:, 0], torus32.edges[:, 1]
        dxy = torus32.planar_coords[j] - torus32.planar_coords[i]
        L = 2 * np.pi
        dxy -= L * np.round(dxy / L)
        vertical = (np.abs(dxy[:, 0]) < 1e-12)
        horizontal = (np.abs(dxy[:, 1]) < 1e-12)
        assert np.abs(w[vertical]).max() > 50 * np.abs(w[horizontal]).max()

    def test_isometry_on_exact_fields(self, torus48):
        ops = assemble(torus48)
        x = torus48.planar_coords[:, 0]
        f = np.cos(x)
        df = ops.d0 @ f
        w = ops.rot1(df)
        n1 = np.sqrt(inner_product_1(ops, w, w))
        n0 = np.sqrt(inner_product_1(ops, df, df))
        assert abs(n1 / n0 - 1.0) < ops.tau_rot

    def test_double_rotation_is_minus_identity(self, torus48, sphere3):
        for mesh in (torus48, sphere3):
            ops = assemble(mesh)
            S, M = scalar_laplacian(ops)
            pairs = solve_scalar_spectrum(S, M, SpectrumRequest(1))
            df = ops.d0 @ pairs[0].eigenvector
            ww = ops.rot1(ops.rot1(df))
            defect = np.sqrt(inner_product_1(ops, ww + df, ww + df)
                             / inner_product_1(ops, df, df))
            assert defect < ops.tau_rot


class TestInnerProduct:
    def test_positive_definite(self, ops32):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(ops32.mesh.n_edges)
        assert inner_product_1(ops32, a, a) > 0

    def test_quadratic_scaling(self, ops32):
        rng = np.random.default_rng(1)
        a = rng.standard_normal(ops32.mesh.n_edges)
        assert np.isclose(inner_product_1(ops32, 2 * a, 2 * a),
                          4 * inner_product_1(ops32, a, a), rtol=1e-14)

    def test_total_area(self, torus32):
        # (1, 1)_0 is the surface area, here the full flat square.
        ops = assemble(torus32)
        one = np.ones(torus32.n_vertices)
        assert np.isclose(inner_product_0(ops, one, one), (2 * np.pi) ** 2,
                          rtol=1e-12)


class TestHodgeDecomposition:
    def test_exact_input(self, torus32):
        ops = assemble(torus32)
        rng = np.random.default_rng(5)
        f = rng.standard_normal(torus32.n_vertices)
        b = ops.d0 @ f
        ex, co, ha = hodge_decompose(ops, b)
        nb = np.sqrt(inner_product_1(ops, b, b))
        assert np.sqrt(inner_product_1(ops, co, co)) < 1e-8 * nb
        assert np.sqrt(inner_product_1(ops, ha, ha)) < 1e-8 * nb

    def test_harmonic_input(self, torus32):
        ops = assemble(torus32)
        h = ops.harmonic_basis()[0]
        ex, co, ha = hodge_decompose(ops, h)
        nh = np.sqrt(inner_product_1(ops, h, h))
        assert np.sqrt(inner_product_1(ops, ex, ex)) < 1e-8 * nh
        assert np.sqrt(inner_product_1(ops, co, co)) < 1e-8 * nh

    def test_random_reassembly_and_orthogonality(self, torus32):
        ops = assemble(torus32)
        rng = np.random.default_rng(6)
        b = rng.standard_normal(torus32.n_edges)
        ex, co, ha = hodge_decompose(ops, b)
        nb = np.sqrt(inner_product_1(ops, b, b))
        err = b - ex - co - ha
        assert np.sqrt(inner_product_1(ops, err, err)) < 1e-10 * nb
        for u, v in ((ex, co), (ex, ha), (co, ha)):
            assert abs(inner_product_1(ops, u, v)) < 1e-8 * nb * nb


def test_operator_export(tmp_path, torus32):
    ops = assemble(torus32)
    out = export_operators(ops, str(tmp_path / "ops"))
    from scipy.io import mmread
    d0 = mmread(f"{out}/d0.mtx")
    assert (abs(d0 - ops.d0)).max() == 0
    star1 = mmread(f"{out}/star1.mtx")
    assert abs(star1 - ops.star1).max() < 1e-15

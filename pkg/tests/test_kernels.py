import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggfrag import kernels as K


# ---------------------------------------------------------------------------
# independent oracle: evaluate the measure-discretization cell by cell,
# with its own interval arithmetic over the density pieces and atom list


def oracle_cell_weights(atoms, breaks, values, j):
    d = j - 1
    out = np.zeros(d)

    def dens_integral(a, b):
        total = 0.0
        for r in range(len(values)):
            lo, hi = max(a, breaks[r]), min(b, breaks[r + 1])
            if hi > lo:
                total += values[r] * (hi - lo)
        return total

    for i in range(1, d + 1):
        lo, hi = (i - 1) / d, i / d
        w = dens_integral(lo, hi)
        for a, aw in atoms:
            if abs(a - lo) < 1e-12 or abs(a - hi) < 1e-12:
                w += 0.5 * aw
            elif lo < a < hi:
                w += aw
        out[i - 1] = w
    w0 = sum(aw for a, aw in atoms if abs(a) < 1e-12)
    out[0] += 0.5 * w0
    out[d - 1] += 0.5 * w0
    return out


class TestUniform:
    def test_row_values(self):
        k = K.uniform_kernel(4)
        np.testing.assert_allclose(k.row(4), [1 / 3, 1 / 3, 1 / 3], rtol=0, atol=0)

    def test_minimal_size(self):
        assert K.uniform_kernel(2).row(2).tolist() == [1.0]

    def test_mass_identity_row4(self):
        row = K.uniform_kernel(4).row(4)
        assert 2 * (1 * row[0] + 2 * row[1] + 3 * row[2]) == pytest.approx(4.0, abs=1e-14)

    def test_small_jmax_rejected(self):
        with pytest.raises(ValueError):
            K.uniform_kernel(1)

    def test_axioms_exact(self):
        rep = K.check_axioms(K.uniform_kernel(50))
        assert rep.row_sum_defect <= 1e-12
        assert rep.symmetry_defect <= 1e-12
        assert rep.mass_identity_defect <= 1e-10
        assert rep.min_entry > 0


class TestFromMeasure:
    def test_lebesgue_matches_uniform(self, lebesgue):
        km = K.kernel_from_measure(lebesgue, 200)
        ku = K.uniform_kernel(200)
        assert np.max(np.abs(km.data - ku.data)) <= 1e-12

    def test_lebesgue_row5(self, lebesgue):
        np.testing.assert_allclose(K.kernel_from_measure(lebesgue, 5).row(5),
                                   [0.25] * 4, atol=1e-15)

    def test_atom_rows(self, half_atom):
        k = K.kernel_from_measure(half_atom, 5)
        np.testing.assert_allclose(k.row(5), [0.0, 0.5, 0.5, 0.0], atol=0)
        np.testing.assert_allclose(k.row(4), [0.0, 1.0, 0.0], atol=0)
        assert k.row(2).tolist() == [1.0]

    def test_matches_independent_oracle(self):
        m = K.SelfSimilarMeasure(atoms=[(0.25, 0.15), (0.75, 0.15), (0.5, 0.1)],
                                 values=(0.6,))
        k = K.kernel_from_measure(m, 17)
        for j in (2, 3, 9, 17):
            expected = oracle_cell_weights(m.atoms, m.breaks, m.values, j)
            np.testing.assert_allclose(k.row(j), expected, atol=1e-12)

    def test_atom_kernel_mass_identity(self, half_atom):
        rep = K.check_axioms(K.kernel_from_measure(half_atom, 40))
        assert rep.mass_identity_defect <= 1e-10

    def test_bad_measures_rejected(self):
        short = K.SelfSimilarMeasure(values=(0.5,))  # total mass 1/2
        with pytest.raises(ValueError):
            K.kernel_from_measure(short, 5)
        lopsided = K.SelfSimilarMeasure(atoms=[(0.3, 0.4)], values=(0.6,))
        with pytest.raises(ValueError):
            K.kernel_from_measure(lopsided, 5)

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(0.05, 0.45), w=st.floats(0.0, 0.5),
           jmax=st.integers(2, 40))
    def test_random_symmetric_measures_admissible(self, a, w, jmax):
        m = K.SelfSimilarMeasure(atoms=[(a, w / 2), (1 - a, w / 2)],
                                 values=(1 - w,))
        rep = K.check_axioms(K.kernel_from_measure(m, jmax))
        assert rep.row_sum_defect <= 1e-12
        assert rep.symmetry_defect <= 1e-12
        assert rep.mass_identity_defect <= 1e-10


class TestBoundaryWeighted:
    def test_eps_zero_all_ends(self):
        k = K.boundary_weighted_kernel(0.0, 1.0, K.uniform_kernel(6), 5)
        np.testing.assert_allclose(k.row(5), [0.5, 0.0, 0.0, 0.5], atol=0)

    def test_example_row(self):
        k = K.boundary_weighted_kernel(0.1, 1.0, K.uniform_kernel(6), 5)
        np.testing.assert_allclose(k.row(5), [0.45, 0.05, 0.05, 0.45], atol=1e-15)

    @pytest.mark.parametrize("eps", [0.0, 0.1, 0.5])
    def test_palindromic_rows(self, eps):
        k = K.boundary_weighted_kernel(eps, 1.0, K.uniform_kernel(9), 8)
        for j, row in k.rows():
            np.testing.assert_allclose(row, row[::-1], atol=1e-15)
        assert K.check_axioms(k).row_sum_defect <= 1e-12

    def test_negative_probability_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            K.boundary_weighted_kernel(0.6, 2.0, K.uniform_kernel(6), 5)


class TestCheckAxioms:
    def test_planted_row_sum_defect(self):
        rows = [K.uniform_kernel(8).row(j).copy() for j in range(2, 9)]
        rows[5] = rows[5] * 1.01  # j = 7
        rep = K.check_axioms(K.FragmentationKernel.from_rows(rows))
        assert rep.row_sum_defect == pytest.approx(0.01, rel=1e-9)
        assert rep.row_sum_argmax == 7

    def test_report_only(self):
        rows = [np.array([1.0]), np.array([0.9, 0.1])]  # asymmetric row j=3
        rep = K.check_axioms(K.FragmentationKernel.from_rows(rows))
        assert rep.symmetry_defect == pytest.approx(0.8)
        assert not rep.ok()


class TestModuli:
    def test_uniform_compactness(self):
        assert K.compactness_modulus(K.uniform_kernel(100)) <= 2.0

    def test_measure_compactness(self, lebesgue):
        assert K.compactness_modulus(K.kernel_from_measure(lebesgue, 100)) <= 2.0

    def test_degenerate_small(self):
        val = K.compactness_modulus(K.uniform_kernel(3))
        assert np.isfinite(val) and val >= 0

    def test_uniform_strengthened_entry(self):
        diff, entry = K.strengthened_modulus(K.uniform_kernel(100))
        assert entry == pytest.approx(2.0)  # j/(j-1) peaks at j=2
        assert diff <= 2.0 + 1e-9

    def test_end_weighted_grows_linearly(self):
        k = K.boundary_weighted_kernel(0.0, 1.0, K.uniform_kernel(41), 40)
        _, entry = K.strengthened_modulus(k)
        assert entry >= 0.9 * 40 / 2  # reported, not rejected

    def test_concentrated_kernel_flagged(self, half_atom):
        _, entry = K.strengthened_modulus(K.kernel_from_measure(half_atom, 40))
        assert entry > 5.0


class TestRepartition:
    def test_cdf_endpoints(self):
        rt = K.repartition_tables(K.uniform_kernel(20), 0.25)
        for j in (5, 10, 20):
            y = j * 0.25
            assert rt.F(y, y) == pytest.approx(1.0, abs=1e-12)
            assert rt.F(0.0, y) == 0.0

    def test_out_of_range(self):
        rt = K.repartition_tables(K.uniform_kernel(10), 0.5)
        with pytest.raises(ValueError):
            rt.F(6.0, 1.0)
        with pytest.raises(ValueError):
            rt.G(1.0, -0.5)

    def test_primitive_convex(self, half_atom):
        rt = K.repartition_tables(K.kernel_from_measure(half_atom, 24), 0.125)
        y = 20 * 0.125
        xs = np.linspace(0.0, y, 100)
        g = np.array([rt.G(x, y) for x in xs])
        second = np.diff(g, 2)
        assert second.min() >= -1e-12
        assert np.all(np.diff(g) >= -1e-14)

    @pytest.mark.parametrize("phi,dphi", [
        (np.sin, np.cos),
        (lambda x: np.exp(-((x - 1.2) ** 2)), lambda x: -2 * (x - 1.2) * np.exp(-((x - 1.2) ** 2))),
    ])
    def test_pairing_by_parts_matches_direct(self, phi, dphi):
        rt = K.repartition_tables(K.uniform_kernel(32), 0.125)
        for j in (7, 19, 32):
            y = j * 0.125
            assert rt.pair_by_parts(phi, dphi, y) == pytest.approx(
                rt.pair_direct(phi, y), abs=1e-10)

    def test_invalid_eps(self):
        with pytest.raises(ValueError):
            K.repartition_tables(K.uniform_kernel(4), 0.0)


class TestPersistence:
    def test_roundtrip(self, tmp_path, half_atom):
        k = K.kernel_from_measure(half_atom, 12)
        path = tmp_path / "kernel.txt"
        k.save(path)
        k2 = K.FragmentationKernel.load(path)
        assert k2.jmax == k.jmax
        assert k2.provenance == k.provenance
        np.testing.assert_array_equal(k2.data, k.data)

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("something else\n")
        with pytest.raises(ValueError, match="not a kernel file"):
            K.FragmentationKernel.load(path)

    def test_load_rejects_short_rows(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("aggfrag-kernel 1 jmax=3 provenance=custom\n1.0\n0.5\n")
        with pytest.raises(ValueError, match="row j=3"):
            K.FragmentationKernel.load(path)


class TestMeasure:
    def test_mass_validation(self):
        with pytest.raises(ValueError, match="mass"):
            K.SelfSimilarMeasure(values=(0.7,)).validate()

    def test_symmetry_validation(self):
        m = K.SelfSimilarMeasure(atoms=[(0.2, 0.5)], values=(0.5,))
        with pytest.raises(ValueError, match="symmet"):
            m.validate()

    def test_first_moment_unit(self, lebesgue, half_atom):
        assert lebesgue.first_moment() == pytest.approx(1.0, abs=1e-14)
        assert half_atom.first_moment() == pytest.approx(1.0, abs=1e-14)

    def test_interval_queries(self):
        m = K.SelfSimilarMeasure(atoms=[(0.5, 0.4)], values=(0.6,))
        assert m.open_interval(0.0, 0.5) == pytest.approx(0.3)
        assert m.open_interval(0.25, 0.75) == pytest.approx(0.3 + 0.4)
        assert m.atom_at(0.5) == pytest.approx(0.4)
        assert m.total_mass() == pytest.approx(1.0)

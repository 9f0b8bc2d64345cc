import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scope_dti.chem import (
    EmbeddedConformerProvider,
    InvalidSmilesError,
    circular_fingerprint,
    parse_sdf,
    parse_smiles,
    tanimoto,
    write_sdf,
)
from scope_dti.chem.conformer import (
    ChainedConformerProvider,
    ConformerError,
    SdfConformerProvider,
    default_conformer_provider,
)


class TestSmilesParser:
    def test_ethanol_hydrogen_counts(self):
        mol = parse_smiles("CCO")
        assert [mol.total_hs(i) for i in range(3)] == [3, 2, 1]
        assert mol.hybridization(0) == "SP3"

    @pytest.mark.parametrize("smiles", ["c1ccccc1", "C1=CC=CC=C1"])
    def test_benzene_forms(self, smiles):
        mol = parse_smiles(smiles)
        assert len(mol.atoms) == 6
        assert all(a.aromatic for a in mol.atoms)
        assert all(mol.total_hs(i) == 1 for i in range(6))
        assert all(mol.hybridization(i) == "SP2" for i in range(6))

    def test_fused_kekule_ring(self):
        mol = parse_smiles("C1=CC=C2C=CC=CC2=C1")  # naphthalene
        assert len(mol.atoms) == 10
        assert all(a.aromatic for a in mol.atoms)

    def test_quinone_not_aromatic(self):
        mol = parse_smiles("O=C1C=CC(=O)C=C1")
        assert not any(a.aromatic for a in mol.atoms)

    def test_heteroaromatics(self):
        for smiles, n in [("c1ccncc1", 6), ("c1ccoc1", 5), ("c1cc[nH]c1", 5), ("c1ccsc1", 5)]:
            mol = parse_smiles(smiles)
            assert len(mol.atoms) == n and all(a.aromatic for a in mol.atoms), smiles

    def test_charges_and_brackets(self):
        mol = parse_smiles("C[N+](=O)[O-]")
        assert mol.atoms[1].formal_charge == 1
        assert mol.atoms[3].formal_charge == -1
        assert mol.total_hs(1) == 0

    def test_explicit_hydrogens_collapse(self):
        mol = parse_smiles("[H]C([H])([H])[H]")
        assert len(mol.atoms) == 1
        assert mol.total_hs(0) == 4

    def test_ring_bond_percent_notation(self):
        mol = parse_smiles("C%10CCCCC%10")
        assert len(mol.atoms) == 6
        assert all(a.in_ring for a in mol.atoms)

    def test_dot_separated_fragments(self):
        mol = parse_smiles("CC.O")
        assert len(mol.atoms) == 3
        assert mol.degree(2) == 0

    def test_triple_bond_sp(self):
        mol = parse_smiles("CC#N")
        assert mol.hybridization(1) == "SP"
        assert mol.total_hs(2) == 0

    @pytest.mark.parametrize(
        "bad",
        ["", "   ", "C1CC", "C(", "C)", "[Xx]", "[C", "C==C", "1CC1", "[H][H]", "%1C"],
    )
    def test_invalid_smiles_rejected(self, bad):
        with pytest.raises(InvalidSmilesError):
            parse_smiles(bad)


class TestFingerprint:
    def test_identical_smiles_identical_bits(self):
        a = circular_fingerprint("CC(=O)Oc1ccccc1C(=O)O")
        b = circular_fingerprint("CC(=O)Oc1ccccc1C(=O)O")
        assert a == b

    def test_tanimoto_self_is_one(self):
        fp = circular_fingerprint("CCN")
        assert tanimoto(fp, fp) == 1.0

    def test_tanimoto_disjoint_is_zero(self):
        assert tanimoto(0b1100, 0b0011) == 0.0

    def test_atom_order_invariance(self):
        assert circular_fingerprint("OCC") == circular_fingerprint("CCO")
        assert circular_fingerprint("c1ccccc1CC") == circular_fingerprint("CCc1ccccc1")

    def test_invalid_smiles_raises(self):
        with pytest.raises(InvalidSmilesError):
            circular_fingerprint("notasmiles!!")

    @given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=2**64 - 1))
    def test_tanimoto_bounds_and_symmetry(self, a, b):
        sim = tanimoto(a, b)
        assert 0.0 <= sim <= 1.0
        assert sim == tanimoto(b, a)

    @settings(max_examples=25)
    @given(st.sampled_from(["CCO", "c1ccccc1", "CC(C)CC", "CCNCC", "CCSC", "CC(=O)O"]))
    def test_similar_molecules_share_bits(self, smiles):
        fp = circular_fingerprint(smiles)
        assert fp != 0
        assert tanimoto(fp, circular_fingerprint(smiles)) == 1.0


class TestSdf:
    def test_round_trip(self):
        provider = EmbeddedConformerProvider()
        rec = provider.conformer("CC(=O)Oc1ccccc1C(=O)O", "aspirin")
        text = write_sdf(rec)
        back = parse_sdf(text)[0]
        assert back.title == "aspirin"
        assert len(back.molecule.atoms) == len(rec.molecule.atoms)
        assert np.allclose(back.coords, rec.coords, atol=1e-3)
        assert sum(a.aromatic for a in back.molecule.atoms) == 6

    def test_charges_preserved(self):
        provider = EmbeddedConformerProvider()
        rec = provider.conformer("C[N+](=O)[O-]", "nitro")
        back = parse_sdf(write_sdf(rec))[0]
        charges = sorted(a.formal_charge for a in back.molecule.atoms)
        assert charges == [-1, 0, 0, 1]


class TestConformers:
    def test_embedded_deterministic(self):
        provider = EmbeddedConformerProvider()
        a = provider.conformer("CCOc1ccccc1")
        b = provider.conformer("CCOc1ccccc1")
        assert np.allclose(a.coords, b.coords)

    def test_embedded_bond_lengths_sane(self):
        rec = EmbeddedConformerProvider().conformer("CC(C)Cc1ccc(cc1)C(C)C(=O)O")  # ibuprofen
        lengths = [
            np.linalg.norm(rec.coords[b.a] - rec.coords[b.b]) for b in rec.molecule.bonds
        ]
        assert min(lengths) > 0.8
        assert max(lengths) < 3.0

    def test_single_atom(self):
        rec = EmbeddedConformerProvider().conformer("C")
        assert rec.coords.shape == (1, 3)

    def test_sdf_provider_lookup(self, tmp_path):
        rec = EmbeddedConformerProvider().conformer("CCN", "cmp1")
        write_sdf(rec, tmp_path / "cmp1.sdf")
        provider = SdfConformerProvider(tmp_path)
        found = provider.conformer("CCN", "cmp1")
        assert found is not None and len(found.molecule.atoms) == 3
        assert provider.conformer("CCN", "other") is None

    def test_chain_falls_through_to_embedder(self, tmp_path):
        chain = default_conformer_provider(conformer_dir=tmp_path)
        rec = chain.conformer("CCN", "missing")
        assert rec is not None and len(rec.molecule.atoms) == 3

    def test_empty_chain_errors(self):
        with pytest.raises(ConformerError):
            ChainedConformerProvider([]).conformer("CC")

    def test_rings_stay_within_edge_cutoff(self):
        rec = EmbeddedConformerProvider().conformer("c1ccc2ccccc2c1")
        lengths = [
            np.linalg.norm(rec.coords[b.a] - rec.coords[b.b]) for b in rec.molecule.bonds
        ]
        assert max(lengths) < 4.5  # graph stays connected under the distance rule

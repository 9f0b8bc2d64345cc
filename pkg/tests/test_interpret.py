import numpy as np
import pytest
import torch

from scope_dti.core import CompoundRecord, Corpus, InteractionRecord, ProteinRecord
from scope_dti.interpret import (
    AttentionVector,
    OpticsParams,
    UmapParams,
    accuracy_vs_count,
    cluster_protein,
    cluster_purity,
    extract_attention,
    l1_normalize,
    umap_project,
)
from scope_dti.models import ScopeModel
from scope_dti.synthetic import SyntheticStructureProvider
from scope_dti.training import FeatureStore

from conftest import tiny_model_config


def attention_blobs(seed=5, n_per=100, dim=64):
    """Nonnegative residue-profile-like vectors: mass on 5..15 vs 40..50."""
    rng = np.random.default_rng(seed)

    def blob(center):
        base = np.zeros(dim)
        base[center : center + 10] = 1.0
        return np.abs(base + rng.normal(scale=0.15, size=(n_per, dim)))

    x = np.vstack([blob(5), blob(40)])
    truth = np.array([0] * n_per + [1] * n_per)
    perm = rng.permutation(2 * n_per)
    return x[perm], truth[perm]


@pytest.fixture(scope="module")
def model_and_store(small_corpus):
    torch.manual_seed(0)
    model = ScopeModel(tiny_model_config())
    model.eval()
    store = FeatureStore(small_corpus, structure_provider=SyntheticStructureProvider(0))
    return model, store


class TestExtractAttention:
    def test_vector_length_is_residue_count(self, model_and_store, small_corpus):
        model, store = model_and_store
        pairs = list(small_corpus.interactions)
        vectors = extract_attention(model, pairs, store)
        for vec in vectors:
            expected = len(small_corpus.proteins[vec.protein_id].sequence)
            assert vec.vector.shape == (expected,)

    def test_pooled_drug_single_row_collapse(self, model_and_store, small_corpus):
        # N=1 drug row: the vector must equal the head-averaged single row of I
        model, store = model_and_store
        pairs = list(small_corpus.interactions[:1])
        from scope_dti.training import make_pair_batch

        batch = make_pair_batch(pairs, store, with_labels=False)
        with torch.no_grad():
            _, att, d_mask, p_mask = model(batch, return_attention=True)
        assert int(d_mask[0].sum()) == 1
        expected = att[0].mean(dim=0)[0, : int(p_mask[0].sum())].numpy()
        vec = extract_attention(model, pairs, store)[0]
        assert np.allclose(vec.vector, expected, atol=1e-6)

    def test_zero_weight_head_zero_vector(self, small_corpus):
        torch.manual_seed(0)
        model = ScopeModel(tiny_model_config())
        model.eval()
        with torch.no_grad():
            model.ban.q.zero_()
        store = FeatureStore(small_corpus, structure_provider=SyntheticStructureProvider(0))
        vec = extract_attention(model, list(small_corpus.interactions[:1]), store)[0]
        assert np.allclose(vec.vector, 0.0)

    def test_nonnegative_with_relu(self, model_and_store, small_corpus):
        _, store = model_and_store
        torch.manual_seed(1)
        model = ScopeModel(tiny_model_config())
        model.eval()
        with torch.no_grad():
            model.ban.q.abs_()
        vectors = extract_attention(model, list(small_corpus.interactions), store)
        for vec in vectors:
            assert (vec.vector >= 0).all()

    def test_alternate_embeddings_exposed(self, model_and_store, small_corpus):
        model, store = model_and_store
        pairs = list(small_corpus.interactions[:1])
        joint = extract_attention(model, pairs, store, embedding_kind="joint")[0]
        pooled = extract_attention(model, pairs, store, embedding_kind="pooled")[0]
        assert joint.vector.shape == (model.config.latent_dim,)
        assert pooled.vector.shape == (model.config.latent_dim // model.config.pool_window,)

    def test_mlp_backbone_rejected(self, small_corpus):
        model = ScopeModel(tiny_model_config(backbone="mlp"))
        store = FeatureStore(small_corpus, structure_provider=SyntheticStructureProvider(0))
        with pytest.raises(ValueError):
            extract_attention(model, list(small_corpus.interactions[:1]), store)

    def test_dense_map_export(self, model_and_store, small_corpus, tmp_path):
        from scope_dti.interpret import export_attention_maps

        model, store = model_and_store
        pairs = list(small_corpus.interactions[:2])
        written = export_attention_maps(model, pairs, store, tmp_path)
        assert len(written) == 2
        block = np.loadtxt(written[0], delimiter="\t")
        m = len(small_corpus.proteins[pairs[0].protein_id].sequence)
        assert block.shape == (m,) or block.shape[-1] == m  # 1 drug row collapses to (m,)


class TestClusterProtein:
    def test_two_blobs_recovered(self):
        x, truth = attention_blobs()
        assignment = cluster_protein(x, UmapParams(seed=0), OpticsParams())
        assert assignment.n_clusters() == 2
        assert cluster_purity(assignment.cluster_ids, truth) >= 0.95

    def test_identical_vectors_one_cluster(self):
        x = np.tile(np.linspace(0, 1, 16), (12, 1))
        assignment = cluster_protein(x)
        assert assignment.n_clusters() == 1
        assert (assignment.cluster_ids == 0).all()

    def test_below_min_samples_all_noise_with_warning(self):
        x = np.random.default_rng(0).normal(size=(3, 8))
        with pytest.warns(UserWarning, match="min_samples"):
            assignment = cluster_protein(x, optics_params=OpticsParams(min_samples=5))
        assert (assignment.cluster_ids == -1).all()

    def test_deterministic_under_seed(self):
        x, _ = attention_blobs(seed=7)
        a = cluster_protein(x, UmapParams(seed=3))
        b = cluster_protein(x, UmapParams(seed=3))
        assert np.array_equal(a.cluster_ids, b.cluster_ids)
        assert np.allclose(a.coordinates, b.coordinates)

    def test_attention_vector_input(self):
        x, _ = attention_blobs(n_per=20)
        vectors = [
            AttentionVector("P1", f"C{i}", row, 0.5, 1) for i, row in enumerate(x)
        ]
        assignment = cluster_protein(vectors)
        assert assignment.compound_ids[0] == "C0"
        rows = assignment.to_rows(vectors)
        assert set(rows[0]) == {"compound_id", "cluster", "x", "y", "predicted_p", "label"}


class TestUmap:
    def test_preserves_blob_separation(self):
        x, truth = attention_blobs(seed=11)
        emb = umap_project(l1_normalize(x), UmapParams(seed=0))
        d_within = np.linalg.norm(emb[truth == 0] - emb[truth == 0].mean(0), axis=1).mean()
        d_between = np.linalg.norm(emb[truth == 0].mean(0) - emb[truth == 1].mean(0))
        assert d_between > 4 * d_within

    def test_tiny_input_returns_zeros(self):
        emb = umap_project(np.zeros((2, 4)))
        assert emb.shape == (2, 2)


class TestAccuracyVsCount:
    def test_hand_computed_five_protein_fixture(self):
        # fixture: five proteins; binned means computed by hand below
        pairs, scores = [], []
        spec = {
            "P1": [(0.9, 1), (0.8, 1)],               # all correct at t=0.5: acc 1.0
            "P2": [(0.2, 0), (0.9, 1), (0.1, 1)],      # 2/3 correct: acc 0.6667
            "P3": [(0.7, 0)],                          # wrong: acc 0.0
            "P4": [(0.6, 1), (0.3, 0), (0.2, 0)],      # all correct: acc 1.0
            "P5": [(0.45, 0), (0.55, 1)],              # all correct: acc 1.0
        }
        for pid, rows in spec.items():
            for score, label in rows:
                pairs.append(InteractionRecord(pid, f"C{len(pairs)}", label, "s"))
                scores.append(score)
        train_counts = {"P1": 1, "P2": 2, "P3": 4, "P4": 5, "P5": 16}
        curve = accuracy_vs_count(pairs, np.array(scores), train_counts, bin_edges=[0, 2, 8, 32])
        by_pid = {p.protein_id: p for p in curve.points}
        assert by_pid["P1"].accuracy == 1.0
        assert by_pid["P2"].accuracy == pytest.approx(2 / 3)
        assert by_pid["P3"].accuracy == 0.0
        assert by_pid["P4"].accuracy == 1.0
        assert by_pid["P5"].accuracy == 1.0
        # bins: [0,2): P1 -> 1.0 ; [2,8): P2,P3,P4 -> mean (2/3+0+1)/3 ; [8,32): P5 -> 1.0
        assert len(curve.bins) == 3
        assert curve.bins[0].mean_accuracy == pytest.approx(1.0)
        assert curve.bins[1].mean_accuracy == pytest.approx((2 / 3 + 0.0 + 1.0) / 3)
        assert curve.bins[2].mean_accuracy == pytest.approx(1.0)

    def test_protein_without_test_pairs_excluded(self):
        pairs = [
            InteractionRecord("P1", "C0", 1, "s"),
            InteractionRecord("P1", "C1", 0, "s"),
        ]
        curve = accuracy_vs_count(pairs, np.array([0.9, 0.1]), {"P1": 3, "P_unseen": 10})
        assert [p.protein_id for p in curve.points] == ["P1"]

    def test_all_correct_protein(self):
        pairs = [
            InteractionRecord("P1", "C0", 1, "s"),
            InteractionRecord("P1", "C1", 0, "s"),
            InteractionRecord("P2", "C2", 1, "s"),
            InteractionRecord("P2", "C3", 0, "s"),
        ]
        curve = accuracy_vs_count(pairs, np.array([0.9, 0.1, 0.8, 0.2]), {"P1": 2, "P2": 2})
        assert all(p.accuracy == 1.0 for p in curve.points)

    def test_tsv_output(self):
        pairs = [
            InteractionRecord("P1", "C0", 1, "s"),
            InteractionRecord("P2", "C1", 0, "s"),
        ]
        curve = accuracy_vs_count(pairs, np.array([0.9, 0.1]), {"P1": 1, "P2": 1})
        lines = curve.to_tsv().splitlines()
        assert lines[0] == "protein_id\tn_known\taccuracy"
        assert len(lines) == 3

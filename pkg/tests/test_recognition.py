"""
Tests for recognition backends and similarity scoring.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.augmentation import gaussian_blur, kernel_sigma
from src.data_ingestion.synthetic_faces import GeneratorConfig, SyntheticFaceGenerator
from src.models import Pair, PairList, Polarity, SimilarityScore
from src.recognition import (
    EMBEDDING_SIZE,
    DegenerateEmbeddingError,
    DistanceBackend,
    GalleryEntry,
    PrecomputedEmbeddingBackend,
    RecognitionError,
    SyntheticOracleEmbedder,
    best_match_score,
    cosine_similarity,
    normalize_embedding,
    normalize_score,
    oracle_embed,
    pair_similarity,
    self_similarity,
)
from src.storage.tensor_archive import write_archive


def unit(*values):
    return normalize_embedding(np.array(values, dtype=np.float64))


def textured(seed, size=64):
    return np.random.default_rng(seed).integers(0, 256, size=(size, size, 3), dtype=np.uint8)


class TestEmbeddings:
    """Test cases for embedding normalization and the oracle."""

    def test_normalized_and_padded(self):
        """Test embeddings are unit length and padded to 512."""
        embedding = normalize_embedding(np.array([3.0, 4.0]))
        assert embedding.shape == (EMBEDDING_SIZE,)
        assert embedding[:2] == pytest.approx([0.6, 0.8])
        assert np.linalg.norm(embedding) == pytest.approx(1.0)

    def test_zero_vector_degenerate(self):
        """Test a zero vector cannot be normalized."""
        with pytest.raises(DegenerateEmbeddingError, match="degenerate embedding"):
            normalize_embedding(np.zeros(8))

    def test_too_long(self):
        """Test vectors longer than the embedding size are rejected."""
        with pytest.raises(RecognitionError, match="more than 512"):
            normalize_embedding(np.ones(513))

    def test_oracle_constant_image(self):
        """Test a constant image has no oracle embedding."""
        with pytest.raises(DegenerateEmbeddingError, match="constant image"):
            oracle_embed(np.full((32, 32, 3), 90, np.uint8))

    def test_oracle_deterministic_unit(self):
        """Test the oracle is deterministic and unit norm."""
        image = textured(1)
        a, b = oracle_embed(image), oracle_embed(image.copy())
        assert np.array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0)
        assert not a[256:].any()

    def test_oracle_brightness_invariant(self):
        """Test a uniform brightness shift leaves the oracle embedding unchanged."""
        image = textured(2).astype(np.int32) // 2
        shifted = image + 40
        a = oracle_embed(image.astype(np.uint8))
        b = oracle_embed(shifted.astype(np.uint8))
        assert cosine_similarity(a, b).value == pytest.approx(1.0, abs=1e-6)

    def test_blur_lowers_self_similarity(self):
        """Test a heavier blur lowers the oracle self similarity."""
        import cv2
        image = textured(3, 112)
        backend = SyntheticOracleEmbedder()
        light = self_similarity(backend, image, cv2.GaussianBlur(image, (5, 5), 1.0)).value
        heavy = self_similarity(backend, image, cv2.GaussianBlur(image, (31, 31), 5.0)).value
        assert heavy < light <= 1.0


    @pytest.mark.parametrize('seed', [0, 1, 2])
    def test_similarity_falls_as_blur_grows(self, seed):
        """Test oracle self similarity never rises as the blur kernel grows from 3 to 21."""
        generator = SyntheticFaceGenerator(GeneratorConfig(num_identities=1, images_per_identity=1, seed=seed))
        image = generator.generate_sample(0, 0).image
        reference = oracle_embed(image)
        similarities = [
            cosine_similarity(reference, oracle_embed(gaussian_blur(image, k, kernel_sigma(k)))).value
            for k in range(3, 22, 2)
        ]
        assert max(np.diff(similarities)) <= 1e-6
        assert similarities[-1] < similarities[0]


class TestBackends:
    """Test cases for backend adapters."""

    def test_distance_adapter(self):
        """Test the distance adapter reports 1 - s with distance polarity."""
        backend = DistanceBackend(SyntheticOracleEmbedder())
        a, b = unit(1.0, 0.0), unit(0.6, 0.8)
        score = backend.score(a, b)
        assert score.polarity == Polarity.DISTANCE
        assert score.value == pytest.approx(0.4)
        assert backend.name == 'oracle_distance'

    def test_distance_adapter_requires_similarity(self):
        """Test distance backends cannot be wrapped twice."""
        with pytest.raises(RecognitionError, match="wraps similarity backends only"):
            DistanceBackend(DistanceBackend(SyntheticOracleEmbedder()))

    def test_precomputed_lookup(self, tmp_path):
        """Test the precomputed backend serves archived embeddings by key."""
        path = str(tmp_path / 'emb.fqta')
        write_archive(path, {'a.png': np.array([1.0, 0.0], np.float32),
                             'a.png@blur': np.array([1.0, 1.0], np.float32)})
        backend = PrecomputedEmbeddingBackend.from_archive(path, name='arcface')
        assert 'a.png@blur' in backend
        image = np.zeros((4, 4, 3), np.uint8)
        score = backend.score(backend.embed(image, 'a.png'), backend.embed(image, 'a.png@blur'))
        assert score.value == pytest.approx(np.sqrt(0.5))
        with pytest.raises(RecognitionError, match="no precomputed embedding for 'b.png'"):
            backend.embed(image, 'b.png')
        with pytest.raises(RecognitionError, match="needs a sample key"):
            backend.embed(image)


class TestScoring:
    """Test cases for scoring helpers."""

    def setup_method(self):
        self.gallery = [
            GalleryEntry('a', 'alice', unit(1.0, 0.0)),
            GalleryEntry('b', 'alice', unit(0.8, 0.6)),
            GalleryEntry('c', 'bob', unit(0.8, 0.6)),
            GalleryEntry('d', 'bob', unit(0.0, 1.0)),
        ]

    def test_normalize_score(self):
        """Test distances flip sign and similarities pass through."""
        assert normalize_score(SimilarityScore(0.3)) == 0.3
        assert normalize_score(SimilarityScore(1.12, Polarity.DISTANCE)) == -1.12

    def test_best_match_excludes_own_record(self):
        """Test a query never matches its own source record."""
        match = best_match_score(unit(1.0, 0.0), self.gallery, 'a')
        assert match.sample_id == 'b'
        assert match.score.value == pytest.approx(0.8)

    def test_best_match_first_wins_ties(self):
        """Test ties go to the first gallery entry."""
        match = best_match_score(unit(0.8, 0.6), self.gallery, 'x')
        assert match.sample_id == 'b'

    def test_best_match_with_distance_backend(self):
        """Test distance backends pick the smallest distance."""
        backend = DistanceBackend(SyntheticOracleEmbedder())
        match = best_match_score(unit(0.0, 1.0), self.gallery, 'd', backend)
        assert match.sample_id == 'b'
        assert match.score.value == pytest.approx(0.4)

    def test_empty_gallery(self):
        """Test a gallery holding only the query's own record fails."""
        with pytest.raises(RecognitionError, match="empty gallery"):
            best_match_score(unit(1.0, 0.0), self.gallery[:1], 'a')

    def test_pair_similarity(self):
        """Test matched and mismatched pair means."""
        embeddings = {e.sample_id: e.embedding for e in self.gallery}
        pairs = PairList(pairs=[Pair('a', 'b', True), Pair('a', 'd', False), Pair('a', 'zz', False)])
        result = pair_similarity(SyntheticOracleEmbedder(), pairs, embeddings)
        assert result['matched'] == pytest.approx(0.8)
        assert result['mismatched'] == pytest.approx(0.0)
        assert result['mismatched_n'] == 1

    @settings(max_examples=100, deadline=None)
    @given(values=st.lists(st.floats(min_value=-1, max_value=1), min_size=2, max_size=2).filter(
        lambda v: abs(v[0]) + abs(v[1]) > 1e-3))
    def test_distance_preserves_order(self, values):
        """Test normalization makes distance scores order like similarities."""
        backend = DistanceBackend(SyntheticOracleEmbedder())
        query = unit(1.0, 0.0)
        other = unit(*values)
        similarity = cosine_similarity(query, other).value
        distance = normalize_score(backend.score(query, other))
        assert distance == pytest.approx(similarity - 1.0, abs=1e-12)

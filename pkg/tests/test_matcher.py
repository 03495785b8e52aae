"""Frame normalization, tail trimming, key-frame selection, and matching."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speechservo.errors import (
    EmptyTemplateSet,
    InconsistentTraining,
    MixedDimensions,
    TooFewFrames,
    TooFewFramesForM,
)
from speechservo.lpcc import LpccSequence
from speechservo.matcher import (
    DiffTrace,
    NormalizedFeatures,
    Template,
    build_template,
    default_reject_threshold,
    delta_threshold,
    frame_diffs,
    match,
    normalize,
    reduce_to_template,
    select_key_frames,
    template_distance,
    train,
    trim_tail,
)


def _sequence(vectors):
    vectors = np.asarray(vectors, dtype=np.float64)
    return LpccSequence(vectors=vectors,
                        zero_frames=np.zeros(vectors.shape[0], dtype=bool))


def _random_template(rng, label, p=12, m=8):
    return Template(label=label, key_features=rng.uniform(-1, 1, size=(p, m)),
                    m_segments=m)


class TestNormalize:
    def test_columns_become_unit_length(self):
        feats = _sequence([[3.0, 4.0], [1.0, 0.0]])
        s = normalize(feats).s
        assert s[:, 0].tolist() == [0.6, 0.8]
        assert s[:, 1].tolist() == [1.0, 0.0]

    def test_zero_frames_pass_through(self):
        feats = _sequence([[0.0, 0.0], [1.0, 2.0]])
        s = normalize(feats).s
        assert s[:, 0].tolist() == [0.0, 0.0]

    def test_needs_two_frames(self):
        with pytest.raises(TooFewFrames):
            normalize(_sequence([[1.0, 2.0]]))

    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=2**32 - 1))
    def test_norms_are_one_or_zero(self, n_frames, seed):
        rng = np.random.default_rng(seed)
        feats = _sequence(rng.uniform(-5, 5, size=(n_frames, 6)))
        norms = np.linalg.norm(normalize(feats).s, axis=0)
        assert np.allclose(norms, 1.0, rtol=1e-12)

    def test_orientation_is_frames_as_columns(self):
        feats = _sequence([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        s = normalize(feats).s
        assert s.shape == (3, 2)


class TestFrameDiffs:
    def test_identical_frames_have_zero_trace(self):
        s = NormalizedFeatures(np.ones((4, 5)) / 2.0)
        trace = frame_diffs(s)
        assert trace.t.tolist() == [0.0] * 4
        assert trace.mean_t == 0.0
        assert trace.n_frames == 5

    def test_orthogonal_basis_frames(self):
        s = NormalizedFeatures(np.eye(2))
        assert frame_diffs(s).t.tolist() == [2.0]

    def test_matches_plain_loop(self):
        rng = np.random.default_rng(20)
        s = NormalizedFeatures(rng.uniform(-1, 1, size=(6, 9)))
        trace = frame_diffs(s)
        for j in range(8):
            want = sum(abs(s.s[i, j] - s.s[i, j + 1]) for i in range(6))
            assert trace.t[j] == pytest.approx(want, rel=1e-12)
        assert trace.mean_t == pytest.approx(float(np.mean(trace.t)))


class TestTrimTail:
    def test_drops_trailing_spikes_only(self):
        trace = DiffTrace(t=np.array([0.1, 0.1, 0.9]),
                          mean_t=float(np.mean([0.1, 0.1, 0.9])), n_frames=4)
        out = trim_tail(trace)
        assert out.t.tolist() == [0.1, 0.1]
        assert out.n_frames == 3
        assert out.mean_t == trace.mean_t

    def test_uniform_trace_is_untouched(self):
        trace = DiffTrace(t=np.full(5, 2.0), mean_t=2.0, n_frames=6)
        out = trim_tail(trace)
        assert out.t.tolist() == [2.0] * 5

    def test_interior_spike_survives(self):
        trace = DiffTrace(t=np.array([0.1, 0.9, 0.1]),
                          mean_t=float(np.mean([0.1, 0.9, 0.1])), n_frames=4)
        out = trim_tail(trace)
        assert out.t.tolist() == [0.1, 0.9, 0.1]

    def test_floor_stops_runaway_trim(self):
        trace = DiffTrace(t=np.array([1.0, 10.0, 10.0]), mean_t=7.0, n_frames=4)
        out = trim_tail(trace, min_frames=3)
        assert out.n_frames == 3
        assert out.t.tolist() == [1.0, 10.0]

    def test_mean_is_fixed_before_trimming_starts(self):
        # after dropping 0.9 the comparison still uses the original mean
        # (0.4667), so 0.3 survives; a recomputed mean (0.25) would eat it
        t = np.array([0.2, 0.3, 0.9])
        trace = DiffTrace(t=t, mean_t=float(t.mean()), n_frames=4)
        out = trim_tail(trace)
        assert out.t.tolist() == [0.2, 0.3]
        assert out.mean_t == trace.mean_t


class TestDeltaThreshold:
    def test_uniform_hand_case(self):
        trace = DiffTrace(t=np.ones(4), mean_t=1.0, n_frames=5)
        assert delta_threshold(trace, 2) == 2.0
        assert delta_threshold(trace, 4) == 1.0

    def test_too_few_frames_for_segment_count(self):
        trace = DiffTrace(t=np.ones(4), mean_t=1.0, n_frames=5)
        with pytest.raises(TooFewFramesForM):
            delta_threshold(trace, 5)

    def test_total_change_split_evenly(self):
        rng = np.random.default_rng(21)
        t = rng.uniform(0, 2, size=20)
        trace = DiffTrace(t=t, mean_t=float(t.mean()), n_frames=21)
        assert delta_threshold(trace, 8) == pytest.approx(float(np.sum(t)) / 8)


class TestSelectKeyFrames:
    def test_uniform_trace_spaces_keys_evenly(self):
        trace = DiffTrace(t=np.ones(8), mean_t=1.0, n_frames=9)
        keys = select_key_frames(trace, 4, 2.0)
        assert keys.tolist() == [0, 2, 4, 6]

    def test_threshold_reached_exactly_still_triggers(self):
        # accumulated change equal to the budget starts a new segment
        trace = DiffTrace(t=np.ones(8), mean_t=1.0, n_frames=9)
        assert select_key_frames(trace, 8, 1.0).tolist() == list(range(8))

    def test_front_loaded_trace_pads_with_last_frame(self):
        trace = DiffTrace(t=np.array([1.0, 0, 0, 0, 0]), mean_t=0.2, n_frames=6)
        keys = select_key_frames(trace, 4, 0.25)
        assert keys.tolist() == [0, 1, 5, 5]

    def test_zero_budget_takes_leading_frames(self):
        trace = DiffTrace(t=np.zeros(6), mean_t=0.0, n_frames=7)
        keys = select_key_frames(trace, 4, 0.0)
        assert keys.tolist() == [0, 1, 2, 3]

    def test_first_key_is_always_frame_zero(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            n = int(rng.integers(10, 40))
            t = rng.uniform(0, 1, size=n - 1)
            trace = DiffTrace(t=t, mean_t=float(t.mean()), n_frames=n)
            m = int(rng.choice([4, 8]))
            delta = float(np.sum(t)) / m
            keys = select_key_frames(trace, m, delta)
            assert len(keys) == m
            assert keys[0] == 0
            assert np.all(np.diff(keys) >= 0)
            assert keys[-1] < n

    def test_overshoot_is_discarded_at_reset(self):
        # one huge diff only buys a single key, not several
        trace = DiffTrace(t=np.array([9.0, 1.0, 1.0]), mean_t=11 / 3, n_frames=4)
        keys = select_key_frames(trace, 3, 2.0)
        assert keys.tolist() == [0, 1, 3]


class TestBuildTemplate:
    def test_one_key_per_frame_copies_matrix(self):
        rng = np.random.default_rng(23)
        s = NormalizedFeatures(rng.uniform(-1, 1, size=(5, 4)))
        tpl = build_template(s, [0, 1, 2, 3], "w")
        assert np.array_equal(tpl.key_features, s.s)

    def test_segments_average_their_columns(self):
        c0 = np.array([1.0, 0.0])
        c1 = np.array([0.0, 1.0])
        s = NormalizedFeatures(np.column_stack([c0, c0, c1, c1]))
        tpl = build_template(s, [0, 2], "w")
        assert tpl.key_features[:, 0].tolist() == c0.tolist()
        assert tpl.key_features[:, 1].tolist() == c1.tolist()

    def test_padded_duplicate_keys_fall_back_to_single_column(self):
        rng = np.random.default_rng(24)
        s = NormalizedFeatures(rng.uniform(-1, 1, size=(3, 4)))
        tpl = build_template(s, [0, 2, 3, 3], "w")
        assert np.array_equal(tpl.key_features[:, 2], s.s[:, 3])
        assert np.array_equal(tpl.key_features[:, 3], s.s[:, 3])

    def test_matches_plain_loop(self):
        rng = np.random.default_rng(25)
        s = NormalizedFeatures(rng.uniform(-1, 1, size=(4, 10)))
        keys = [0, 3, 7]
        tpl = build_template(s, keys, "w")
        bounds = [(0, 3), (3, 7), (7, 10)]
        for k, (lo, hi) in enumerate(bounds):
            want = s.s[:, lo:hi].mean(axis=1)
            assert np.allclose(tpl.key_features[:, k], want, rtol=1e-12)

    def test_invalid_keys_rejected(self):
        s = NormalizedFeatures(np.ones((2, 4)))
        with pytest.raises(ValueError):
            build_template(s, [1, 2], "w")
        with pytest.raises(ValueError):
            build_template(s, [0, 4], "w")
        with pytest.raises(ValueError):
            build_template(s, [0, 3, 2], "w")


class TestDistance:
    def test_self_distance_is_zero(self):
        rng = np.random.default_rng(26)
        tpl = _random_template(rng, "x")
        assert template_distance(tpl, tpl) == 0.0

    def test_hand_case(self):
        a = Template("a", np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
        b = Template("b", np.array([[1.0, 1.0], [0.0, 2.0]]), 2)
        assert template_distance(a, b) == 4.0

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(27)
        for _ in range(300):
            x = _random_template(rng, "x", p=6, m=4)
            y = _random_template(rng, "y", p=6, m=4)
            z = _random_template(rng, "z", p=6, m=4)
            dxy = template_distance(x, y)
            dyx = template_distance(y, x)
            assert dxy >= 0.0
            assert dxy == dyx
            assert template_distance(x, x) == 0.0
            assert template_distance(x, z) <= dxy + template_distance(y, z) + 1e-12

    def test_shape_mismatch_rejected(self):
        a = Template("a", np.ones((3, 2)), 2)
        b = Template("b", np.ones((3, 4)), 4)
        with pytest.raises(MixedDimensions):
            template_distance(a, b)


class TestReduction:
    def _speechlike(self, seed, n_frames=30, order=12):
        rng = np.random.default_rng(seed)
        walk = np.cumsum(rng.uniform(-0.3, 0.3, size=(n_frames, order)), axis=0)
        return _sequence(walk + rng.uniform(0.2, 1.0, size=order))

    def test_deterministic(self):
        feats = self._speechlike(30)
        a = reduce_to_template(feats, 8, "w")
        b = reduce_to_template(feats, 8, "w")
        assert np.array_equal(a.key_features, b.key_features)
        assert a.m_segments == b.m_segments == 8

    def test_segment_counts_supported(self):
        feats = self._speechlike(31)
        for m in (8, 16):
            tpl = reduce_to_template(feats, m, "w")
            assert tpl.key_features.shape == (12, m)

    def test_feature_scale_invariance(self):
        feats = self._speechlike(32)
        base = reduce_to_template(feats, 8, "w")
        for k in (0.1, 10.0):
            scaled = LpccSequence(vectors=feats.vectors * k,
                                  zero_frames=feats.zero_frames)
            tpl = reduce_to_template(scaled, 8, "w")
            assert np.allclose(tpl.key_features, base.key_features,
                               rtol=1e-9, atol=1e-12)

    def test_too_few_frames_for_segments(self):
        feats = self._speechlike(33, n_frames=8)
        with pytest.raises(TooFewFramesForM):
            reduce_to_template(feats, 8, "w")

    def test_diff_mean_reduction_shape(self):
        tpl = reduce_to_template(self._speechlike(34), 8, "w", reduction="diff_mean")
        assert tpl.key_features.shape == (1, 8)

    def test_unknown_reduction_rejected(self):
        with pytest.raises(ValueError):
            reduce_to_template(self._speechlike(35), 8, "w", reduction="median")


class TestTrain:
    def test_identical_utterances_average_to_themselves(self):
        feats = TestReduction()._speechlike(40)
        tpl = train([feats] * 4, "w", 8)
        single = reduce_to_template(feats, 8, "w")
        assert np.allclose(tpl.key_features, single.key_features, rtol=1e-12)
        assert tpl.trained_from == 4

    def test_needs_at_least_two(self):
        feats = TestReduction()._speechlike(41)
        with pytest.raises(ValueError):
            train([feats], "w", 8)

    def test_inconsistent_set_rejected(self):
        a = TestReduction()._speechlike(42)
        b = TestReduction()._speechlike(43)
        with pytest.raises(InconsistentTraining):
            train([a, a, b, b], "w", 8, consistency_limit=0.5)

    def test_mean_of_candidates(self):
        xs = [TestReduction()._speechlike(44 + i) for i in range(3)]
        tpl = train(xs, "w", 8, consistency_limit=1e9)
        want = np.mean(
            [reduce_to_template(x, 8, "w").key_features for x in xs], axis=0)
        assert np.allclose(tpl.key_features, want, rtol=1e-12)


class TestMatch:
    def test_exact_copy_wins_with_zero_distance(self):
        rng = np.random.default_rng(50)
        vocab = [_random_template(rng, lab) for lab in ("down", "up")]
        query = Template("query", vocab[1].key_features.copy(), 8)
        result = match(query, vocab)
        assert result.label == "up"
        assert result.distance == 0.0
        assert not result.rejected

    def test_empty_vocabulary_rejected(self):
        rng = np.random.default_rng(51)
        with pytest.raises(EmptyTemplateSet):
            match(_random_template(rng, "q"), [])

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(52)
        vocab = [_random_template(rng, lab, p=6, m=4) for lab in "abcde"]
        for _ in range(100):
            q = _random_template(rng, "q", p=6, m=4)
            result = match(q, vocab, reject_threshold=1e9)
            want = min((template_distance(q, t), t.label) for t in vocab)
            assert result.label == want[1]
            assert result.distance == want[0]

    def test_ties_break_lexicographically(self):
        kf = np.ones((4, 8))
        vocab = [Template("zeta", kf, 8), Template("alpha", kf.copy(), 8)]
        result = match(Template("q", np.zeros((4, 8)), 8), vocab,
                       reject_threshold=1e9)
        assert result.label == "alpha"

    def test_distant_query_is_rejected_with_distances_reported(self):
        vocab = [Template("up", np.zeros((4, 8)), 8)]
        q = Template("q", np.full((4, 8), 2.0), 8)
        result = match(q, vocab)
        assert result.rejected
        assert result.label is None
        assert result.distance == 64.0
        assert result.all_distances == {"up": 64.0}

    def test_default_threshold_scales_with_segments(self):
        assert default_reject_threshold(8) == 10.0
        assert default_reject_threshold(16) == 20.0

    def test_distance_at_threshold_is_accepted(self):
        vocab = [Template("up", np.zeros((1, 8)), 8)]
        q = Template("q", np.full((1, 8), 1.25), 8)
        assert match(q, vocab).label == "up"


class TestEndToEndOnCorpus:
    def test_self_recognition_is_perfect(self, corpus_features, trained_vocab, session_cfg):
        _, templates = trained_vocab
        for label, feats in corpus_features.items():
            for f in feats:
                q = reduce_to_template(f, session_cfg.m, "query")
                result = match(q, templates.values(),
                               reject_threshold=session_cfg.reject_threshold)
                assert result.label == label

    def test_noisy_training_stays_close_to_clean_candidate(self, tmp_path, session_cfg):
        from speechservo.audio_io import save_audio
        from speechservo.pipeline import utterance_features
        from speechservo.synth import add_noise_snr, synth_utterance

        clean = synth_utterance("up", 0)
        clean_path = tmp_path / "clean.wav"
        save_audio(clean, clean_path)
        clean_tpl = reduce_to_template(
            utterance_features(clean_path, session_cfg), session_cfg.m, "up")

        noisy_feats = []
        for s in range(4):
            noisy = add_noise_snr(clean, 30.0, seed=1000 + s)
            p = tmp_path / f"n{s}.wav"
            save_audio(noisy, p)
            noisy_feats.append(utterance_features(p, session_cfg))
        tpl = train(noisy_feats, "up", session_cfg.m,
                    consistency_limit=session_cfg.consistency_limit)
        assert tpl.trained_from == 4
        # observed 1.26 on the frozen corpus; anything near the reject
        # threshold would mean noise is dominating the template
        assert template_distance(tpl, clean_tpl) < 2.5

    def test_scaled_query_features_keep_their_label(self, corpus_features,
                                                    trained_vocab, session_cfg):
        _, templates = trained_vocab
        feats = corpus_features["left_roll"][0]
        for k in (0.1, 1.0, 10.0):
            scaled = LpccSequence(vectors=feats.vectors * k,
                                  zero_frames=feats.zero_frames)
            q = reduce_to_template(scaled, session_cfg.m, "query")
            result = match(q, templates.values(),
                           reject_threshold=session_cfg.reject_threshold)
            assert result.label == "left_roll"

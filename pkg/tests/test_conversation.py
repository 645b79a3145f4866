import pytest

from diarkit.conversation import (
    ConversationScript,
    DurationMismatchError,
    EmptyTextSourceError,
    Gap,
    InsufficientSpeakersError,
    Overlap,
    ScriptConfig,
    UtteranceSpec,
    VoiceSpec,
    generate_script,
    resolve_timeline,
    script_from_json,
    script_to_json,
    utterance_times,
)
from oracles import rasterized_overlap_duration

TEXTS = (
    "selamat pagi semuanya",
    "apa kabar hari ini",
    "saya setuju dengan pendapat itu",
    "bisa tolong ulangi sekali lagi",
    "terima kasih banyak atas waktunya",
)


def make_config(**overrides):
    base = dict(
        speakers=(
            VoiceSpec("spk0", "voice-a"),
            VoiceSpec("spk1", "voice-b"),
        ),
        text_source=TEXTS,
        num_utterances=12,
        seed=42,
    )
    base.update(overrides)
    return ScriptConfig(**base)


def script_with_joins(joins, speakers=("A", "B")):
    """Hand-built script whose join sequence is exactly `joins`."""
    voices = tuple(VoiceSpec(s, f"voice-{s}") for s in dict.fromkeys(speakers))
    config = ScriptConfig(speakers=voices, text_source=TEXTS, num_utterances=len(joins))
    utterances = tuple(
        UtteranceSpec(i, speakers[i % len(speakers)], TEXTS[i % len(TEXTS)], join)
        for i, join in enumerate(joins)
    )
    return ConversationScript("conv_test", config, utterances)


class TestTypes:
    def test_voice_requires_name(self):
        with pytest.raises(ValueError):
            VoiceSpec("spk0", "")

    def test_voice_requires_clean_speaker(self):
        with pytest.raises(ValueError):
            VoiceSpec(" spk0", "voice-a")

    def test_negative_gap_rejected(self):
        with pytest.raises(ValueError):
            Gap(-0.1)

    def test_zero_overlap_rejected(self):
        with pytest.raises(ValueError):
            Overlap(0.0)

    def test_utterance_requires_text(self):
        with pytest.raises(ValueError):
            UtteranceSpec(0, "spk0", "   ", Gap(0.0))


class TestScriptConfig:
    def test_duplicate_speaker_ids_rejected(self):
        with pytest.raises(ValueError):
            make_config(
                speakers=(VoiceSpec("spk0", "voice-a"), VoiceSpec("spk0", "voice-b"))
            )

    def test_inverted_gap_range_rejected(self):
        with pytest.raises(ValueError):
            make_config(gap_range=(1.0, 0.2))

    def test_probability_out_of_range(self):
        with pytest.raises(ValueError):
            make_config(overlap_probability=1.5)

    def test_zero_utterances_rejected(self):
        with pytest.raises(ValueError):
            make_config(num_utterances=0)


class TestScriptValidation:
    def test_first_join_must_be_zero_gap(self):
        with pytest.raises(ValueError):
            script_with_joins([Gap(0.5), Gap(0.3)])

    def test_consecutive_speakers_must_differ(self):
        with pytest.raises(ValueError):
            script_with_joins([Gap(0.0), Gap(0.3)], speakers=("A", "A"))

    def test_indices_must_be_consecutive(self):
        config = make_config()
        utterances = (
            UtteranceSpec(0, "spk0", TEXTS[0], Gap(0.0)),
            UtteranceSpec(2, "spk1", TEXTS[1], Gap(0.3)),
        )
        with pytest.raises(ValueError):
            ConversationScript("conv_test", config, utterances)

    def test_voice_lookup(self):
        script = generate_script(make_config(), "conv_0000")
        voice = script.voice_for("spk1")
        assert voice.voice_name == "voice-b"
        with pytest.raises(KeyError):
            script.voice_for("ghost")


class TestGenerateScript:
    def test_utterance_count(self):
        script = generate_script(make_config(num_utterances=7))
        assert len(script.utterances) == 7

    def test_zero_probability_means_no_overlaps(self):
        script = generate_script(make_config(overlap_probability=0.0, num_utterances=40))
        assert all(isinstance(u.join, Gap) for u in script.utterances)

    def test_two_speakers_alternate_strictly(self):
        script = generate_script(make_config(num_utterances=10))
        speakers = [u.speaker for u in script.utterances]
        assert all(a != b for a, b in zip(speakers, speakers[1:]))
        assert set(speakers) == {"spk0", "spk1"}

    def test_deterministic_for_fixed_seed(self):
        config = make_config(seed=42)
        assert generate_script(config, "c") == generate_script(config, "c")
        assert script_to_json(generate_script(config, "c")) == script_to_json(
            generate_script(config, "c")
        )

    def test_seed_changes_script(self):
        joins = lambda s: [u.join for u in s.utterances]
        assert joins(generate_script(make_config(seed=1))) != joins(
            generate_script(make_config(seed=2))
        )

    def test_growing_count_keeps_prefix(self):
        short = generate_script(make_config(num_utterances=6))
        long = generate_script(make_config(num_utterances=12))
        assert long.utterances[:6] == short.utterances

    def test_all_overlaps_when_probability_one(self):
        script = generate_script(make_config(overlap_probability=1.0, num_utterances=20))
        assert all(isinstance(u.join, Overlap) for u in script.utterances[1:])

    def test_draw_values_stay_in_range_on_millisecond_grid(self):
        config = make_config(overlap_probability=0.5, num_utterances=60, seed=7)
        script = generate_script(config)
        for utterance in script.utterances[1:]:
            seconds = utterance.join.seconds
            assert seconds == round(seconds, 3)
            if isinstance(utterance.join, Gap):
                assert config.gap_range[0] <= seconds <= config.gap_range[1]
            else:
                assert config.overlap_range[0] <= seconds <= config.overlap_range[1]

    def test_texts_cycle_through_source(self):
        script = generate_script(make_config(num_utterances=10))
        texts = [u.text for u in script.utterances]
        # two full cycles: every sentence appears exactly twice
        assert sorted(texts) == sorted(TEXTS * 2)

    def test_one_speaker_rejected(self):
        with pytest.raises(InsufficientSpeakersError):
            generate_script(make_config(speakers=(VoiceSpec("spk0", "voice-a"),)))

    def test_empty_text_source_rejected(self):
        with pytest.raises(EmptyTextSourceError):
            generate_script(make_config(text_source=()))


class TestResolveTimeline:
    def test_plain_gaps(self):
        script = script_with_joins([Gap(0.0), Gap(1.0)])
        annotation = resolve_timeline(script, [3.0, 2.0])
        spans = {s.speaker: (s.span.start, s.span.end) for s in annotation.segments}
        assert spans == {"A": (0.0, 3.0), "B": (4.0, 6.0)}

    def test_overlap_backdates_onset(self):
        script = script_with_joins([Gap(0.0), Overlap(1.0)])
        annotation = resolve_timeline(script, [3.0, 2.0])
        spans = {s.speaker: (s.span.start, s.span.end) for s in annotation.segments}
        assert spans == {"A": (0.0, 3.0), "B": (2.0, 4.0)}
        regions = [(r.start, r.end) for r in annotation.overlap_regions()]
        assert regions == [(2.0, 3.0)]

    def test_oversized_overlap_clamps_to_previous_start(self):
        script = script_with_joins([Gap(0.0), Overlap(10.0)])
        annotation = resolve_timeline(script, [3.0, 2.0])
        spans = {s.speaker: (s.span.start, s.span.end) for s in annotation.segments}
        assert spans == {"A": (0.0, 3.0), "B": (0.0, 2.0)}

    def test_duration_count_mismatch(self):
        script = script_with_joins([Gap(0.0), Gap(0.5)])
        with pytest.raises(DurationMismatchError):
            resolve_timeline(script, [3.0])

    def test_non_positive_duration(self):
        script = script_with_joins([Gap(0.0), Gap(0.5)])
        with pytest.raises(ValueError):
            resolve_timeline(script, [3.0, 0.0])

    def test_merged_same_speaker_turns_keep_utterance_times(self):
        script = script_with_joins(
            [Gap(0.0), Overlap(9.0), Overlap(0.5)], speakers=("A", "B", "A")
        )
        durations = [10.0, 1.0, 5.0]
        spans = utterance_times(script, durations)
        assert len(spans) == 3
        assert spans[2].start == 1.5
        annotation = resolve_timeline(script, durations)
        # A's second turn lies inside the first, so the annotation merges them
        assert len(annotation.segments) == 2

    @pytest.mark.parametrize("seed", range(8))
    def test_starts_never_decrease(self, seed):
        config = make_config(overlap_probability=0.6, num_utterances=30, seed=seed)
        script = generate_script(config)
        durations = [round(0.4 + (i % 5) * 0.35, 3) for i in range(30)]
        spans = utterance_times(script, durations)
        assert all(a.start <= b.start for a, b in zip(spans, spans[1:]))

    @pytest.mark.parametrize("seed", range(8))
    def test_overlap_duration_matches_sweep(self, seed):
        config = make_config(overlap_probability=0.7, num_utterances=25, seed=seed)
        script = generate_script(config)
        durations = [round(0.8 + (i % 4) * 0.45, 3) for i in range(25)]
        annotation = resolve_timeline(script, durations)
        measured = annotation.overlap_regions().duration
        assert measured == pytest.approx(rasterized_overlap_duration(annotation), abs=2e-3)

    def test_guaranteed_overlap_everywhere(self):
        config = make_config(
            overlap_probability=1.0,
            overlap_range=(0.1, 0.2),
            num_utterances=15,
            seed=3,
        )
        script = generate_script(config)
        spans = utterance_times(script, [1.0] * 15)
        for left, right in zip(spans, spans[1:]):
            assert right.start < left.end


class TestSerialization:
    def test_round_trip(self):
        script = generate_script(make_config(overlap_probability=0.5, seed=9), "conv_0003")
        assert script_from_json(script_to_json(script)) == script

    def test_schema_tag_checked(self):
        payload = script_to_json(generate_script(make_config()))
        payload["schema"] = "script@99"
        with pytest.raises(ValueError):
            script_from_json(payload)

    def test_json_is_plain_data(self):
        import json

        payload = script_to_json(generate_script(make_config()))
        assert json.loads(json.dumps(payload)) == payload

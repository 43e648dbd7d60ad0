import itertools
import random

import pytest

from ragmeter.analysis import (
    FailureClass,
    QuestionEvalRecord,
    build_report,
    classify_failure,
    refine,
    report_csv_rows,
    semi_gold_verdict,
)
from ragmeter.errors import IntegrityError
from ragmeter.generation import AnswerSource, GeneratedAnswer
from ragmeter.judge import Comparator, make_comparator
from ragmeter.metrics import RankAgnosticScores
from ragmeter.mocks import EqualityJudge


def _answer(text: str, source=AnswerSource.GOLD, sample_index: int = 0) -> GeneratedAnswer:
    return GeneratedAnswer(
        question_id="q1",
        source=source,
        text=text,
        sample_index=sample_index,
        model_id="oracle",
        temperature=0.5,
    )


def _record(
    question_id: str,
    k: int,
    recall_hit: bool,
    semi_gold_match: bool,
    end_to_end_match: bool,
) -> QuestionEvalRecord:
    scores = RankAgnosticScores(k=k, precision=1.0 / k if recall_hit else 0.0, recall=1.0 if recall_hit else 0.0, f1=2 / (k + 1) if recall_hit else 0.0)
    return QuestionEvalRecord.build(
        question_id=question_id,
        k=k,
        recall_hit=recall_hit,
        scores=scores,
        semi_gold_match=semi_gold_match,
        end_to_end_match=end_to_end_match,
    )


# ---------------------------------------------------------------- classification


def test_miss_with_correct_answer_is_conventional_failure():
    assert classify_failure(False, True, True) is FailureClass.CONVENTIONAL


def test_hit_with_wrong_answer_is_conventional_failure():
    assert classify_failure(True, False, False) is FailureClass.CONVENTIONAL


def test_full_agreement_is_no_failure():
    assert classify_failure(True, True, True) is FailureClass.NONE


def test_semi_gold_disagreement_only():
    assert classify_failure(True, False, True) is FailureClass.SEMI_GOLD


def test_both_disagreements():
    assert classify_failure(False, False, True) is FailureClass.BOTH


def test_failure_classes_partition_all_combinations():
    for recall_hit, semi_gold, end_to_end in itertools.product([False, True], repeat=3):
        failure_class = classify_failure(recall_hit, semi_gold, end_to_end)
        conventional = recall_hit != end_to_end
        semi = semi_gold != end_to_end
        expected = {
            (False, False): FailureClass.NONE,
            (True, False): FailureClass.CONVENTIONAL,
            (False, True): FailureClass.SEMI_GOLD,
            (True, True): FailureClass.BOTH,
        }[(conventional, semi)]
        assert failure_class is expected


# ---------------------------------------------------------------- semi-gold verdict


def _equality_comparator():
    return make_comparator(Comparator.LLM_JUDGE, judge_provider=EqualityJudge())


def test_semi_gold_verdict_yes():
    verdict = semi_gold_verdict(
        _equality_comparator(),
        "q1",
        "where do the greasers live in the outsiders",
        _answer("Tulsa, Oklahoma", AnswerSource.RETRIEVED),
        [_answer("Tulsa, Oklahoma")],
    )
    assert verdict.decision is True


def test_semi_gold_verdict_no():
    verdict = semi_gold_verdict(
        _equality_comparator(),
        "q1",
        "in which regions are most of africa petroleum and natural gas found",
        _answer("Nigeria, Horn of Africa", AnswerSource.RETRIEVED),
        [_answer("Nigeria, delta basin")],
    )
    assert verdict.decision is False


def test_semi_gold_verdict_requires_references():
    with pytest.raises(ValueError):
        semi_gold_verdict(_equality_comparator(), "q1", "q", _answer("x"), [])


def test_semi_gold_samples_are_deduplicated():
    samples = [_answer("Tulsa, Oklahoma", sample_index=i) for i in range(3)]
    verdict = semi_gold_verdict(
        _equality_comparator(), "q1", "question", _answer("other", AnswerSource.RETRIEVED), samples
    )
    assert verdict.references == ("Tulsa, Oklahoma",)


def test_semi_gold_per_reference_mode_ors_decisions():
    samples = [_answer("miss", sample_index=0), _answer("hit", sample_index=1)]
    verdict = semi_gold_verdict(
        _equality_comparator(),
        "q1",
        "question",
        _answer("hit", AnswerSource.RETRIEVED),
        samples,
        mode="per_reference",
    )
    assert verdict.decision is True
    assert verdict.references == ("miss", "hit")


def test_semi_gold_invalid_mode_rejected():
    with pytest.raises(ValueError):
        semi_gold_verdict(_equality_comparator(), "q1", "q", _answer("x"), [_answer("y")], mode="bogus")


# ---------------------------------------------------------------- refine


def test_refine_keeps_agreeing_records():
    records = [_record(f"q{i}", 1, True, True, True) for i in range(4)]
    assert refine(records) == records


def test_refine_drops_conventional_failures():
    records = [_record(f"q{i}", 1, True, True, True) for i in range(7)]
    records += [_record(f"x{i}", 1, False, True, True) for i in range(3)]
    refined = refine(records)
    assert len(refined) == 7


def test_refine_can_empty_the_list():
    records = [_record(f"q{i}", 1, False, True, True) for i in range(3)]
    assert refine(records) == []


def test_refined_set_laws_on_random_records():
    rng = random.Random(47)
    for _ in range(100):
        records = [
            _record(f"q{i}", 1, rng.random() < 0.5, rng.random() < 0.5, rng.random() < 0.5)
            for i in range(rng.randint(1, 40))
        ]
        refined = refine(records)
        assert all(r.recall_hit == r.end_to_end_match for r in refined)
        class_counts = {fc: 0 for fc in FailureClass}
        for record in records:
            class_counts[record.failure_class] += 1
        assert sum(class_counts.values()) == len(records)
        assert sum(1 for r in refined if r.recall_hit != r.end_to_end_match) == 0


# ---------------------------------------------------------------- report


def _hand_fixture():
    # 8 questions at k=1; hand-computed aggregates below
    rows = [
        ("q1", True, True, True),  # none
        ("q2", True, True, True),  # none
        ("q3", False, True, True),  # conventional (miss but correct)
        ("q4", True, False, False),  # conventional (hit but wrong)
        ("q5", True, False, True),  # semi-gold
        ("q6", False, False, False),  # none (all miss)
        ("q7", True, True, True),  # none
        ("q8", False, True, False),  # semi-gold (miss agrees with wrong answer)
    ]
    return [_record(qid, 1, hit, semi, e2e) for qid, hit, semi, e2e in rows]


def test_build_report_hand_computed_aggregates():
    report = build_report(_hand_fixture(), [1])
    block = report.per_k[1]
    assert block.questions == 8
    assert block.recall_failures == 2  # q3, q4
    assert block.semi_gold_failures == 2  # q5, q8
    assert block.miss_but_correct == 1  # q3
    assert block.hit_but_wrong == 1  # q4
    assert block.failure_class_counts["none"] == 4
    assert block.failure_class_counts["conventional_metric"] == 2
    assert block.failure_class_counts["semi_gold_judge"] == 2
    assert block.failure_class_counts["both"] == 0
    assert block.semi_gold_match_rate == pytest.approx(5 / 8)
    assert block.end_to_end_rate == pytest.approx(5 / 8)
    assert block.mean_recall == pytest.approx(5 / 8)
    assert block.correlation_all.n == 8
    assert block.correlation_refined.n == 6


def test_build_report_refined_perfect_agreement_gives_rho_one():
    records = [_record(f"q{i}", 1, True, True, True) for i in range(5)]
    records += [_record(f"m{i}", 1, False, False, False) for i in range(5)]
    report = build_report(records, [1])
    assert report.per_k[1].correlation_refined.rho == pytest.approx(1.0, abs=1e-12)


def test_build_report_single_question_correlation_undefined():
    report = build_report([_record("q1", 1, True, True, True)], [1])
    block = report.per_k[1]
    assert block.correlation_all.rho is None
    assert block.correlation_all.reason == "fewer than two records"


def test_build_report_constant_columns_recorded_not_raised():
    records = [_record(f"q{i}", 1, True, True, True) for i in range(4)]
    report = build_report(records, [1])
    assert report.per_k[1].correlation_all.rho is None
    assert "constant" in report.per_k[1].correlation_all.reason


def test_build_report_requires_full_coverage():
    records = [_record("q1", 1, True, True, True), _record("q1", 5, True, True, True)]
    records.append(_record("q2", 1, True, True, True))  # q2 missing at k=5
    with pytest.raises(IntegrityError, match="coverage"):
        build_report(records, [1, 5])


def test_build_report_rejects_duplicate_records():
    records = [_record("q1", 1, True, True, True), _record("q1", 1, True, True, True)]
    with pytest.raises(IntegrityError, match="duplicate"):
        build_report(records, [1])


def test_report_dict_and_csv_shapes():
    report = build_report(_hand_fixture(), [1])
    payload = report.to_dict()
    assert payload["k_values"] == [1]
    assert set(payload["per_k"]["1"]) >= {
        "recall_failures",
        "semi_gold_failures",
        "mean_recall",
        "correlation",
    }
    rows = report_csv_rows(report)
    assert rows[0][0] == "k"
    assert len(rows) == 2
    assert rows[1][0] == "1"


def test_record_roundtrip():
    record = _record("q1", 5, True, False, True)
    assert QuestionEvalRecord.from_record(record.to_record()) == record

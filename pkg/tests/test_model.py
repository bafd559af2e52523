import datetime as dt

import pytest
from hypothesis import given, strategies as st

from mmfactcheck.model import (
    BinaryLabel,
    EvidencePool,
    Explanation,
    ImageAnalysisResult,
    ImageMatchAnalysis,
    ImageRelationship,
    KeyPoint,
    Modality,
    MultimodalClaim,
    Plan,
    ReasoningOutput,
    ReasoningStep,
    DirectFactCheck,
    SearchItem,
    ValidationItem,
    VeracityLabel,
    check_confidence,
    collapse_to_binary,
    from_dict,
    parse_date,
    registrable_domain,
    to_dict,
)
from conftest import evidence


def test_binary_collapse_puts_only_true_on_the_positive_side():
    assert collapse_to_binary(VeracityLabel.TRUE) is BinaryLabel.TRUE
    assert collapse_to_binary(VeracityLabel.FALSE) is BinaryLabel.NOT_TRUE
    assert collapse_to_binary(VeracityLabel.UNPROVEN) is BinaryLabel.NOT_TRUE


@pytest.mark.parametrize("value", [0, 6, -1])
def test_confidence_outside_range_rejected(value):
    with pytest.raises(ValueError):
        check_confidence(value)


@pytest.mark.parametrize(
    "url,domain",
    [
        ("https://www.snopes.com/fact-check/x", "snopes.com"),
        ("https://blog.politifact.com/a", "politifact.com"),
        ("http://news.bbc.co.uk/1/hi", "bbc.co.uk"),
        ("https://EXAMPLE.org:8080/path", "example.org"),
    ],
)
def test_registrable_domain(url, domain):
    assert registrable_domain(url) == domain


def test_parse_date_accepts_dates_and_iso_text():
    assert parse_date("2023-05-01") == dt.date(2023, 5, 1)
    assert parse_date(dt.datetime(2023, 5, 1, 12)) == dt.date(2023, 5, 1)
    assert parse_date(None) is None
    with pytest.raises(ValueError):
        parse_date("May the first")


def test_claim_requires_text():
    with pytest.raises(ValueError):
        MultimodalClaim("   ")
    assert MultimodalClaim("x", post_image="").post_image is None


def test_evidence_domain_must_match_url():
    e = evidence(url="https://www.reuters.com/world/x")
    assert e.source_domain == "reuters.com"
    with pytest.raises(ValueError):
        evidence(url="https://www.reuters.com/x", source_domain="bbc.co.uk")
    with pytest.raises(ValueError):
        evidence(content="  ")


def test_pool_ids_unique_and_extension_skips_duplicates():
    a, b = evidence("1-1"), evidence("1-2")
    pool = EvidencePool("reliable", (a,))
    grown = pool.extended([a, b, b])
    assert grown.ids() == ["1-1", "1-2"]
    assert pool.ids() == ["1-1"]
    with pytest.raises(ValueError):
        EvidencePool("reliable", (a, a))
    with pytest.raises(ValueError):
        EvidencePool("other")


def test_plan_lists_capped_and_disjoint():
    with pytest.raises(ValueError):
        Plan(validation_list=tuple(ValidationItem(f"s{i}") for i in range(4)))
    with pytest.raises(ValueError):
        Plan(validation_list=(ValidationItem("same"),), search_list=(SearchItem("same"),))


def test_image_scores_need_related_match():
    unrelated = ImageMatchAnalysis("img-1", ImageRelationship.NO_RELATION)
    with pytest.raises(ValueError):
        ImageAnalysisResult(matches=(unrelated,), tampering_score=10)
    ok = ImageAnalysisResult(matches=(ImageMatchAnalysis("img-1", ImageRelationship.SAME_EVENT, tampering_probability=5),), tampering_score=5)
    assert ok.related_ids() == ["img-1"]
    with pytest.raises(ValueError):
        ImageAnalysisResult(deepfake_score=1.5)


def test_cited_ids_are_ordered_and_unique():
    r = ReasoningOutput(
        "p",
        VeracityLabel.FALSE,
        4,
        steps=(
            ReasoningStep("a", relevant_text_evidence_ids=("1-2", "1-1"), relevant_image_evidence_ids=("img-1",)),
            ReasoningStep("b", relevant_text_evidence_ids=("1-1", "2-1")),
        ),
        direct_fact_check=DirectFactCheck(relevant_text_evidence_ids=("2-1", "3-1")),
    )
    assert r.cited_text_ids() == ["1-2", "1-1", "2-1", "3-1"]
    assert r.cited_image_ids() == ["img-1"]


def test_explanation_invariants():
    with pytest.raises(ValueError):
        Explanation("p", BinaryLabel.NOT_TRUE, VeracityLabel.FALSE, "logic", 3)
    Explanation("p", BinaryLabel.NOT_TRUE, VeracityLabel.UNPROVEN, "logic", 2)
    with pytest.raises(ValueError):
        Explanation(
            "p", BinaryLabel.NOT_TRUE, VeracityLabel.FALSE, "logic", 3,
            key_points=(KeyPoint("x", ("9-9",)),), evidence=(evidence("1-1"),),
        )


texts = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=20).filter(str.strip)


@given(
    text=texts,
    label=st.sampled_from(list(VeracityLabel)),
    conf=st.integers(1, 5),
    ids=st.lists(st.from_regex(r"\A[1-9]-[1-9]\Z"), max_size=3, unique=True),
)
def test_explanation_dict_round_trip(text, label, conf, ids):
    items = tuple(evidence(i, url=f"https://example.org/{n}") for n, i in enumerate(ids))
    ex = Explanation(
        text,
        collapse_to_binary(label),
        label,
        text,
        conf,
        key_points=(KeyPoint(text, tuple(ids)),),
        evidence=items,
        image_analysis=ImageAnalysisResult(deepfake_score=0.25),
    )
    again = from_dict(Explanation, to_dict(ex))
    assert again == ex
    assert again.to_json() == ex.to_json()


def test_evidence_modality_round_trip():
    e = evidence("img-1", modality=Modality.IMAGE, publish_date=dt.date(2022, 1, 2))
    assert from_dict(type(e), to_dict(e)) == e

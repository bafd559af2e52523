import csv
import dataclasses
import datetime as dt
import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from mmfactcheck.agents import Agents
from mmfactcheck.corpus.build import (
    DatasetLabel,
    DatasetRecord,
    GroundTruthEvidence,
    GroundTruthKeyPoint,
    ImageDims,
    build_corpus,
    dev_size,
    extract_annotations,
    filter_article,
    map_label,
    parse_fact_check_date,
    qc_checks,
    read_records,
    split_dataset,
)
from mmfactcheck.corpus.reformat import IMAGE, VIDEO, WEB, classify_url, reformat_article
from mmfactcheck.errors import HtmlParseError
from conftest import FIXTURES, ScriptedChat
from html_fuzz import BASE_URL, random_document

HTML_DIR = FIXTURES / "html"
GOLDEN_NAMES = ("stadium", "rally", "senator", "bridge", "concert")

# every raw rating with the category it must land in
RAW_LABELS = {
    "FALSE": "False", "MISCAPTION": "False", "MISCAPTIONED": "False", "FAKE": "False",
    "LEGEND": "False", "SCAM": "False", "MISATTRIBUTED": "False",
    "MOSTLY FALSE": "Mixture", "MIXTURE": "Mixture", "MOSTLY TRUE": "Mixture",
    "OUTDATED": "Outdated",
    "TRUE": "True", "CORRECT ATTRIBUTION": "True", "LEGIT": "True",
    "UNFOUNDED": "Unproven", "UNPROVEN": "Unproven", "RESEARCH IN PROGRESS": "Unproven",
}


def render_golden(name):
    meta = json.loads((HTML_DIR / f"{name}.meta.json").read_text(encoding="utf-8"))
    article = reformat_article(
        (HTML_DIR / f"{name}.html").read_bytes(),
        article_url=meta["url"],
        category=meta["category"],
        headline=meta["headline"],
        claim=meta["claim"],
        raw_label=meta["label"],
    )
    return json.dumps(dataclasses.asdict(article), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def words(n):
    return " ".join(f"w{i}" for i in range(n))


# -- reformatting -----------------------------------------------------------------


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_articles_byte_identical(name):
    assert render_golden(name) == (HTML_DIR / f"{name}.golden.json").read_text(encoding="utf-8")


def test_tags_interleave_in_place():
    doc = (
        '<p>Before <img src="/a/photo.JPG"> middle <a href="https://x.org/page">link text</a> after</p>'
        '<video src="clip.mp4"></video><script>var s = "<img src=no.png>";</script>'
    )
    art = reformat_article(doc, article_url="https://site.com/story/")
    assert art.interleaved_text == (
        "Before [IMAGE:https://site.com/a/photo.JPG] middle link text [WEB:https://x.org/page] after\n"
        "[VIDEO:https://site.com/story/clip.mp4]"
    )
    assert art.word_count == 5


def test_table_cells_are_separated():
    art = reformat_article("<table><tr><td>Date</td><td>Source</td></tr></table>")
    assert art.interleaved_text == "Date Source"


def test_headline_defaults_to_title():
    art = reformat_article("<html><head><title> Fact  Check </title></head><body>x</body></html>")
    assert art.headline == "Fact Check"
    assert reformat_article("<title>T</title>", headline="Given").headline == "Given"


def test_classify_url_by_extension():
    assert classify_url("https://a.com/x.jpeg?w=2") == IMAGE
    assert classify_url("https://a.com/x.webm#t=3") == VIDEO
    assert classify_url("https://youtube.com/embed/abc") == WEB
    assert classify_url("photo.png") == IMAGE
    with pytest.raises(ValueError):
        classify_url("")


def test_undecodable_bytes_fall_back():
    art = reformat_article(b"<p>caf\xe9 menu</p>")
    assert art.interleaved_text == "café menu"


@pytest.mark.parametrize("bad", [b"", b"   ", "\x00\x01binary", 12])
def test_reformat_rejects_non_html(bad):
    with pytest.raises(HtmlParseError):
        reformat_article(bad)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_fuzzed_documents_keep_every_url_in_order(seed):
    doc, expected = random_document(random.Random(seed))
    art = reformat_article(doc, article_url=BASE_URL)
    assert art.links() == expected
    assert Counter(art.links()) == Counter(expected)


# -- labels and filters -------------------------------------------------------------


@pytest.mark.parametrize("raw,expected", sorted(RAW_LABELS.items()))
def test_label_mapping(raw, expected):
    assert map_label(raw).value == expected
    assert map_label(f"  {raw.lower()} ").value == expected


def test_label_table_has_seventeen_raw_ratings():
    assert len(RAW_LABELS) == 17


@pytest.mark.parametrize("raw", ["SATIRE", "LABELED SATIRE", "", "MOSTLY", "UNKNOWN"])
def test_unrelated_ratings_excluded(raw):
    assert map_label(raw) is DatasetLabel.EXCLUDED


def test_challenge_labels_have_no_veracity():
    assert DatasetLabel.MIXTURE.veracity is None and DatasetLabel.OUTDATED.veracity is None
    assert DatasetLabel.FALSE.veracity.value == "False"


@pytest.mark.parametrize("n,keep,reason", [(89, False, "too_short"), (90, True, ""), (2000, True, ""), (2001, False, "too_long")])
def test_word_count_bounds(n, keep, reason):
    art = reformat_article(f"<p>{words(n)}</p>")
    assert art.word_count == n
    decision = filter_article(art)
    assert (decision.keep, decision.reason) == (keep, reason)


def test_tags_do_not_count_as_words():
    art = reformat_article(f'<p>{words(89)} <img src="https://a.com/x.jpg"></p>')
    assert art.word_count == 89


def test_small_images_dropped():
    art = reformat_article(f"<p>{words(100)}</p>")
    dims = [ImageDims("a", 199, 200), ImageDims("b", 200, 200), ImageDims("c", 200, 199), ImageDims("d", 1000, 800)]
    assert filter_article(art, dims).dropped_images == ("a", "c")


# -- split ---------------------------------------------------------------------------


def record(i, label=DatasetLabel.FALSE):
    return DatasetRecord(f"c{i}", f"claim {i}", label, post_image_url="https://a.com/x.jpg")


def test_dev_size_matches_published_split():
    assert dev_size(1771) == 335
    assert 1771 - dev_size(1771) == 1436
    assert dev_size(0) == 0


@given(st.integers(min_value=0, max_value=50_000))
def test_dev_size_is_nearest_integer(n):
    k = dev_size(n)
    assert abs(k - n / 5.29) <= 0.5


def test_split_partitions_and_diverts_challenge():
    records = [record(i) for i in range(1771)] + [record(2000 + i, DatasetLabel.MIXTURE) for i in range(5)]
    records.append(record(3000, DatasetLabel.OUTDATED))
    split = split_dataset(records, seed=7)
    assert (len(split.dev), len(split.test), len(split.challenge)) == (335, 1436, 6)
    ids = [r.claim_id for part in (split.dev, split.test, split.challenge) for r in part]
    assert sorted(ids) == sorted(r.claim_id for r in records)
    assert split_dataset(records, seed=7) == split
    assert split_dataset(records, seed=8).dev != split.dev


def test_record_round_trip_and_invariants():
    r = DatasetRecord(
        "c1", "claim", DatasetLabel.TRUE,
        fact_check_date=dt.date(2023, 1, 2),
        gt_key_points=(GroundTruthKeyPoint("kp", (0,)),),
        gt_evidence=(GroundTruthEvidence("d", "https://a.com/x.png", "image"),),
    )
    assert r.gt_evidence_count == 1
    assert DatasetRecord.from_json(r.to_json()) == r
    with pytest.raises(ValueError):
        DatasetRecord("c", "x", DatasetLabel.EXCLUDED)
    with pytest.raises(ValueError):
        DatasetRecord("c", "x", DatasetLabel.TRUE, gt_key_points=(GroundTruthKeyPoint("kp", (1,)),))


@pytest.mark.parametrize(
    "value,expected",
    [("2023-05-04", dt.date(2023, 5, 4)), ("May 4, 2023", dt.date(2023, 5, 4)), ("4 May 2023", dt.date(2023, 5, 4))],
)
def test_fact_check_dates(value, expected):
    assert parse_fact_check_date(value) == expected


def test_fact_check_dates_strict_and_missing():
    with pytest.raises(ValueError):
        parse_fact_check_date("May 4, 2023", strict=True)
    for bad in (None, "", "sometime"):
        with pytest.raises(ValueError):
            parse_fact_check_date(bad)


# -- extraction and quality control ---------------------------------------------------

ARTICLE = reformat_article(
    '<p>The viral post <img src="https://a.com/post.jpg"> claims a flood.</p>'
    '<p>Archive <a href="https://archive.org/x">copy</a> and <video src="https://v.com/c.mp4"></video></p>',
    claim="The stadium flooded.",
)


def extraction_script(post_links=("https://a.com/post.jpg",)):
    return {
        "EX-post": [{"post_text": "Stadium underwater!", "post_links": list(post_links)}],
        "EX-rationale": [{"reasoning_logic": "Archive shows otherwise.", "key_points": ["Photo is old", "No flood"]}],
        "EX-evidence": [
            {"evidence": [{"description": "archived copy", "links": ["https://archive.org/x", "https://v.com/c.mp4"]}]},
            {"evidence": [{"description": "weather records", "links": []}]},
        ],
        "QC-necessity": [{"image_required": "yes", "reason": "the photo is the claim"}],
        "QC-watermark": [{"watermarked": False, "matched_keywords": [], "reason": "clean"}],
    }


def test_extract_annotations_links_evidence_to_key_points():
    ann = extract_annotations(ARTICLE, Agents(ScriptedChat(extraction_script())))
    assert ann.post_image == "https://a.com/post.jpg"
    assert [kp.evidence_refs for kp in ann.key_points] == [(0, 1), (2,)]
    assert [(e.url, e.modality) for e in ann.evidence] == [
        ("https://archive.org/x", "text"),
        ("https://v.com/c.mp4", "video"),
        ("", "text"),
    ]


def test_extraction_rejects_links_not_in_article():
    chat = ScriptedChat(extraction_script(post_links=("https://elsewhere.com/p.jpg",)))
    with pytest.raises(Exception) as info:
        extract_annotations(ARTICLE, Agents(chat, retries=0))
    assert "post_links" in str(info.value)


@pytest.mark.parametrize(
    "required,marked,reasons",
    [("yes", False, ()), ("no", False, ("not_multimodal",)), ("uncertain", False, ("not_multimodal",)),
     ("yes", True, ("watermark",)), ("no", True, ("not_multimodal", "watermark"))],
)
def test_quality_control(required, marked, reasons):
    script = {
        "QC-necessity": [{"image_required": required, "reason": "r"}],
        "QC-watermark": [{"watermarked": marked, "matched_keywords": ["fake"] if marked else [], "reason": "r"}],
    }
    decision = qc_checks(record(1), "https://a.com/x.jpg", Agents(ScriptedChat(script)))
    assert decision.reasons == reasons
    assert decision.keep is (not reasons)


# -- directory driver --------------------------------------------------------------


def write_article(directory, name, body, **meta):
    base = {"url": f"https://fc.example.com/{name}/", "category": "Fact Check", "headline": "",
            "claim": f"claim {name}", "label": "FALSE", "date": "2023-03-01"}
    base.update(meta)
    (directory / f"{name}.json").write_text(json.dumps(base), encoding="utf-8")
    (directory / f"{name}.html").write_text(body, encoding="utf-8")


def corpus_chat():
    def post(request):
        links = [u for u in ("https://img.example.com/big.jpg", "https://img.example.com/tiny.jpg")
                 if u in request.user_content]
        return {"post_text": "post", "post_links": links}

    return ScriptedChat({
        "EX-post": post,
        "EX-rationale": [{"reasoning_logic": "logic", "key_points": ["kp"]}],
        "EX-evidence": [{"evidence": [{"description": "d", "links": []}]}],
        "QC-necessity": lambda r: {"image_required": "no" if "needless" in r.user_content else "yes", "reason": "r"},
        "QC-watermark": [{"watermarked": False, "matched_keywords": [], "reason": "r"}],
    })


def test_build_corpus_end_to_end(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    big = '<img src="https://img.example.com/big.jpg">'
    tiny = '<img src="https://img.example.com/tiny.jpg">'
    write_article(src, "a1", f"<p>{words(120)} {big}</p>", image_dims={"https://img.example.com/big.jpg": [640, 480]})
    write_article(src, "a2", f"<p>{words(120)} {big}</p>", label="MOSTLY TRUE", date="May 2, 2023")
    write_article(src, "a3", f"<p>{words(50)} {big}</p>")
    write_article(src, "a4", f"<p>{words(120)} {big}</p>", label="SATIRE")
    write_article(src, "a5", f"<p>{words(120)} {tiny}</p>", image_dims={"https://img.example.com/tiny.jpg": [120, 90]})
    write_article(src, "a6", f"<p>{words(120)} {big}</p>", claim="needless claim")
    write_article(src, "a7", f"<p>{words(120)} {big}</p>", date="not a date")
    write_article(src, "a8", f"<p>{words(120)}</p>")

    out = tmp_path / "out" / "corpus.jsonl"
    report = build_corpus(src, out, Agents(corpus_chat()), seed=3)
    assert [r.claim_id for r in report.records] == ["a1", "a2"]
    assert {r.source: r.reason for r in report.rejections} == {
        "a3": "too_short", "a4": "excluded_label", "a5": "no_post_image",
        "a6": "not_multimodal", "a7": "bad_date", "a8": "no_post_image",
    }
    assert report.dropped_images == {"a5": ["https://img.example.com/tiny.jpg"]}
    assert read_records(out) == report.records
    assert [r.claim_id for r in read_records(tmp_path / "out" / "corpus.challenge.jsonl")] == ["a2"]
    main = read_records(tmp_path / "out" / "corpus.dev.jsonl") + read_records(tmp_path / "out" / "corpus.test.jsonl")
    assert [r.claim_id for r in main] == ["a1"]
    with open(tmp_path / "out" / "corpus.rejections.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert ("a5", "image_too_small") in {(r["source"], r["reason"]) for r in rows}
    assert report.records[1].fact_check_date == dt.date(2023, 5, 2)

    again = build_corpus(src, tmp_path / "again.jsonl", Agents(corpus_chat()), seed=3, workers=4)
    assert again.records == report.records

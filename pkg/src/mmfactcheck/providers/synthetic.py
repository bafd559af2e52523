"""Seeded random backends that always answer in a schema-valid layout.

Used to fuzz the workflow: every response is drawn from an RNG seeded by
``(seed, request digest)``, so a run is reproducible no matter how calls
interleave across threads. Evidence ids and URLs to cite are read back out
of the rendered prompt, mirroring what a cooperative model would do.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import random
import re
from typing import Optional

from .base import ChatRequest, ReverseImageMatch, SearchResult
from .images import ensure_decodable
from .replay import CHAT, chat_payload, request_key

_EVIDENCE_LINE = re.compile(r"^\[(\d+-\d+|img-\d+)\] \(", re.M)
_RESULT_URL = re.compile(r"^\[\d+\] URL: (\S+)$", re.M)
_WORDS = (
    "aid concert stadium london mayor flood bridge vaccine photo archive rally harbour "
    "senator storm museum election parade wildfire protest statue festival airport"
).split()
_RELATIONSHIPS = ("Potentially From Same Source", "Same Event, Different Content", "No Close Relationship")
_RELIABILITY = ("reliable", "unreliable", "satire", "unsure", "factcheck")
_LABELS = ("TRUE", "FALSE", "UNPROVEN")


def _rng(seed: int, *parts: str) -> random.Random:
    digest = hashlib.sha256("\x1f".join((str(seed),) + parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _phrase(rng: random.Random, n: int = 4) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def _section(text: str, start: str, end: Optional[str] = None) -> str:
    i = text.find(start)
    if i < 0:
        return ""
    i += len(start)
    j = text.find(end, i) if end else -1
    return text[i : j if j >= 0 else len(text)]


class SyntheticChat:
    def __init__(self, seed: int = 0, *, label_weights: tuple[float, float, float] = (1, 1, 1), min_plan_items: int = 0):
        self.seed = seed
        self.label_weights = label_weights
        self.min_plan_items = min_plan_items

    def chat(self, request: ChatRequest) -> str:
        rng = _rng(self.seed, request_key(CHAT, chat_payload(request)))
        doc = getattr(self, "_" + request.response_schema_id.replace("-", "_").lower())(rng, request.user_content)
        return json.dumps(doc)

    def _label(self, rng: random.Random) -> str:
        return rng.choices(_LABELS, weights=self.label_weights)[0]

    def _sp(self, rng, prompt):
        texts = set()

        def fresh():
            while True:
                t = _phrase(rng, 5)
                if t not in texts:
                    texts.add(t)
                    return t

        return {
            "reasoning_steps": [
                {"step": fresh(), "method": rng.choice(["cross-verification", "origin tracing"]), "details": _phrase(rng)}
                for _ in range(rng.randint(1, 4))
            ],
            "validation_list": [
                {"sentence": fresh(), "explanation": _phrase(rng)} for _ in range(rng.randint(self.min_plan_items, 3))
            ],
            "search_list": [{"information_needed": fresh()} for _ in range(rng.randint(self.min_plan_items, 3))],
        }

    def _tr_query(self, rng, prompt):
        items = re.findall(r"^\d+\. (.+)$", _section(prompt, "Information items:", "Claim:"), re.M)
        prior = re.findall(r"^- (.+)$", _section(prompt, "Queries already issued:"), re.M)
        queries = []
        for _ in range(rng.randint(0, len(items))):
            if prior and rng.random() < 0.2:
                queries.append(rng.choice(prior))
            else:
                queries.append(_phrase(rng, 6))
        return {"queries": queries}

    def _tr_summary(self, rng, prompt):
        urls = _RESULT_URL.findall(prompt)
        chosen = [u for u in urls if rng.random() < 0.6]
        return {"summaries": [{"source_url": u, "summary": _phrase(rng, 10)} for u in chosen]}

    def _tr_reliability(self, rng, prompt):
        return {
            "source_identification": _phrase(rng, 2),
            "type": rng.choices(_RELIABILITY, weights=(5, 2, 1, 2, 1))[0],
            "reasoning": _phrase(rng, 8),
            "fact_checker_usage": rng.choice(["positive use", "reverse use", "neutral"]),
        }

    def _r(self, rng, prompt):
        ids = _EVIDENCE_LINE.findall(_section(prompt, "Evidence:", "Image analysis:"))
        text_ids = [i for i in ids if not i.startswith("img-")]
        image_ids = [i for i in ids if i.startswith("img-")]
        steps = []
        for _ in range(rng.randint(1, 3)):
            steps.append(
                {
                    "step_name": _phrase(rng, 3),
                    "description": _phrase(rng),
                    "analysis_result": _phrase(rng, 6),
                    "relevant_evidence_summary": _phrase(rng, 6),
                    "relevant_text_evidence_list": [i for i in text_ids if rng.random() < 0.5],
                    "relevant_image_evidence_list": [i for i in image_ids if rng.random() < 0.5],
                    "evidence_based_on_my_knowledge": [],
                }
            )
        return {
            "my_understanding_of_claim": _phrase(rng, 8),
            "validation_result": {
                "reasoning_steps": steps,
                "direct_fact_check_evidence": {
                    "analysis_result": _phrase(rng),
                    "relevant_evidence_summary": _phrase(rng),
                    "relevant_text_evidence_list": [i for i in text_ids if rng.random() < 0.3],
                },
                "3-class_authenticity_label": self._label(rng),
                "final_sufficiency_confidence": str(rng.randint(1, 5)),
            },
        }

    def _ir_match(self, rng, prompt):
        rel = rng.choice(_RELATIONSHIPS)
        related = rel != "No Close Relationship"
        return {
            "relationship": rel,
            "relationship_reasoning": _phrase(rng, 8),
            "tampering_probability": f"{rng.randint(0, 100)}%" if related else "",
            "tampering_reasoning": _phrase(rng) if related else "",
            "confidence": f"{rng.randint(0, 100)}%",
        }

    def _ir_miscaption(self, rng, prompt):
        return {
            "my_understanding_of_claim": _phrase(rng, 8),
            "Miscaption Rate": f"{rng.randint(0, 100)}%",
            "Reasoning": _phrase(rng, 8),
        }

    def _eg(self, rng, prompt):
        ids = _EVIDENCE_LINE.findall(_section(prompt, "Evidence:", "Image analysis:"))
        label = self._label(rng)
        n_points = rng.randint(0 if label == "UNPROVEN" else 1, 3)
        points = []
        for k in range(1, n_points + 1):
            cited = [i for i in ids if rng.random() < 0.4]
            suffix = f" [{', '.join(cited)}]" if cited else ""
            points.append(f"{k}. {_phrase(rng, 7)}{suffix}")
        binary = "TRUE" if label == "TRUE" else "FALSE"
        return {
            "my_understanding_of_claim": _phrase(rng, 8),
            "validation_result": {
                "2-class_authenticity_label": binary,
                "3-class_authenticity_label": label,
                "reasoning_logic": _phrase(rng, 12),
                "key_points": points,
            },
            "confidence_level": str(rng.randint(1, 5)),
        }

    def _qc_watermark(self, rng, prompt):
        marked = rng.random() < 0.2
        return {"watermarked": marked, "matched_keywords": ["fake"] if marked else [], "reason": _phrase(rng)}

    def _qc_necessity(self, rng, prompt):
        return {"image_required": rng.choice(["yes", "no", "uncertain"]), "reason": _phrase(rng)}

    def _ex_post(self, rng, prompt):
        links = re.findall(r"\[(?:IMAGE|VIDEO|WEB):([^\]]+)\]", prompt)
        return {"post_text": _phrase(rng, 10), "post_links": [u for u in links if rng.random() < 0.3]}

    def _ex_rationale(self, rng, prompt):
        return {"reasoning_logic": _phrase(rng, 12), "key_points": [_phrase(rng, 8) for _ in range(rng.randint(1, 3))]}

    def _ex_evidence(self, rng, prompt):
        links = re.findall(r"\[(?:IMAGE|VIDEO|WEB):([^\]]+)\]", prompt)
        return {
            "evidence": [
                {"description": _phrase(rng, 8), "links": [u for u in links if rng.random() < 0.3]}
                for _ in range(rng.randint(0, 2))
            ]
        }


class SyntheticSearch:
    """Random hits over a small domain universe that includes fact-checking sites."""

    DOMAINS = (
        "bbc.co.uk",
        "apnews.com",
        "reuters.com",
        "example-news.org",
        "theonion.com",
        "cityblog.net",
        "snopes.com",
        "www.politifact.com",
        "fullfact.org",
    )

    def __init__(self, seed: int = 0, *, max_hits: int = 6, base_date: dt.date = dt.date(2023, 6, 1)):
        self.seed = seed
        self.max_hits = max_hits
        self.base_date = base_date

    def web_search(self, query: str, max_results: int = 10) -> list[SearchResult]:
        if not query.strip():
            raise ValueError("query must be non-empty")
        rng = _rng(self.seed, "search", query)
        hits = []
        for n in range(rng.randint(0, self.max_hits)):
            domain = rng.choice(self.DOMAINS)
            date = None
            if rng.random() < 0.7:
                date = self.base_date + dt.timedelta(days=rng.randint(-400, 400))
            hits.append(
                SearchResult(
                    title=_phrase(rng, 5),
                    snippet=_phrase(rng, 12),
                    url=f"https://{domain}/{n}/{'-'.join(query.split()[:4]) or 'q'}",
                    publish_date=date,
                )
            )
        return hits[:max_results]


class SyntheticReverseImage:
    def __init__(self, seed: int = 0, *, max_matches: int = 4):
        self.seed = seed
        self.max_matches = max_matches

    def reverse_image_search(self, image: str) -> list[ReverseImageMatch]:
        ensure_decodable(image)
        rng = _rng(self.seed, "reverse", image)
        out = []
        for n in range(rng.randint(0, self.max_matches)):
            domain = rng.choice(SyntheticSearch.DOMAINS)
            out.append(
                ReverseImageMatch(
                    image_url=f"https://{domain}/img/{n}.jpg",
                    page_url=f"https://{domain}/story/{n}",
                    page_text=_phrase(rng, 10) if rng.random() < 0.8 else "",
                )
            )
        return out

"""Prompt templates shipped as text assets under ``mmfactcheck/prompts``.

Each asset has a small header (``# template:``, ``# schema:``,
``# version:``) followed by ``=== system ===`` and ``=== user ===``
sections. The user section is a :class:`string.Template` skeleton whose
``$name`` placeholders must all be bound when rendering.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

from ..schemas import ALL_SCHEMAS

# template id -> schema id its output must satisfy
TEMPLATE_SCHEMAS: dict[str, str] = {
    "SP": "SP",
    "TR-query": "TR-query",
    "TR-summary": "TR-summary",
    "TR-reliability": "TR-reliability",
    "R-T": "R",
    "R-A": "R",
    "IR-match": "IR-match",
    "IR-miscaption": "IR-miscaption",
    "EG": "EG",
    "QC-watermark": "QC-watermark",
    "QC-necessity": "QC-necessity",
    "EX-post": "EX-post",
    "EX-rationale": "EX-rationale",
    "EX-evidence": "EX-evidence",
}

_SECTION = re.compile(r"^=== (system|user) ===$", re.M)
_HEADER = re.compile(r"^# (template|schema|version): *(.+)$", re.M)


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    system_text: str
    user_skeleton: str
    schema_id: str = ""
    version: str = "1"

    @property
    def placeholders(self) -> frozenset[str]:
        names = set()
        for m in string.Template.pattern.finditer(self.user_skeleton):
            name = m.group("named") or m.group("braced")
            if name:
                names.add(name)
            elif m.group("invalid") is not None:
                raise ValueError(f"template {self.template_id}: malformed placeholder")
        return frozenset(names)

    def render(self, **bindings: Any) -> str:
        missing = self.placeholders - bindings.keys()
        if missing:
            raise KeyError(f"template {self.template_id}: unbound placeholders {sorted(missing)}")
        return string.Template(self.user_skeleton).substitute({k: str(v) for k, v in bindings.items()})


def parse_template(text: str) -> PromptTemplate:
    header = dict(_HEADER.findall(text.split("===", 1)[0]))
    parts = _SECTION.split(text)
    # parts = [header, "system", body, "user", body]
    sections = {parts[i]: parts[i + 1].strip("\n") for i in range(1, len(parts) - 1, 2)}
    if set(sections) != {"system", "user"}:
        raise ValueError("template needs exactly one system and one user section")
    tid = header.get("template", "").strip()
    schema = header.get("schema", "").strip()
    if schema not in ALL_SCHEMAS:
        raise ValueError(f"template {tid!r} names unknown schema {schema!r}")
    return PromptTemplate(
        template_id=tid,
        system_text=sections["system"].strip(),
        user_skeleton=sections["user"].strip() + "\n",
        schema_id=schema,
        version=header.get("version", "1").strip(),
    )


@lru_cache(maxsize=None)
def load_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_SCHEMAS:
        raise KeyError(f"unknown template {template_id!r}")
    text = resources.files("mmfactcheck.prompts").joinpath(f"{template_id}.txt").read_text(encoding="utf-8")
    tpl = parse_template(text)
    if tpl.template_id != template_id or tpl.schema_id != TEMPLATE_SCHEMAS[template_id]:
        raise ValueError(f"asset for {template_id} declares {tpl.template_id}/{tpl.schema_id}")
    return tpl


def all_templates() -> dict[str, PromptTemplate]:
    return {tid: load_template(tid) for tid in TEMPLATE_SCHEMAS}

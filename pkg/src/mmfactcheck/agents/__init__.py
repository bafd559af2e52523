from .core import ACCUMULATED, TEMPORARY, Agents, format_evidence, format_image_analysis, format_plan
from .templates import TEMPLATE_SCHEMAS, PromptTemplate, all_templates, load_template, parse_template

__all__ = [
    "ACCUMULATED",
    "TEMPORARY",
    "Agents",
    "format_evidence",
    "format_image_analysis",
    "format_plan",
    "TEMPLATE_SCHEMAS",
    "PromptTemplate",
    "all_templates",
    "load_template",
    "parse_template",
]

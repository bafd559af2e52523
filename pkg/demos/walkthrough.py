# %% [markdown]
# Walkthrough: verify a recorded claim offline, then score a few predictions.
# Run from the repository root with `python demos/walkthrough.py`.

# %%
import datetime as dt
from pathlib import Path

from mmfactcheck.cli import report_text
from mmfactcheck.evaluation import PredictionRecord, classification_metrics, paired_significance
from mmfactcheck.model import MultimodalClaim
from mmfactcheck.orchestrator import Orchestrator, WorkflowConfig
from mmfactcheck.providers.suite import build_providers

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# %% [markdown]
# Replay-strict mode answers every provider call from the recorded fixtures
# and fails loudly on anything unrecorded, so this cell needs no network.
# The fixtures were recorded from seeded synthetic backends, so the prose
# in the verdict is placeholder words.

# %%
providers = build_providers("replay-strict", FIXTURES / "replay")
claim = MultimodalClaim(
    claim_text="This photo shows the national stadium flooded after the storm.",
    post_text="The stadium after last night's storm. Stay safe everyone.",
    post_image=str(FIXTURES / "images" / "stadium.png"),
    claim_date=dt.date(2023, 5, 20),
    claim_id="flooded-stadium",
)
result = Orchestrator(providers, WorkflowConfig()).run_claim(claim)
print(report_text(result.explanation))

# %% [markdown]
# The trace records every decision: plans, queries, filtered URLs, reasoning
# steps and why the loop stopped.

# %%
for event in result.trace.events:
    if event["event"] in ("replan", "evidence_admitted", "terminate"):
        print(event)

# %% [markdown]
# Scoring: weighted and macro averages over the three-way labels.

# %%
gold = ["True", "False", "False", "Unproven"]
pred = ["True", "False", "Unproven", "Unproven"]
records = [PredictionRecord(f"c{i}", g, p) for i, (g, p) in enumerate(zip(gold, pred))]
for averaging in ("weighted", "macro"):
    print(averaging, classification_metrics(records, averaging).as_row())

# %% [markdown]
# Paired comparison of two systems' human-evaluation scores.

# %%
a = [0.5, 1.0, 1.0, 0.5, 1.0, 0.5, 1.0, 1.0, 0.5, 1.0]
b = [0.0, 0.5, 1.0, 0.5, 0.5, 0.0, 0.5, 1.0, 0.0, 0.5]
print(paired_significance(a, b, resamples=2000))

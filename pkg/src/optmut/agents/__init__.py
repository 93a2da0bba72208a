from .pipeline import (
    CampaignResult,
    CampaignState,
    MutantReportEntry,
    Trace,
    adjust_tests,
    gen_business_interface,
    gen_model,
    gen_mutations,
    gen_tests,
    load_templates,
    render_prompt,
    run_campaign,
)
from .providers import HttpChatProvider, ScriptedProvider, prompt_key

__all__ = [
    "CampaignResult",
    "CampaignState",
    "HttpChatProvider",
    "MutantReportEntry",
    "ScriptedProvider",
    "Trace",
    "adjust_tests",
    "gen_business_interface",
    "gen_model",
    "gen_mutations",
    "gen_tests",
    "load_templates",
    "prompt_key",
    "render_prompt",
    "run_campaign",
]

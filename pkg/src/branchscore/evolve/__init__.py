"""LLM-driven evolution of score programs over an island database."""

from .database import IslandDatabase, ProgramRecord, island_of
from .llm import LiveClient, LlmClientConfig, LlmError, ScriptedClient, make_client, parse_llm_response, query_llm
from .loop import EvolutionConfig, SolverEvaluator, evolve_loop
from .prompts import PromptBundle, build_prompt
from .sampling import diversity, edit_distance, jaccard_distance, sample_inspirations, sample_parent

__all__ = [
    "IslandDatabase", "ProgramRecord", "island_of",
    "LiveClient", "LlmClientConfig", "LlmError", "ScriptedClient", "make_client", "parse_llm_response", "query_llm",
    "EvolutionConfig", "SolverEvaluator", "evolve_loop",
    "PromptBundle", "build_prompt",
    "diversity", "edit_distance", "jaccard_distance", "sample_inspirations", "sample_parent",
]

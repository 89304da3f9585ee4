"""Prompt rendering, completion backends and response parsing."""

from .backends import (
    API_KEY_ENV,
    Backend,
    Exchange,
    HttpBackend,
    LlmParams,
    MockBackend,
    ask,
    complete,
    write_transcript,
)
from .parsing import (
    ParsedTable,
    Rejection,
    SuccessorProposal,
    extract_json,
    parse_generate_response,
    parse_resolve_response,
    parse_source_response,
    parse_table_response,
)
from .prompts import (
    Prompt,
    PromptKind,
    REPAIR_SUFFIX,
    render_data_gen_iso_prompt,
    render_data_gen_prompt,
    render_generate_prompt,
    render_resolve_prompt,
    render_source_prompt,
)

"""Streaming PII detection and masking for unstructured text."""

from maskron.bloom import (
    BloomFilter,
    DictionaryConfig,
    bloom_deserialize,
    bloom_insert,
    bloom_load_dictionary,
    bloom_new,
    bloom_query,
    bloom_serialize,
    scan_dictionary,
)
from maskron.evaluation import (
    AnnotatedDoc,
    Metrics,
    generate_synthetic_corpus,
    load_corpus,
    score,
)
from maskron.external import ExternalEndpoint, RemoteDetector, detect_remote, health_check
from maskron.masking import (
    Keyring,
    apply_policy,
    keygen,
    keyring_add,
    load_keyring,
    mask_custom_email,
    mask_encrypt,
    mask_hash,
    mask_pseudonymize,
    mask_redact,
    salt_gen,
    save_keyring,
    unmask,
)
from maskron.model import (
    Detection,
    MaskedDocument,
    PiiType,
    PolicyTable,
    Span,
    Strategy,
    spans_overlap,
    validate_policy,
)
from maskron.pipeline import (
    Config,
    Engine,
    MetricsReport,
    load_config,
    mask_text,
    merge_metrics,
    run_detect,
    run_mask,
)
from maskron.regex_detect import RegexRule, RuleSet, compile_ruleset, luhn_check, scan_regex
from maskron.resolve import resolve

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDoc",
    "BloomFilter",
    "Config",
    "Detection",
    "DictionaryConfig",
    "Engine",
    "ExternalEndpoint",
    "Keyring",
    "MaskedDocument",
    "Metrics",
    "MetricsReport",
    "PiiType",
    "PolicyTable",
    "RegexRule",
    "RemoteDetector",
    "RuleSet",
    "Span",
    "Strategy",
    "apply_policy",
    "bloom_deserialize",
    "bloom_insert",
    "bloom_load_dictionary",
    "bloom_new",
    "bloom_query",
    "bloom_serialize",
    "compile_ruleset",
    "detect_remote",
    "generate_synthetic_corpus",
    "health_check",
    "keygen",
    "keyring_add",
    "load_config",
    "load_corpus",
    "load_keyring",
    "luhn_check",
    "mask_custom_email",
    "mask_encrypt",
    "mask_hash",
    "mask_pseudonymize",
    "mask_redact",
    "mask_text",
    "merge_metrics",
    "resolve",
    "run_detect",
    "run_mask",
    "salt_gen",
    "save_keyring",
    "scan_dictionary",
    "scan_regex",
    "score",
    "spans_overlap",
    "unmask",
    "validate_policy",
]

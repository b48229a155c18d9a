"""Encrypt SSNs into reversible tokens, hash emails, then unmask.

Only holders of the keyring can restore encrypted values; hashed values stay
one-way but remain joinable (equal input, equal token).

Run: python demos/reversible_tokens.py
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from maskron import Config, keyring_add, load_keyring, mask_text, unmask, validate_policy


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        ring_path = Path(tmp) / "keyring.json"
        key_id, salt_id = keyring_add(ring_path)
        ring = load_keyring(ring_path)
        print(ring)  # ids only, never key material

        policy = validate_policy({
            "types": {
                "SSN": {"strategy": "ENCRYPT", "key_id": key_id},
                "EMAIL": {"strategy": "HASH", "salt_id": salt_id},
            }
        }, ring)
        engine = Config(policy=policy).build_engine(ring)

        text = "ssn 123-45-6789 filed by ann@example.com; cc ann@example.com\n"
        masked = mask_text(text, engine=engine)
        print(masked)
        restored = unmask(masked, ring)
        print(restored.text)
        print(f"restored {restored.restored} token(s); hash tokens left as they were")


if __name__ == "__main__":
    main()

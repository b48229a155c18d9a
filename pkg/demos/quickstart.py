"""Mask a few log lines with the default detectors and three strategies.

Run: python demos/quickstart.py
"""

from __future__ import annotations

from maskron import Config, mask_text, validate_policy

LINES = """\
My phone number is 111-111-1111
My email address is johndoe@example.com
refund for card 4111111111111111 approved, ssn on file 123-45-6789
"""


def main() -> None:
    # Default policy: every detected type is redacted to a <TYPE> placeholder.
    print(mask_text(LINES))

    # Format-preserving surrogates for phones, a masked local part for emails.
    policy = validate_policy({
        "types": {
            "PHONE_NUMBER": "PSEUDONYMIZE",
            "EMAIL": {"strategy": "CUSTOM_EMAIL", "length_mode": "MATCH"},
        }
    })
    print(mask_text(LINES, Config(policy=policy)))


if __name__ == "__main__":
    main()

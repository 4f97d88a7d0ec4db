"""Re-record fixtures/transcript.golden through the chat REPL.

The reference time is pinned so system-entity turns ("book a session at 5
pm") stay reproducible. Run from the repo root after changing fixtures:

    python3 scripts/record_transcript.py
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

REFERENCE_TIME = "2024-03-06T09:00:00"

TURNS = [
    "hello",
    "I want a diet plan",
    "suggest a vegan diet",
    "a keto diet please",
    "plan my arms workout",
    "exercises for my core",
    "book a session at 5 pm",
    "book a session with a trainer",
    "password doesn't work",
    "passwrd doesnt work",
    "I can't log in",
    "I need help with discovery",
    "tell me about dinosaurs",
    "schedule a yoga class for tomorrow",
    "book a session at noon",
    "what should I eat for lunch",
    "my member id is AB1234",
    "good morning",
    "see you later",
    "bye",
]


def record() -> bytes:
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "fitbot.cli",
            "chat",
            str(ROOT / "fixtures" / "fitness.json"),
            "--catalog",
            str(ROOT / "fixtures" / "tasks.json"),
            "--wordlist",
            str(ROOT / "fixtures" / "wordlist.tsv"),
            "--reference-time",
            REFERENCE_TIME,
        ],
        input="".join(t + "\n" for t in TURNS).encode("utf-8"),
        capture_output=True,
        cwd=ROOT,
        env={"PYTHONPATH": str(ROOT / "src"), "PATH": "/usr/bin:/bin"},
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr.decode())
        raise SystemExit(proc.returncode)
    return proc.stdout


def main() -> int:
    transcript = record()
    if record() != transcript:
        print("transcript is not reproducible across two runs", file=sys.stderr)
        return 1
    (ROOT / "fixtures" / "transcript.golden").write_bytes(transcript)
    sys.stdout.write(transcript.decode("utf-8"))
    print(f"wrote fixtures/transcript.golden ({len(TURNS)} turns)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

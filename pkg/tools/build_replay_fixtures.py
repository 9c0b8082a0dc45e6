#!/usr/bin/env python3
"""Rebuild the committed replay fixtures for the bundled AES corpus.

Drives the real pipeline with a scripted provider whose replies stand in
for a live model, recording every (digest, reply) the pipeline actually
requests. Re-run after any change to prompt rendering, the corpus, or the
end-to-end config (K=1, M=5, seed=7, mutant cap 20):

    python tools/build_replay_fixtures.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mtcgen import bundled_corpus_path, bundled_fixture_path
from mtcgen.gateway import Message, Provider, ProviderConfig, conversation_digest
from mtcgen.minilang.corpus import load_corpus
from mtcgen.minilang.interp import Limits
from mtcgen.pipeline import PipelineConfig, run_pipeline

E2E_MODEL = "mini-chat"
E2E_TEMPERATURE = 0.2
FIXTURE_NAME = "aes_replay.jsonl"

corpus = load_corpus(bundled_corpus_path("aes"))
DEFAULT_ABECEDARIUM = next(
    f.init.value
    for c in corpus.program.classes
    if c.name == "AESCodec"
    for f in c.fields
    if f.name == "defaultAbecedarium"
)
REVERSED_ABECEDARIUM = DEFAULT_ABECEDARIUM[::-1]


ROUND_TRIP_REPLY = """\
`decryptText` inverts `encryptText` under the same key, which gives the
round-trip relation x = decryptText(encryptText(x, key), key).

```
class EncryptDecryptMTC {
    @Test
    void roundTripPreservesPlainText() {
        string plainText = "Hello AES!";
        string secKey = AESCodec.getSecretEncryptionKey();
        list<int> cipherText = AESCodec.encryptText(plainText, secKey);
        string decryptedText = AESCodec.decryptText(cipherText, secKey);
        assertEquals(plainText, decryptedText);
    }
}
```
"""

ROUND_TRIP_AMPLIFIED_REPLY = """\
Applying the same relation to five new inputs, including special
characters, an underscore/digit mix, the empty string, and the default key:

```
class EncryptDecryptMTCAmplified {
    @Test
    void MTC_input1() {
        string text = "Hello!";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> encryptedText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptText(encryptedText, key);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input2() {
        string text = "~!@";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> encryptedText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptText(encryptedText, key);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input3() {
        string text = "_1234";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> encryptedText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptText(encryptedText, key);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input4() {
        string text = "";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> encryptedText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptText(encryptedText, key);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input5() {
        string text = "x Y z9";
        string key = AESCodec.defaultKey;
        list<int> encryptedText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptText(encryptedText, key);
        assertEquals(text, decryptedText);
    }
}
```
"""

# Case-slipped class name: every `aescodec` fails to resolve until the
# static repair pass rebinds it to `AESCodec`.
BROKEN_EXPLICIT_REPLY = """\
The explicit-abecedarium decoder should invert the default encoder:
x = decryptTextWithAbecedarium(encryptText(x, key), key, defaultAbecedarium).

```
class ExplicitAbecedariumMTC {
    @Test
    void roundTripWithExplicitAbecedarium() {
        string plainText = "Mini language";
        string key = aescodec.getSecretEncryptionKey();
        list<int> cipherText = aescodec.encryptText(plainText, key);
        string decryptedText = aescodec.decryptTextWithAbecedarium(cipherText, key, aescodec.defaultAbecedarium);
        assertEquals(plainText, decryptedText);
    }
}
```
"""

EXPLICIT_AMPLIFIED_REPLY = """\
Three further inputs for the explicit-abecedarium round trip:

```
class ExplicitAbecedariumMTCAmplified {
    @Test
    void MTC_input1() {
        string text = "abc";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> cipherText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptTextWithAbecedarium(cipherText, key, AESCodec.defaultAbecedarium);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input2() {
        string text = "XYZ 9";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> cipherText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptTextWithAbecedarium(cipherText, key, AESCodec.defaultAbecedarium);
        assertEquals(text, decryptedText);
    }
    @Test
    void MTC_input3() {
        string text = "%^&";
        string key = AESCodec.defaultKey;
        list<int> cipherText = AESCodec.encryptText(text, key);
        string decryptedText = AESCodec.decryptTextWithAbecedarium(cipherText, key, AESCodec.defaultAbecedarium);
        assertEquals(text, decryptedText);
    }
}
```
"""

INVALID_EQUIVALENCE_REPLY = f"""\
`encryptText` is a specialization of `encryptTextWithAbecedarium`, so both
should agree on the ciphertext for any abecedarium:

```
class EncryptEquivalenceMTC {{
    @Test
    void encryptMatchesExplicitAbecedarium() {{
        string text = "Hello!";
        string key = AESCodec.getSecretEncryptionKey();
        list<int> viaDefault = AESCodec.encryptText(text, key);
        list<int> viaCustom = AESCodec.encryptTextWithAbecedarium(text, key, "{REVERSED_ABECEDARIUM}");
        assertEquals(viaDefault, viaCustom);
    }}
}}
```
"""

SHIFT_PROSE_REPLY = (
    "I could not find a usable metamorphic relation for this pair. The "
    "helper derives a per-position shift offset; it has no inverse or peer "
    "method to relate its output against, so no test class is proposed."
)

SHIFT_PROSE_REVISION = (
    "After reviewing the diagnostics I still cannot propose a relation over "
    "this helper pair; the offset computation has no counterpart to couple "
    "with, so I have no corrected test class to offer."
)


def _identify_pair(prompt: str) -> str:
    # Only the paired-methods section: the class skeleton further down
    # lists every method signature and would match everything.
    section = prompt.split("# Coupling features", 1)[0]
    if "string decryptTextWithAbecedarium(" in section:
        return "explicit-decrypt"
    if "list<int> encryptTextWithAbecedarium(" in section:
        return "explicit-encrypt"
    if "string decryptText(" in section:
        return "roundtrip"
    if "int shiftAt(" in section:
        return "shift"
    raise AssertionError("unrecognized prompt")


class ScriptedRecorder(Provider):
    """Answers like the live model this fixture stands in for, while
    recording every exchange."""

    def __init__(self, fixture_path: Path):
        super().__init__()
        self.fixture_path = fixture_path
        self.lines: list[str] = []

    def complete(self, config: ProviderConfig, messages: list[Message]) -> str:
        import json

        last = messages[-1].content
        pair = _identify_pair(messages[1].content)
        if last.startswith("# Code of the paired methods"):
            reply = {
                "roundtrip": ROUND_TRIP_REPLY,
                "explicit-decrypt": BROKEN_EXPLICIT_REPLY,
                "explicit-encrypt": INVALID_EQUIVALENCE_REPLY,
                "shift": SHIFT_PROSE_REPLY,
            }[pair]
        elif last.startswith("The test class failed to execute."):
            reply = {
                "explicit-decrypt": BROKEN_EXPLICIT_REPLY,  # model fails to fix it
                "shift": SHIFT_PROSE_REVISION,
            }[pair]
        elif last.startswith("Review this conversation"):
            reply = {
                "roundtrip": ROUND_TRIP_AMPLIFIED_REPLY,
                "explicit-decrypt": EXPLICIT_AMPLIFIED_REPLY,
            }[pair]
        else:
            raise AssertionError(f"unexpected message: {last[:60]!r}")
        digest = conversation_digest(config.model, config.temperature, messages)
        self.lines.append(
            json.dumps({"digest": digest, "model": config.model, "reply": reply}, sort_keys=True)
        )
        return reply


def e2e_config(output_dir: str) -> PipelineConfig:
    return PipelineConfig(
        corpus_path=str(bundled_corpus_path("aes")),
        targets=["AESCodec.encryptText"],
        provider=ProviderConfig(
            kind="replay",
            model=E2E_MODEL,
            temperature=E2E_TEMPERATURE,
            fixture_path=str(bundled_fixture_path(FIXTURE_NAME)),
        ),
        k=1,
        m=5,
        mutant_cap=20,
        seed=7,
        # Mutants that break loop progress otherwise run to the default
        # million-step budget; legitimate corpus tests need only thousands.
        limits=Limits(max_steps=60_000, per_test_timeout=5.0),
        output_dir=output_dir,
    )


def main() -> None:
    fixture_path = bundled_fixture_path(FIXTURE_NAME)
    with tempfile.TemporaryDirectory() as tmp:
        config = e2e_config(tmp)
        recorder = ScriptedRecorder(fixture_path)
        run = run_pipeline(config, provider=recorder)
    fixture_path.parent.mkdir(parents=True, exist_ok=True)
    fixture_path.write_text("\n".join(recorder.lines) + "\n", encoding="utf-8")
    print(f"wrote {len(recorder.lines)} fixture lines to {fixture_path}")
    for task in run.report_json()["tasks"]:
        print(task["target"], task["metrics"])
        for pair in task["pairs"]:
            for attempt in pair["attempts"]:
                print(
                    " ", pair["candidate"],
                    "| executable:", attempt["executable"],
                    "| passes:", attempt["passesOnOriginal"],
                    "| decision:", attempt["decision"],
                )


if __name__ == "__main__":
    main()

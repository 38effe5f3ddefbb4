"""Seeded synthetic corpora for tests and demos.

The vocabulary is small on purpose: safe prompts then live in the span of a
few dozen fixed vectors, while any lexicon token drags the EOS embedding
toward the shared unsafe direction, so the two classes are cleanly separable
and a freshly trained recognizer behaves like the real thing at desk scale.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from safegate.datasets import PromptRecord
from safegate.encoding.reference import ReferenceEncoder, ReferenceEncoderConfig

SAFE_VOCAB: tuple[str, ...] = (
    "park", "bench", "dog", "cat", "tree", "river", "sunset", "mountain",
    "garden", "bicycle", "coffee", "window", "street", "cloud", "beach",
    "lantern", "violin", "bridge", "meadow", "kitten", "harbor", "library",
    "painting", "umbrella", "forest", "castle", "island", "market", "train",
    "balloon", "bakery", "snow",
)

UNSAFE_LEXICON: tuple[str, ...] = (
    "weapon", "gun", "blood", "gore", "corpse", "explosive",
    "massacre", "torture", "nude", "slaughter", "venom", "carnage",
)

TRAIN_CORPUS_SEED = 11
PLANTED_SEED = 23

_SAFE_LEN_RANGE = (2, 10)
_UNSAFE_LEN_RANGE = (3, 10)


@dataclass(frozen=True)
class PlantedPrompt:
    """A prompt with exactly one unsafe-lexicon token at a known position."""

    text: str
    tokens: tuple[str, ...]
    planted_index: int
    planted_token: str


def fixture_encoder(dim: int = 64, max_len: int = 77) -> ReferenceEncoder:
    """Reference encoder wired with the fixture's unsafe lexicon."""
    return ReferenceEncoder(
        ReferenceEncoderConfig(dim=dim, max_len=max_len, unsafe_lexicon=frozenset(UNSAFE_LEXICON))
    )


def synthetic_prompt_records(
    n_safe: int = 400, n_unsafe: int = 400, seed: int = TRAIN_CORPUS_SEED
) -> list[PromptRecord]:
    """Labeled corpus: safe prompts from the safe vocabulary, unsafe prompts
    with exactly one lexicon token planted at a random position."""
    rng = np.random.default_rng(seed)
    records: list[PromptRecord] = []
    for _ in range(n_safe):
        length = int(rng.integers(_SAFE_LEN_RANGE[0], _SAFE_LEN_RANGE[1] + 1))
        words = [SAFE_VOCAB[i] for i in rng.integers(0, len(SAFE_VOCAB), size=length)]
        records.append(PromptRecord(text=" ".join(words), label="safe", source="fixture"))
    for _ in range(n_unsafe):
        prompt = _planted_prompt(rng)
        records.append(PromptRecord(text=prompt.text, label="unsafe", source="fixture"))
    return records


def planted_prompts(count: int = 50, seed: int = PLANTED_SEED) -> list[PlantedPrompt]:
    """Prompts of length 3..10 with exactly one planted unsafe token each."""
    rng = np.random.default_rng(seed)
    return [_planted_prompt(rng) for _ in range(count)]


def _planted_prompt(rng: np.random.Generator) -> PlantedPrompt:
    length = int(rng.integers(_UNSAFE_LEN_RANGE[0], _UNSAFE_LEN_RANGE[1] + 1))
    words = [SAFE_VOCAB[i] for i in rng.integers(0, len(SAFE_VOCAB), size=length)]
    position = int(rng.integers(0, length))
    bad = UNSAFE_LEXICON[int(rng.integers(0, len(UNSAFE_LEXICON)))]
    words[position] = bad
    return PlantedPrompt(
        text=" ".join(words), tokens=tuple(words), planted_index=position, planted_token=bad
    )


def main(argv: list[str] | None = None) -> int:
    """Write the fixture corpora to JSONL files for CLI walkthroughs."""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixture_prompts.jsonl", help="labeled corpus path")
    parser.add_argument("--planted-out", default=None, help="optional planted-prompt path")
    parser.add_argument("--safe", type=int, default=400)
    parser.add_argument("--unsafe", type=int, default=400)
    parser.add_argument("--seed", type=int, default=TRAIN_CORPUS_SEED)
    args = parser.parse_args(argv)

    records = synthetic_prompt_records(args.safe, args.unsafe, args.seed)
    with Path(args.out).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(
                json.dumps({"text": record.text, "label": record.label, "source": record.source})
                + "\n"
            )
    print(f"wrote {len(records)} records to {args.out}")

    if args.planted_out:
        prompts = planted_prompts()
        with Path(args.planted_out).open("w", encoding="utf-8") as handle:
            for prompt in prompts:
                handle.write(
                    json.dumps(
                        {
                            "text": prompt.text,
                            "planted_index": prompt.planted_index,
                            "planted_token": prompt.planted_token,
                        }
                    )
                    + "\n"
                )
        print(f"wrote {len(prompts)} planted prompts to {args.planted_out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

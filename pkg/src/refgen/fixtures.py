"""A small hand-annotated corpus: three 5-round games over 27 images.

Game ``g1`` follows the camera-guy chain of the original corpus's example
dialogue.  Every message that describes an image carries a gold link, so
the fixture doubles as an extraction benchmark.  Image features are
seeded random vectors.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .corpus.schema import GameLog, Message, RoundLog, SelectionEvent, save_games, write_jsonl

FEATURE_DIM = 2048

CAPTIONS = {
    "img_1": ["a woman holding a red umbrella in the rain", "woman with an umbrella walking down a wet street",
              "a lady with a red umbrella", "person under an umbrella on a rainy day", "woman carrying a red umbrella"],
    "img_2": ["a man riding a skateboard down a ramp", "a skateboarder doing a trick", "man on a skateboard in a park",
              "a guy skateboarding on the street", "skateboard rider jumping"],
    "img_3": ["a lady carrying a basket of fruit", "woman with a basket on her arm", "a woman holding a wicker basket",
              "lady at a market with a basket", "woman carrying fruit in a basket"],
    "img_4": ["a man taking a picture with a camera", "a guy holding a camera up to his face",
              "photographer taking a photo", "a man with a camera taking pictures", "person photographing with a camera"],
    "img_5": ["a woman walking on a runway in a dress", "model on a fashion runway", "a woman in a long dress on the catwalk",
              "fashion show with a model", "a model walking the runway"],
    "img_6": ["a boy flying a kite on the beach", "child with a kite at the beach", "a kid holding a kite string",
              "boy playing with a kite near the ocean", "a young boy flies a kite"],
    "img_7": ["a man with a headband and a tattoo", "tattooed man wearing a headband", "a guy with tattoos on his arm",
              "man with a headband playing tennis", "a tattooed guy in a headband"],
    "img_8": ["a girl eating a slice of pizza", "young girl with pizza", "a girl biting into a pizza slice",
              "child eating pizza at a table", "girl holding a piece of pizza"],
    "img_9": ["an old man reading a newspaper on a bench", "elderly man sitting on a bench with a paper",
              "a man reads the newspaper in the park", "old man on a park bench", "senior reading a newspaper outside"],
    "img_10": ["a dog sitting next to a wine glass", "dog at a table with a glass of wine", "a dog and a wine glass",
               "puppy near a glass of red wine", "a dog looking at a wine glass"],
    "img_11": ["a dog catching a frisbee in the park", "dog jumping for a frisbee", "a dog with a frisbee in its mouth",
               "dog leaping to catch a frisbee", "a brown dog catches a frisbee"],
    "img_12": ["a puppy sleeping on a couch", "small dog asleep on the sofa", "a puppy napping on a couch",
               "dog curled up on a couch", "sleeping puppy on the sofa"],
    "img_13": ["a dog looking out of a car window", "dog with its head out the car window", "a dog riding in a car",
               "dog in the back seat of a car", "a dog sticking its head out of a car"],
    "img_14": ["a brown dog with a red collar on the grass", "dog wearing a red collar", "a brown dog lying in the grass",
               "dog with a collar sitting on grass", "brown dog in a grassy field"],
    "img_15": ["a dog wearing sunglasses", "dog with sunglasses on its face", "a funny dog in sunglasses",
               "dog wearing dark glasses", "a dog with shades on"],
    "img_16": ["two dogs playing in the snow", "dogs running in snow", "a pair of dogs in the snow",
               "two dogs wrestling in the snow", "dogs playing together in snow"],
    "img_17": ["a dog with a birthday cake", "dog in front of a cake with candles", "a dog looking at a birthday cake",
               "dog wearing a party hat next to a cake", "birthday cake and a dog"],
    "img_18": ["a dog next to a bicycle", "dog sitting by a bike", "a dog in the basket of a bicycle",
               "dog near a parked bike", "a dog and a bicycle on the street"],
    "img_19": ["pink bowls with rice and broccoli salad", "two pink bowls of rice and broccoli",
               "rice and broccoli in pink bowls", "a pink bowl of broccoli salad", "bowls of rice and vegetables"],
    "img_20": ["a pizza on a wooden table", "pizza on a wooden board", "a large pizza on a table",
               "a cheese pizza on a wooden table", "pizza sitting on wood"],
    "img_21": ["a sandwich with fries on a plate", "sandwich and french fries", "a plate with a sandwich and fries",
               "a club sandwich with fries", "sandwich with a side of fries"],
    "img_22": ["a bowl of soup with bread", "soup and a piece of bread", "a bowl of tomato soup with bread",
               "bread next to a bowl of soup", "hot soup with bread on the side"],
    "img_23": ["a cake with strawberries on top", "strawberry cake on a plate", "a white cake with strawberries",
               "cake topped with fresh strawberries", "a slice of strawberry cake"],
    "img_24": ["donuts in a box", "a box of glazed donuts", "a dozen donuts in a box",
               "donuts with sprinkles in a box", "open box of donuts"],
    "img_25": ["a hot dog with mustard", "hot dog with yellow mustard", "a hot dog in a bun with mustard",
               "hotdog covered in mustard", "a hot dog on a napkin"],
    "img_26": ["a salad with tomatoes", "green salad with cherry tomatoes", "a bowl of salad with tomatoes",
               "salad with lettuce and tomatoes", "fresh salad with tomato slices"],
    "img_27": ["a plate of pasta with a fork", "pasta on a plate with a fork", "a plate of spaghetti with a fork",
               "noodles on a plate with a fork", "a fork in a plate of pasta"],
}

# Scene-graph tokens for a minority of images, as in the original data.
VISUAL_GENOME = {
    "img_2": {"attributes": ["wooden skateboard", "young man", "gray ramp"],
              "relations": ["man riding skateboard", "skateboard on ramp"]},
    "img_4": {"attributes": ["black camera", "young man", "blue shirt"],
              "relations": ["man holding camera", "man wearing shirt"]},
    "img_7": {"attributes": ["white headband", "black tattoo", "tall man"],
              "relations": ["man wearing headband", "tattoo on man"]},
    "img_11": {"attributes": ["red frisbee", "brown dog", "green grass"],
               "relations": ["dog catching frisbee", "dog above grass"]},
    "img_15": {"attributes": ["black sunglasses", "small dog"],
               "relations": ["dog wearing sunglasses"]},
    "img_19": {"attributes": ["pink bowl", "green broccoli", "white rice"],
               "relations": ["rice in bowl", "broccoli in bowl"]},
    "img_22": {"attributes": ["red soup", "brown bread", "white bowl"],
               "relations": ["soup in bowl", "bread next to bowl"]},
    "img_25": {"attributes": ["yellow mustard", "long hot dog"],
               "relations": ["mustard on hot dog", "dog in bun"]},
    "img_27": {"attributes": ["silver fork", "white plate", "pasta"],
               "relations": ["fork in pasta", "pasta on plate"]},
}


def _i(*nums: int) -> list[str]:
    return [f"img_{n}" for n in nums]


# Round scripts.  ("A"/"B", text, gold image or None) is a message;
# ("sel", speaker, image, label) is a selection right after the last message.
GAMES = {
    "g1": ("train", [
        (_i(1, 2, 3, 4, 5, 6), _i(4, 3, 7, 8, 9, 1), [
            ("A", "hi there", None),
            ("B", "hello!", None),
            ("A", "I see a guy taking a picture. What about you?", "img_4"),
            ("B", "yes I have him", None),
            ("sel", "A", "img_4", "common"), ("sel", "B", "img_4", "common"),
            ("B", "do you have a lady with a basket of fruit?", "img_3"),
            ("A", "yes", None),
            ("sel", "A", "img_3", "common"), ("sel", "B", "img_3", "common"),
            ("A", "woman with a red umbrella?", "img_1"),
            ("B", "got it", None),
            ("sel", "A", "img_1", "common"), ("sel", "B", "img_1", "common"),
            ("A", "skateboard man?", "img_2"),
            ("B", "no", None),
            ("A", "boy with a kite on the beach", "img_6"),
            ("B", "nope", None),
            ("sel", "A", "img_2", "different"), ("sel", "A", "img_6", "different"), ("sel", "A", "img_5", "different"),
            ("B", "I have a man with a headband and a tattoo", "img_7"),
            ("A", "don't have that", None),
            ("sel", "B", "img_7", "different"), ("sel", "B", "img_8", "different"), ("sel", "B", "img_9", "different"),
        ]),
        (_i(4, 2, 8, 7, 3, 5), _i(4, 6, 9, 2, 1, 3), [
            ("B", "guy with camera", "img_4"),
            ("A", "yes", None),
            ("sel", "A", "img_4", "common"), ("sel", "B", "img_4", "common"),
            ("A", "skateboard man again", "img_2"),
            ("B", "yep", None),
            ("sel", "A", "img_2", "common"), ("sel", "B", "img_2", "common"),
            ("B", "basket lady", "img_3"),
            ("A", "have it", None),
            ("sel", "A", "img_3", "common"), ("sel", "B", "img_3", "common"),
            ("A", "girl eating pizza?", "img_8"),
            ("B", "no", None),
            ("sel", "A", "img_8", "different"), ("sel", "A", "img_7", "different"), ("sel", "A", "img_5", "different"),
            ("B", "kite boy?", "img_6"),
            ("A", "no", None),
            ("sel", "B", "img_6", "different"), ("sel", "B", "img_9", "different"), ("sel", "B", "img_1", "different"),
        ]),
        (_i(1, 4, 9, 6, 3, 7), _i(4, 5, 8, 2, 6, 1), [
            ("A", "I have the guy with camera", "img_4"),
            ("B", "me too", None),
            ("sel", "A", "img_4", "common"), ("sel", "B", "img_4", "common"),
            ("B", "umbrella woman again", "img_1"),
            ("A", "yes", None),
            ("sel", "A", "img_1", "common"), ("sel", "B", "img_1", "common"),
            ("A", "kite boy on the beach", "img_6"),
            ("B", "yes!", None),
            ("sel", "A", "img_6", "common"), ("sel", "B", "img_6", "common"),
            ("A", "that's all", None),
            ("sel", "A", "img_9", "different"), ("sel", "A", "img_3", "different"), ("sel", "A", "img_7", "different"),
            ("sel", "B", "img_5", "different"), ("sel", "B", "img_8", "different"), ("sel", "B", "img_2", "different"),
        ]),
        (_i(5, 7, 2, 8, 9, 3), _i(7, 2, 5, 1, 6, 4), [
            ("B", "the headband guy with the tattoo", "img_7"),
            ("A", "yes", None),
            ("sel", "A", "img_7", "common"), ("sel", "B", "img_7", "common"),
            ("A", "runway woman in a dress?", "img_5"),
            ("B", "got it", None),
            ("sel", "A", "img_5", "common"), ("sel", "B", "img_5", "common"),
            ("B", "skateboard guy", "img_2"),
            ("A", "yup", None),
            ("sel", "A", "img_2", "common"), ("sel", "B", "img_2", "common"),
            ("sel", "A", "img_8", "different"), ("sel", "A", "img_9", "different"), ("sel", "A", "img_3", "different"),
            ("sel", "B", "img_1", "different"), ("sel", "B", "img_6", "different"), ("sel", "B", "img_4", "different"),
        ]),
        (_i(4, 1, 3, 5, 7, 8), _i(3, 9, 4, 7, 1, 6), [
            ("B", "umbrella lady", "img_1"),
            ("A", "yes", None),
            ("sel", "A", "img_1", "common"), ("sel", "B", "img_1", "common"),
            ("A", "basket lady again", "img_3"),
            ("B", "yes", None),
            ("sel", "A", "img_3", "common"), ("sel", "B", "img_3", "common"),
            ("B", "tattoo guy", "img_7"),
            ("A", "yep", None),
            ("sel", "A", "img_7", "common"), ("sel", "B", "img_7", "common"),
            ("A", "The last one is the camera guy.", "img_4"),
            ("B", "yes, same", None),
            ("sel", "A", "img_4", "common"), ("sel", "B", "img_4", "common"),
            ("sel", "A", "img_5", "different"), ("sel", "A", "img_8", "different"),
            ("sel", "B", "img_9", "different"), ("sel", "B", "img_6", "different"),
        ]),
    ]),
    "g2": ("val", [
        (_i(10, 11, 12, 13, 14, 15), _i(10, 16, 12, 17, 18, 11), [
            ("B", "hey", None),
            ("A", "hi! first one is a dog with a wine glass", "img_10"),
            ("B", "I have that one", None),
            ("sel", "A", "img_10", "common"), ("sel", "B", "img_10", "common"),
            ("B", "dog catching a frisbee in the park?", "img_11"),
            ("A", "yes", None),
            ("sel", "A", "img_11", "common"), ("sel", "B", "img_11", "common"),
            ("A", "puppy sleeping on a couch", "img_12"),
            ("B", "yes got it", None),
            ("sel", "A", "img_12", "common"), ("sel", "B", "img_12", "common"),
            ("A", "dog in a car window?", "img_13"),
            ("B", "no", None),
            ("sel", "A", "img_13", "different"), ("sel", "A", "img_14", "different"), ("sel", "A", "img_15", "different"),
            ("B", "two dogs playing in the snow", "img_16"),
            ("A", "nope", None),
            ("sel", "B", "img_16", "different"), ("sel", "B", "img_17", "different"), ("sel", "B", "img_18", "different"),
        ]),
        (_i(10, 15, 16, 13, 18, 17), _i(15, 10, 14, 13, 11, 12), [
            ("A", "do you have the dog with sunglasses?", "img_15"),
            ("B", "yes", None),
            ("sel", "A", "img_15", "common"), ("sel", "B", "img_15", "common"),
            ("B", "wine glass dog", "img_10"),
            ("A", "yes", None),
            ("sel", "A", "img_10", "common"), ("sel", "B", "img_10", "common"),
            ("A", "dog with head out of the car window", "img_13"),
            ("B", "have it", None),
            ("sel", "A", "img_13", "common"), ("sel", "B", "img_13", "common"),
            ("B", "ok", None),
            ("sel", "A", "img_16", "different"), ("sel", "A", "img_18", "different"), ("sel", "A", "img_17", "different"),
            ("sel", "B", "img_14", "different"), ("sel", "B", "img_11", "different"), ("sel", "B", "img_12", "different"),
        ]),
        (_i(11, 14, 17, 10, 12, 16), _i(14, 18, 10, 15, 11, 13), [
            ("B", "frisbee dog", "img_11"),
            ("A", "yes", None),
            ("sel", "A", "img_11", "common"), ("sel", "B", "img_11", "common"),
            ("A", "brown dog with a red collar on the grass", "img_14"),
            ("B", "got it", None),
            ("sel", "A", "img_14", "common"), ("sel", "B", "img_14", "common"),
            ("B", "the wine glass dog again", "img_10"),
            ("A", "yep", None),
            ("sel", "A", "img_10", "common"), ("sel", "B", "img_10", "common"),
            ("sel", "A", "img_17", "different"), ("sel", "A", "img_12", "different"), ("sel", "A", "img_16", "different"),
            ("sel", "B", "img_18", "different"), ("sel", "B", "img_15", "different"), ("sel", "B", "img_13", "different"),
        ]),
        (_i(12, 13, 15, 18, 14, 11), _i(12, 17, 15, 16, 10, 18), [
            ("A", "sleeping puppy", "img_12"),
            ("B", "yes", None),
            ("sel", "A", "img_12", "common"), ("sel", "B", "img_12", "common"),
            ("B", "sunglasses dog", "img_15"),
            ("A", "same", None),
            ("sel", "A", "img_15", "common"), ("sel", "B", "img_15", "common"),
            ("A", "dog by a bike?", "img_18"),
            ("B", "yes i have the bike dog", "img_18"),
            ("sel", "A", "img_18", "common"), ("sel", "B", "img_18", "common"),
            ("sel", "A", "img_13", "different"), ("sel", "A", "img_14", "different"), ("sel", "A", "img_11", "different"),
            ("sel", "B", "img_17", "different"), ("sel", "B", "img_16", "different"), ("sel", "B", "img_10", "different"),
        ]),
        (_i(10, 11, 14, 15, 16, 17), _i(17, 11, 10, 12, 14, 13), [
            ("B", "birthday cake dog?", "img_17"),
            ("A", "yes", None),
            ("sel", "A", "img_17", "common"), ("sel", "B", "img_17", "common"),
            ("A", "wine dog", "img_10"),
            ("B", "yes", None),
            ("sel", "A", "img_10", "common"), ("sel", "B", "img_10", "common"),
            ("B", "frisbee dog again", "img_11"),
            ("A", "yep and the collar dog", "img_14"),
            ("sel", "A", "img_11", "common"), ("sel", "B", "img_11", "common"),
            ("sel", "A", "img_14", "common"), ("sel", "B", "img_14", "common"),
            ("sel", "A", "img_15", "different"), ("sel", "A", "img_16", "different"),
            ("sel", "B", "img_12", "different"), ("sel", "B", "img_13", "different"),
        ]),
    ]),
    "g3": ("test", [
        (_i(19, 20, 21, 22, 23, 24), _i(19, 25, 21, 26, 27, 20), [
            ("A", "hello", None),
            ("B", "hi", None),
            ("A", "pink bowls rice and broccoli salad next to it", "img_19"),
            ("B", "yes", None),
            ("sel", "A", "img_19", "common"), ("sel", "B", "img_19", "common"),
            ("B", "a pizza on a wooden table", "img_20"),
            ("A", "yes i see it", None),
            ("sel", "A", "img_20", "common"), ("sel", "B", "img_20", "common"),
            ("A", "sandwich with fries", "img_21"),
            ("B", "got it", None),
            ("sel", "A", "img_21", "common"), ("sel", "B", "img_21", "common"),
            ("A", "soup with bread?", "img_22"),
            ("B", "no", None),
            ("sel", "A", "img_22", "different"), ("sel", "A", "img_23", "different"), ("sel", "A", "img_24", "different"),
            ("B", "i also have a hot dog with mustard", "img_25"),
            ("A", "no", None),
            ("sel", "B", "img_25", "different"), ("sel", "B", "img_26", "different"), ("sel", "B", "img_27", "different"),
        ]),
        (_i(19, 22, 23, 25, 26, 27), _i(22, 19, 24, 20, 21, 23), [
            ("B", "pink bowls again", "img_19"),
            ("A", "yes", None),
            ("sel", "A", "img_19", "common"), ("sel", "B", "img_19", "common"),
            ("A", "bowl of soup with bread", "img_22"),
            ("B", "yes", None),
            ("sel", "A", "img_22", "common"), ("sel", "B", "img_22", "common"),
            ("B", "cake with strawberries on top?", "img_23"),
            ("A", "have it", None),
            ("sel", "A", "img_23", "common"), ("sel", "B", "img_23", "common"),
            ("sel", "A", "img_25", "different"), ("sel", "A", "img_26", "different"), ("sel", "A", "img_27", "different"),
            ("sel", "B", "img_24", "different"), ("sel", "B", "img_20", "different"), ("sel", "B", "img_21", "different"),
        ]),
        (_i(20, 24, 21, 25, 26, 22), _i(25, 20, 27, 24, 23, 19), [
            ("A", "the pizza again", "img_20"),
            ("B", "yes", None),
            ("sel", "A", "img_20", "common"), ("sel", "B", "img_20", "common"),
            ("B", "box of donuts", "img_24"),
            ("A", "yes", None),
            ("sel", "A", "img_24", "common"), ("sel", "B", "img_24", "common"),
            ("A", "hot dog with mustard", "img_25"),
            ("B", "same", None),
            ("sel", "A", "img_25", "common"), ("sel", "B", "img_25", "common"),
            ("sel", "A", "img_21", "different"), ("sel", "A", "img_26", "different"), ("sel", "A", "img_22", "different"),
            ("sel", "B", "img_27", "different"), ("sel", "B", "img_23", "different"), ("sel", "B", "img_19", "different"),
        ]),
        (_i(27, 19, 23, 25, 21, 26), _i(26, 27, 22, 19, 24, 21), [
            ("B", "salad with tomatoes", "img_26"),
            ("A", "yes", None),
            ("sel", "A", "img_26", "common"), ("sel", "B", "img_26", "common"),
            ("A", "plate of pasta with a fork", "img_27"),
            ("B", "got it", None),
            ("sel", "A", "img_27", "common"), ("sel", "B", "img_27", "common"),
            ("B", "rice broccoli pink bowls", "img_19"),
            ("A", "yes", None),
            ("sel", "A", "img_19", "common"), ("sel", "B", "img_19", "common"),
            ("B", "sandwich fries?", "img_21"),
            ("A", "yup", None),
            ("sel", "A", "img_21", "common"), ("sel", "B", "img_21", "common"),
            ("sel", "A", "img_23", "different"), ("sel", "A", "img_25", "different"),
            ("sel", "B", "img_22", "different"), ("sel", "B", "img_24", "different"),
        ]),
        (_i(20, 22, 24, 26, 27, 23), _i(23, 27, 20, 25, 19, 21), [
            ("A", "strawberry cake", "img_23"),
            ("B", "yes", None),
            ("sel", "A", "img_23", "common"), ("sel", "B", "img_23", "common"),
            ("B", "pasta fork", "img_27"),
            ("A", "yes", None),
            ("sel", "A", "img_27", "common"), ("sel", "B", "img_27", "common"),
            ("A", "pizza on the wood table again", "img_20"),
            ("B", "same", None),
            ("sel", "A", "img_20", "common"), ("sel", "B", "img_20", "common"),
            ("sel", "A", "img_22", "different"), ("sel", "A", "img_24", "different"), ("sel", "A", "img_26", "different"),
            ("sel", "B", "img_25", "different"), ("sel", "B", "img_19", "different"), ("sel", "B", "img_21", "different"),
        ]),
    ]),
}


def _build_game(game_id: str, split: str, rounds_spec) -> tuple[GameLog, list[dict]]:
    rounds, gold = [], []
    next_id = 0
    for r_idx, (view_a, view_b, script) in enumerate(rounds_spec, start=1):
        messages, selections = [], []
        for item in script:
            if item[0] == "sel":
                _, speaker, image, label = item
                selections.append(SelectionEvent(speaker, image, label, messages[-1].message_id if messages else None))
                continue
            speaker, text, target = item
            messages.append(Message(next_id, speaker, text))
            if target is not None:
                gold.append({"game_id": game_id, "round_index": r_idx, "message_id": next_id, "image_id": target})
            next_id += 1
        rounds.append(RoundLog(r_idx, tuple(messages), tuple(selections), {"A": tuple(view_a), "B": tuple(view_b)}))
    return GameLog(game_id, tuple(rounds), split), gold


def fixture_games() -> list[GameLog]:
    return [_build_game(gid, split, spec)[0] for gid, (split, spec) in GAMES.items()]


def fixture_gold() -> set[tuple[str, int, int, str]]:
    links = set()
    for gid, (split, spec) in GAMES.items():
        for rec in _build_game(gid, split, spec)[1]:
            links.add((rec["game_id"], rec["round_index"], rec["message_id"], rec["image_id"]))
    return links


def image_features(image_ids, dim: int = FEATURE_DIM) -> dict[str, np.ndarray]:
    """Nonnegative pseudo-random features (ReLU-like) seeded by the image id."""
    out = {}
    for img in sorted(image_ids):
        seed = int.from_bytes(hashlib.blake2b(img.encode(), digest_size=8).digest(), "little")
        rng = np.random.default_rng(seed)
        out[img] = np.maximum(rng.standard_normal(dim), 0).astype(np.float32)
    return out


def save_features(path: str | Path, features: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, **{k: features[k] for k in sorted(features)})


def load_features(path: str | Path) -> dict[str, np.ndarray]:
    with np.load(path) as data:
        return {k: data[k].astype(np.float32) for k in data.files}


def write_fixture(directory: str | Path) -> dict[str, str]:
    """Write games, captions, scene-graph tokens, features and gold links to ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "games": directory / "games.jsonl",
        "captions": directory / "captions.json",
        "vg": directory / "vg.json",
        "features": directory / "features.npz",
        "gold": directory / "gold.jsonl",
    }
    save_games(paths["games"], fixture_games())
    paths["captions"].write_text(json.dumps(CAPTIONS, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    paths["vg"].write_text(json.dumps(VISUAL_GENOME, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    save_features(paths["features"], image_features(CAPTIONS))
    write_jsonl(paths["gold"], (dict(zip(("game_id", "round_index", "message_id", "image_id"), link))
                                for link in sorted(fixture_gold())))
    return {k: str(v) for k, v in paths.items()}


def load_gold(path: str | Path) -> set[tuple[str, int, int, str]]:
    from .corpus.schema import read_jsonl

    return {(r["game_id"], int(r["round_index"]), int(r["message_id"]), r["image_id"]) for r in read_jsonl(path)}

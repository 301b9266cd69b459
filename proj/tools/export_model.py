"""Exports an MNLI sequence-classification checkpoint for the native scorer.

    python3 tools/export_model.py microsoft/deberta-large-mnli --backend-id dlm --out-dir models/dlm
    python3 tools/export_model.py roberta-large-mnli --backend-id rlm --out-dir models/rlm

The output directory holds config.json, model.safetensors (float32),
vocab.json, merges.txt, manifest.json (checksums, label order, pair
template) and reference.json: token ids, logits and probabilities from
PyTorch for a 50-pair fixture. `entrank_acceptance export_agreement`
compares the native scorer against reference.json.
"""

import argparse
import hashlib
import json
import pathlib
import shutil
import sys

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

PREMISES = [
    "A man is sleeping.",
    "Police fired tear gas at protesters outside the district office on Monday.",
    "Hundreds of workers marched through the city to demand higher wages.",
    "The officers arrested three men after the clash near the market.",
    "Police failed to intervene when the crowd attacked the shop.",
    "A constable was suspended after a man died in custody.",
    "The minister opened a new bridge over the river.",
    "Farmers blocked the highway for six hours in protest against the new law.",
    "The court granted bail to the two accused.",
    "Officers beat students with batons during the demonstration.",
]
HYPOTHESES = [
    "A man is sleeping.",
    "There is a protest.",
    "Police killed someone.",
    "Police arrested someone.",
    "Police used violence.",
]
TOKENIZE_CASES = [
    "A man is sleeping.",
    "Police didn't arrest anyone; 25 were injured.",
    "  Leading spaces and\nnew lines\ttabs.",
    "Unicode: café naïve “quotes” 東京",
]


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def pair_template(tokenizer):
    # Encode a probe pair and replace the two segments with placeholders.
    a = tokenizer.encode("premise", add_special_tokens=False)
    b = tokenizer.encode("hypothesis", add_special_tokens=False)
    ids = tokenizer("premise", "hypothesis")["input_ids"]
    template, i = [], 0
    while i < len(ids):
        if ids[i:i + len(a)] == a and "$A" not in template:
            template.append("$A")
            i += len(a)
        elif ids[i:i + len(b)] == b and "$A" in template:
            template.append("$B")
            i += len(b)
        else:
            template.append(tokenizer.convert_ids_to_tokens(ids[i]))
            i += 1
    if template.count("$A") != 1 or template.count("$B") != 1:
        sys.exit(f"cannot derive a pair template from {ids}")
    return template


# transformers 5 builds DeBERTa pairs with a doubled separator; the v1 MNLI
# checkpoints were fine-tuned on the single-separator form.
DEBERTA_TEMPLATE = ["[CLS]", "$A", "[SEP]", "$B", "[SEP]"]


def assemble(tokenizer, template, premise, hypothesis):
    segments = {"$A": tokenizer.encode(premise, add_special_tokens=False),
                "$B": tokenizer.encode(hypothesis, add_special_tokens=False)}
    ids = []
    for item in template:
        ids.extend(segments[item] if item in segments else tokenizer.convert_tokens_to_ids([item]))
    return ids


def reference(model, tokenizer, template):
    cases = [{"text": t, "ids": tokenizer.encode(t, add_special_tokens=False)} for t in TOKENIZE_CASES]
    pairs = []
    for premise in PREMISES:
        for hypothesis in HYPOTHESES:
            ids = assemble(tokenizer, template, premise, hypothesis)
            with torch.no_grad():
                logits = model(input_ids=torch.tensor([ids])).logits[0].double()
            probs = torch.softmax(logits, dim=-1)
            pairs.append({
                "premise": premise,
                "hypothesis": hypothesis,
                "ids": ids,
                "logits": [float(x) for x in logits],
                "probs": [float(x) for x in probs],
            })
    return {"tokenize": cases, "pairs": pairs}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("checkpoint", help="Hub id or local checkpoint directory")
    ap.add_argument("--backend-id", required=True)
    ap.add_argument("--out-dir", required=True, type=pathlib.Path)
    ap.add_argument("--revision", default=None, help="Hub revision to pin (default: the resolved commit)")
    ap.add_argument("--max-tokens", type=int, default=512)
    ap.add_argument("--pair-template", default=None,
                    help='space-separated override, e.g. "[CLS] $A [SEP] $B [SEP]"')
    ap.add_argument("--skip-self-test", action="store_true", help="for untrained test checkpoints")
    args = ap.parse_args()

    tokenizer = AutoTokenizer.from_pretrained(args.checkpoint, revision=args.revision, use_fast=False)
    model = AutoModelForSequenceClassification.from_pretrained(args.checkpoint, revision=args.revision)
    model = model.float().eval()
    if model.config.model_type not in {"roberta", "deberta"}:
        sys.exit(f"unsupported model type {model.config.model_type!r} (roberta, deberta)")

    out = args.out_dir
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    model.save_pretrained(out, safe_serialization=True)
    tokenizer.backend_tokenizer.model.save(str(out))
    for extra in out.iterdir():
        if extra.name not in {"config.json", "model.safetensors", "vocab.json", "merges.txt"}:
            extra.unlink()

    id2label = model.config.id2label
    labels = [id2label[i].lower() for i in range(len(id2label))]
    if sorted(labels) != ["contradiction", "entailment", "neutral"]:
        sys.exit(f"checkpoint labels {labels} are not an NLI class order")
    if args.pair_template:
        template = args.pair_template.split()
    elif model.config.model_type == "deberta":
        template = DEBERTA_TEMPLATE
    else:
        template = pair_template(tokenizer)
    revision = args.revision or getattr(model.config, "_commit_hash", None) or "unknown"

    manifest = {
        "backend_id": args.backend_id,
        "source_checkpoint": args.checkpoint,
        "revision": revision,
        "max_tokens": args.max_tokens,
        "label_order": labels,
        "pair_template": template,
        "unk_token": tokenizer.unk_token,
        "files": {
            key: {"path": name, "sha256": sha256(out / name)}
            for key, name in [("model", "model.safetensors"), ("config", "config.json"),
                              ("vocab", "vocab.json"), ("merges", "merges.txt")]
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    ref = reference(model, tokenizer, template)
    (out / "reference.json").write_text(json.dumps(ref, indent=1, ensure_ascii=False) + "\n")

    sleeping = ref["pairs"][0]["probs"][labels.index("entailment")]
    print(f"exported {args.checkpoint} -> {out} (labels {labels}, template {manifest['pair_template']})")
    print(f"self-test: P(entailment | 'A man is sleeping.', 'A man is sleeping.') = {sleeping:.4f}")
    if sleeping <= 0.9 and not args.skip_self_test:
        sys.exit("self-test failed: entailment probability not above 0.9")


if __name__ == "__main__":
    main()

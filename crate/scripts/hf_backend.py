#!/usr/bin/env python3
"""Model backend for `lexsimp --providers remote`, built on Hugging Face models.

Speaks the line-delimited JSON protocol on stdin/stdout, so it can be used as

    lexsimp simplify ... --providers remote --endpoint "exec:python3 scripts/hf_backend.py"

or served over TCP with `--listen HOST:PORT`.

Embeddings are not served from here; point the `embeddings` config key at a
fastText `.vec` file instead.
"""
import argparse
import json
import socketserver
import sys

import torch
from transformers import (
    AutoModelForMaskedLM,
    AutoModelForSequenceClassification,
    AutoTokenizer,
)


class Backend:
    def __init__(self, mlm_name, nli_name, device):
        self.device = device
        self.mlm_tok = AutoTokenizer.from_pretrained(mlm_name)
        self.mlm = AutoModelForMaskedLM.from_pretrained(mlm_name).to(device).eval()
        self.nli_tok = AutoTokenizer.from_pretrained(nli_name)
        self.nli = AutoModelForSequenceClassification.from_pretrained(nli_name).to(device).eval()
        labels = {v.lower(): k for k, v in self.nli.config.id2label.items()}
        self.entail_idx = labels["entailment"]

    @torch.no_grad()
    def _mask_distribution(self, segments):
        segs = [s.replace("<mask>", self.mlm_tok.mask_token) for s in segments]
        enc = self.mlm_tok(*segs, return_tensors="pt", truncation=True).to(self.device)
        pos = (enc["input_ids"][0] == self.mlm_tok.mask_token_id).nonzero()
        if len(pos) != 1:
            raise ValueError(f"expected one mask token, found {len(pos)}")
        logits = self.mlm(**enc).logits[0, pos[0, 0]]
        return torch.softmax(logits, dim=-1)

    def masked_topk(self, args):
        probs = self._mask_distribution(args["segments"])
        targets = args.get("targets")
        if targets is not None:
            out = []
            for word in targets:
                ids = self.mlm_tok.encode(" " + word, add_special_tokens=False)
                out.append(float(probs[ids[0]]) if ids else 0.0)
            return {"probs": out}
        top = torch.topk(probs, min(int(args["k"]), probs.shape[0]))
        pieces = self.mlm_tok.convert_ids_to_tokens(top.indices.tolist())
        return {"candidates": [[p, float(v)] for p, v in zip(pieces, top.values.tolist())]}

    @torch.no_grad()
    def entail(self, args):
        enc = self.nli_tok(args["premise"], args["hypothesis"], return_tensors="pt", truncation=True)
        logits = self.nli(**enc.to(self.device)).logits[0]
        return {"prob": float(torch.softmax(logits, dim=-1)[self.entail_idx])}

    def handle(self, line):
        req_id = 0
        try:
            req = json.loads(line)
            req_id = req["id"]
            op = req["op"]
            if op == "masked_topk":
                result = self.masked_topk(req["args"])
            elif op == "entail":
                result = self.entail(req["args"])
            else:
                raise ValueError(f"unsupported op {op!r}")
            return {"id": req_id, "result": result}
        except Exception as e:  # reported to the client, which exits with code 3
            return {"id": req_id, "error": f"{type(e).__name__}: {e}"}


def serve_stream(backend, lines, write):
    for line in lines:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if line.strip():
            write(json.dumps(backend.handle(line)) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mlm", default="roberta-base")
    ap.add_argument("--nli", default="roberta-large-mnli")
    ap.add_argument("--device", default="cuda" if torch.cuda.is_available() else "cpu")
    ap.add_argument("--listen", help="HOST:PORT to serve over TCP instead of stdio")
    opts = ap.parse_args()
    backend = Backend(opts.mlm, opts.nli, opts.device)

    if not opts.listen:
        def write(text):
            sys.stdout.write(text)
            sys.stdout.flush()

        serve_stream(backend, sys.stdin, write)
        return

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            def write(text):
                self.wfile.write(text.encode("utf-8"))
                self.wfile.flush()

            serve_stream(backend, self.rfile, write)

    host, port = opts.listen.rsplit(":", 1)
    with socketserver.TCPServer((host, int(port)), Handler) as server:
        print(f"listening on {opts.listen}", file=sys.stderr)
        server.serve_forever()


if __name__ == "__main__":
    main()

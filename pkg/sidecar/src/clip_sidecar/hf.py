"""CLIP text-encoder backend via transformers.

Loads a pretrained CLIP text model (ViT-L/14 by default: 77 positions, 768
hidden, 12 layers x 12 heads) and serves its hidden states and post-softmax
self-attention maps. eos_index is the first position the tokenizer assigns
the end-of-sequence id (CLIP pads with that same id, so first occurrence is
the pooled one). Attention rows at pad source positions are zeroed to match
the wire protocol's invariants.
"""

from __future__ import annotations

import numpy as np

from clip_sidecar.config import SidecarConfig


class HFCLIPTextEncoder:
    def __init__(self, cfg: SidecarConfig):
        import torch
        from transformers import CLIPTokenizer, CLIPTextModel

        self._torch = torch
        self.cfg = cfg
        self.tokenizer = CLIPTokenizer.from_pretrained(cfg.model_name)
        self.model = CLIPTextModel.from_pretrained(cfg.model_name, attn_implementation="eager")
        self.model.to(cfg.device)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.max_len = int(self.model.config.max_position_embeddings)
        self.layers = int(self.model.config.num_hidden_layers)
        if self.max_len != cfg.max_len:
            raise ValueError(
                f"configured max_len {cfg.max_len} does not match the model's {self.max_len}"
            )

    @property
    def encoder_id(self) -> str:
        return self.cfg.model_name

    def encode(self, prompt: str, want_attention: bool):
        torch = self._torch
        batch = self.tokenizer(
            prompt,
            padding="max_length",
            truncation=True,
            max_length=self.max_len,
            return_tensors="pt",
        )
        input_ids = batch["input_ids"].to(self.cfg.device)
        with torch.no_grad():
            out = self.model(input_ids=input_ids, output_attentions=want_attention)
        matrix = out.last_hidden_state[0].cpu().numpy().astype(np.float32)

        ids = input_ids[0].tolist()
        eos_id = self.tokenizer.eos_token_id
        eos_index = ids.index(eos_id)  # first EOS; pads reuse the same id
        tokens = self.tokenizer.convert_ids_to_tokens(ids[1:eos_index])

        maps = None
        if want_attention:
            stacked = torch.stack(out.attentions, dim=0)[:, 0]  # layers x heads x T x T
            maps = stacked.cpu().numpy().astype(np.float32)
            maps[:, :, eos_index + 1 :, :] = 0.0
        return matrix, eos_index, list(tokens), maps

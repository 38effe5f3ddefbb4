"""Client tests against a minimal in-process embedding server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from safegate.errors import ProtocolViolation, TransportError
from safegate.encoding.remote import RemoteEncoder, embed_remote, parse_embed_response
from safegate.encoding.types import extract_eos

DIM = 8
MAX_LEN = 6


def _healthy_payload(prompt: str, want_attention: bool) -> dict:
    tokens = prompt.lower().split()[: MAX_LEN - 2]
    eos_index = len(tokens) + 1
    rng = np.random.default_rng(abs(hash(prompt)) % (2**32))
    rows = np.zeros((MAX_LEN, DIM))
    for i in range(eos_index + 1):
        vec = rng.standard_normal(DIM)
        rows[i] = vec / np.linalg.norm(vec)
    payload = {
        "encoder_id": "fake-sidecar",
        "dim": DIM,
        "max_len": MAX_LEN,
        "eos_index": eos_index,
        "tokens": tokens,
        "embedding": rows.tolist(),
    }
    if want_attention:
        att = np.zeros((2, 2, MAX_LEN, MAX_LEN))
        nonpad = eos_index + 1
        att[:, :, :nonpad, :nonpad] = 1.0 / nonpad
        payload["attention"] = att.tolist()
    return payload


class _Handler(BaseHTTPRequestHandler):
    override: dict | None = None  # merged over the healthy payload
    drop_fields: tuple[str, ...] = ()
    status_code: int = 200

    def do_POST(self):
        if self.path != "/v1/embed":
            self.send_error(404)
            return
        length = int(self.headers.get("content-length", 0))
        body = json.loads(self.rfile.read(length))
        payload = _healthy_payload(body["prompt"], body.get("return_attention", False))
        if type(self).override:
            payload.update(type(self).override)
        for field in type(self).drop_fields:
            payload.pop(field, None)
        data = json.dumps(payload).encode()
        self.send_response(type(self).status_code)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def server():
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    _Handler.override = None
    _Handler.drop_fields = ()
    _Handler.status_code = 200
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()
    httpd.server_close()


def test_healthy_roundtrip(server):
    res = embed_remote("a dog", server)
    assert res.matrix.dim == DIM
    assert res.matrix.max_len == MAX_LEN
    assert res.matrix.eos_index == 3
    assert res.encoder_id == "fake-sidecar"
    assert res.attention is None


def test_eos_matches_reported_row(server):
    res = embed_remote("a dog", server)
    assert np.array_equal(extract_eos(res), res.matrix.rows[res.matrix.eos_index])


def test_deterministic_server_gives_identical_embeddings(server):
    first = embed_remote("same prompt", server)
    second = embed_remote("same prompt", server)
    assert np.allclose(first.matrix.rows, second.matrix.rows, atol=1e-6)


def test_attention_roundtrip(server):
    res = embed_remote("a dog", server, want_attention=True)
    assert res.attention is not None
    assert res.attention.weights.shape == (2, 2, MAX_LEN, MAX_LEN)


def test_bad_eos_index_rejected(server):
    _Handler.override = {"eos_index": 0, "tokens": []}
    with pytest.raises(ProtocolViolation):
        embed_remote("a dog", server)


def test_missing_field_rejected(server):
    _Handler.drop_fields = ("embedding",)
    with pytest.raises(ProtocolViolation):
        embed_remote("a dog", server)


def test_wrong_row_count_rejected(server):
    _Handler.override = {"max_len": MAX_LEN + 1}
    with pytest.raises(ProtocolViolation):
        embed_remote("a dog", server)


def test_server_error_status_rejected(server):
    _Handler.status_code = 500
    with pytest.raises(ProtocolViolation):
        embed_remote("a dog", server)


def test_unreachable_endpoint_is_transport_error():
    with pytest.raises(TransportError):
        embed_remote("a dog", "http://127.0.0.1:1", timeout=0.5)


def test_remote_encoder_facade(server):
    enc = RemoteEncoder(server)
    res = enc.encode_text("a dog")
    assert res.matrix.dim == DIM
    assert enc.encoder_id.startswith("remote:")


def _payload(**kwargs):
    base = _healthy_payload("a dog", False)
    base.update(kwargs)
    return base


def test_parse_rejects_non_object():
    with pytest.raises(ProtocolViolation):
        parse_embed_response([1, 2, 3])


def test_parse_rejects_ragged_rows():
    bad = _payload()
    bad["embedding"][2] = bad["embedding"][2][:-1]
    with pytest.raises(ProtocolViolation):
        parse_embed_response(bad)


def test_parse_rejects_token_count_mismatch():
    with pytest.raises(ProtocolViolation):
        parse_embed_response(_payload(tokens=["a", "dog", "extra"]))


def test_parse_rejects_non_finite():
    bad = _payload()
    bad["embedding"][0][0] = float("nan")
    with pytest.raises(ProtocolViolation):
        parse_embed_response(bad)


def test_parse_rejects_bad_attention_shape():
    bad = _payload(attention=np.zeros((1, 1, 2, 2)).tolist())
    with pytest.raises(ProtocolViolation):
        parse_embed_response(bad)


def test_parse_rejects_attention_bad_row_sums():
    att = np.zeros((1, 1, MAX_LEN, MAX_LEN))
    att[0, 0, 0, 0] = 0.4  # non-pad row sums to 0.4, not 1
    bad = _payload(attention=att.tolist())
    with pytest.raises(ProtocolViolation):
        parse_embed_response(bad)


def test_parse_rejects_nonzero_pad_attention():
    payload = _healthy_payload("a dog", True)
    att = np.array(payload["attention"])
    att[0, 0, MAX_LEN - 1, 0] = 0.5  # pad source row must be zero
    payload["attention"] = att.tolist()
    with pytest.raises(ProtocolViolation):
        parse_embed_response(payload)


def test_parse_rejects_string_dim():
    with pytest.raises(ProtocolViolation):
        parse_embed_response(_payload(dim="8"))

import json
import logging

import httpx
import pytest

from sqltokopt.core import count_tokens
from sqltokopt.errors import CacheMiss, ConflictingRecording, ProviderError, Timeout
from sqltokopt.gateway import (
    BackendKind,
    GenerationRequest,
    HttpBackend,
    MockBackend,
    RecordingBackend,
    ReplayBackend,
    ReplayCache,
    cache_key,
    sql_payload,
)

REQ = GenerationRequest("SELECT 1", "sys")


def chat(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


class TestKey:
    def test_stable(self):
        # sha256 of "sys\x1fSELECT 1\x1fgpt-4o\x1f0.0", fixed across runs and platforms
        import hashlib

        assert cache_key(REQ) == hashlib.sha256(b"sys\x1fSELECT 1\x1fgpt-4o\x1f0.0").hexdigest()

    @pytest.mark.parametrize(
        "other",
        [
            GenerationRequest("SELECT 1", "sys2"),
            GenerationRequest("SELECT 2", "sys"),
            GenerationRequest("SELECT 1", "sys", model_name="m"),
            GenerationRequest("SELECT 1", "sys", temperature=0.7),
        ],
    )
    def test_sensitive(self, other):
        assert cache_key(other) != cache_key(REQ)

    def test_empty_prompt(self):
        with pytest.raises(ValueError):
            GenerationRequest("", "sys")


class TestMock:
    def test_identity(self):
        r = MockBackend().generate(REQ)
        assert r.text == "SELECT 1" and r.backend is BackendKind.MOCK and r.output_tokens == 3

    def test_strips_scaffolding(self):
        prompt = "META kind=QUERY plsql=0 exc=false\nSELECT a FROM t"
        assert MockBackend().generate(GenerationRequest(prompt, "s")).text == "SELECT a FROM t"
        assert sql_payload("LEGEND END IF=EIF:\nBEGIN EIF:; END;") == "BEGIN EIF:; END;"

    def test_keeps_sql_named_meta(self):
        assert sql_payload("META") == "META"


class TestReplay:
    def test_record_then_generate(self, tmp_path):
        cache = ReplayCache(tmp_path / "c.jsonl")
        assert cache.record(REQ, "SELECT 1;")
        r = ReplayBackend(cache).generate(REQ)
        assert r.text == "SELECT 1;" and r.output_tokens == count_tokens("SELECT 1;")
        reloaded = ReplayCache(tmp_path / "c.jsonl")
        assert ReplayBackend(reloaded).generate(REQ).text == "SELECT 1;"

    def test_file_format(self, tmp_path):
        path = tmp_path / "c.jsonl"
        ReplayCache(path).record(REQ, "x")
        assert json.loads(path.read_text()) == {"key": cache_key(REQ), "model": "gpt-4o", "response": "x"}

    def test_double_record(self, tmp_path):
        cache = ReplayCache(tmp_path / "c.jsonl")
        cache.record(REQ, "x")
        assert not cache.record(REQ, "x")
        assert len((tmp_path / "c.jsonl").read_text().splitlines()) == 1

    def test_conflict(self):
        cache = ReplayCache()
        cache.record(REQ, "x")
        with pytest.raises(ConflictingRecording):
            cache.record(REQ, "y")

    def test_miss(self):
        with pytest.raises(CacheMiss) as info:
            ReplayBackend(ReplayCache()).generate(REQ)
        assert info.value.key == cache_key(REQ)


class TestHttp:
    def backend(self, handler, **kw):
        sleeps = []
        b = HttpBackend("https://llm.invalid/v1/chat", transport=httpx.MockTransport(handler), sleep=sleeps.append, **kw)
        return b, sleeps

    def test_success_payload(self, monkeypatch):
        monkeypatch.setenv("LLM_API_KEY", "sk-secret")
        seen = {}

        def handler(request):
            seen["body"] = json.loads(request.content)
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json=chat("SELECT 1;"))

        b, _ = self.backend(handler)
        r = b.generate(REQ)
        assert r.text == "SELECT 1;" and r.backend is BackendKind.HTTP
        assert seen["body"] == {
            "model": "gpt-4o",
            "temperature": 0.0,
            "messages": [{"role": "system", "content": "sys"}, {"role": "user", "content": "SELECT 1"}],
        }
        assert seen["auth"] == "Bearer sk-secret"

    def test_retries_5xx_then_succeeds(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(503, text="busy") if len(calls) < 3 else httpx.Response(200, json=chat("ok"))

        b, sleeps = self.backend(handler)
        assert b.generate(REQ).text == "ok"
        assert sleeps == [1.0, 2.0]

    def test_gives_up_after_three(self, monkeypatch, caplog):
        monkeypatch.setenv("LLM_API_KEY", "sk-secret")
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(500, text="boom")

        b, _ = self.backend(handler)
        with caplog.at_level(logging.DEBUG), pytest.raises(ProviderError) as info:
            b.generate(REQ)
        assert len(calls) == 3 and info.value.status == 500
        assert "sk-secret" not in caplog.text and "sk-secret" not in str(info.value)

    def test_4xx_not_retried(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(401, text="bad key")

        b, _ = self.backend(handler)
        with pytest.raises(ProviderError):
            b.generate(REQ)
        assert len(calls) == 1

    def test_timeout(self):
        def handler(request):
            raise httpx.ReadTimeout("slow", request=request)

        b, sleeps = self.backend(handler)
        with pytest.raises(Timeout):
            b.generate(REQ)
        assert len(sleeps) == 2

    def test_malformed_body(self):
        b, _ = self.backend(lambda request: httpx.Response(200, json={"nope": 1}))
        with pytest.raises(ProviderError):
            b.generate(REQ)

    def test_recording(self, tmp_path):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(200, json=chat("SELECT 2"))

        b, _ = self.backend(handler)
        cache = ReplayCache(tmp_path / "c.jsonl")
        rec = RecordingBackend(b, cache)
        assert rec.generate(REQ).text == "SELECT 2"
        assert rec.generate(REQ).text == "SELECT 2"
        assert len(calls) == 1
        assert ReplayBackend(ReplayCache(tmp_path / "c.jsonl")).generate(REQ).text == "SELECT 2"

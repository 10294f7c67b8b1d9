import math

import pytest
import requests

from xlrobust.errors import FetchError, LexiconError
from xlrobust.lexicon import (
    Lexicon,
    LexiconKind,
    RateLimiter,
    clean_title,
    fetch_category,
    load_lexicon,
    make_lexicon,
    sample,
    save_lexicon,
)
from xlrobust.seeds import SeedStream

FAST = RateLimiter(per_second=1e9)


class FakeResponse:
    def __init__(self, payload=None, status=200):
        self.payload = payload
        self.status_code = status

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"{self.status_code}")

    def json(self):
        if self.payload is None:
            raise ValueError("no json body")
        return self.payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append(dict(params))
        if not self.responses:
            raise requests.ConnectionError("out of canned responses")
        return self.responses.pop(0)


def members_page(titles, cmcontinue=None, ns=0):
    payload = {"query": {"categorymembers": [{"title": t, "ns": ns} for t in titles]}}
    if cmcontinue:
        payload["continue"] = {"cmcontinue": cmcontinue}
    return FakeResponse(payload)


def fetch(session, **kwargs):
    kwargs.setdefault("retry_delay", 0.0)
    kwargs.setdefault("limiter", FAST)
    return fetch_category("br", LexiconKind.GIVEN_NAMES, endpoint="https://wiki.test/api",
                          session=session, **kwargs)


class TestFetchCategory:
    def test_dedup_and_sort(self):
        session = FakeSession([members_page(["Yann", "Yann", "Nolwenn"])])
        lexicon = fetch(session)
        assert lexicon.entries == ("Nolwenn", "Yann")
        assert lexicon.language == "br"

    def test_pagination_follows_continuation(self):
        session = FakeSession([
            members_page(["Anna"], cmcontinue="page2"),
            members_page(["Bora"]),
        ])
        lexicon = fetch(session)
        assert lexicon.entries == ("Anna", "Bora")
        assert "cmcontinue" not in session.calls[0]
        assert session.calls[1]["cmcontinue"] == "page2"

    def test_page_limit_stops_pagination(self):
        session = FakeSession([
            members_page(["Anna"], cmcontinue="page2"),
            members_page(["Bora"], cmcontinue="page3"),
        ])
        lexicon = fetch(session, page_limit=2)
        assert lexicon.entries == ("Anna", "Bora")
        assert len(session.calls) == 2

    def test_server_errors_retried_then_surfaced(self):
        session = FakeSession([FakeResponse(status=500)] * 3)
        with pytest.raises(FetchError):
            fetch(session)
        assert len(session.calls) == 3

    def test_recovers_after_transient_error(self):
        session = FakeSession([FakeResponse(status=500), members_page(["Anna"])])
        assert fetch(session).entries == ("Anna",)

    def test_malformed_response_is_an_error(self):
        session = FakeSession([FakeResponse({"nonsense": True})])
        with pytest.raises(FetchError):
            fetch(session)

    def test_empty_category_warns_but_succeeds(self, caplog):
        session = FakeSession([members_page([])])
        with caplog.at_level("WARNING"):
            lexicon = fetch(session)
        assert lexicon.entries == ()
        assert "no usable titles" in caplog.text

    def test_non_main_namespace_members_skipped(self):
        payload = {"query": {"categorymembers": [
            {"title": "Category:Breton surnames", "ns": 14},
            {"title": "Yann", "ns": 0},
        ]}}
        session = FakeSession([FakeResponse(payload)])
        assert fetch(session).entries == ("Yann",)

    def test_category_template_uses_language_name(self):
        session = FakeSession([members_page([])])
        fetch(session, language_name="Breton")
        assert session.calls[0]["cmtitle"] == "Category:Breton given names"

    def test_cache_allows_offline_rerun(self, tmp_path):
        online = FakeSession([members_page(["Yann"])])
        first = fetch(online, cache_dir=tmp_path)
        offline = FakeSession([])  # any request would raise
        second = fetch(offline, cache_dir=tmp_path)
        assert first == second
        assert offline.calls == []


class TestCleanTitle:
    @pytest.mark.parametrize("raw,expected", [
        ("Yann", "Yann"),
        ("Appendix:Yann", "Yann"),
        ("Yann (given name)", "Yann"),
        ("Menez Are", "Menez Are"),
    ])
    def test_cleanup(self, raw, expected):
        assert clean_title(raw) == expected


class TestLexiconFile:
    def test_load_simple_file(self, tmp_path):
        path = tmp_path / "names.txt"
        path.write_text("#lang=br kind=given-names\nYann\n", encoding="utf-8")
        lexicon = load_lexicon(path)
        assert lexicon == Lexicon("br", LexiconKind.GIVEN_NAMES, ("Yann",))

    def test_save_load_round_trip(self, tmp_path):
        lexicon = make_lexicon("br", LexiconKind.PLACES, ["Pariz", "Brest", "Menez Are"])
        path = tmp_path / "places.txt"
        save_lexicon(lexicon, path)
        assert load_lexicon(path) == lexicon

    def test_missing_header_is_an_error(self, tmp_path):
        path = tmp_path / "names.txt"
        path.write_text("Yann\n", encoding="utf-8")
        with pytest.raises(LexiconError):
            load_lexicon(path)

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "names.txt"
        path.write_text("#lang=br kind=places\n\nPariz\n\n", encoding="utf-8")
        assert load_lexicon(path).entries == ("Pariz",)

    def test_duplicate_entries_rejected_at_construction(self):
        with pytest.raises(LexiconError):
            Lexicon("br", LexiconKind.PLACES, ("Pariz", "Pariz"))


class TestSample:
    def test_singleton_always_returned(self):
        lexicon = make_lexicon("br", LexiconKind.GIVEN_NAMES, ["Yann"])
        for seed in (0, 1, 42):
            gen = SeedStream(seed).generator()
            assert sample(lexicon, gen) == "Yann"

    def test_fixed_seed_reproduces_sequence(self):
        lexicon = make_lexicon("br", LexiconKind.GIVEN_NAMES,
                               [f"Name{i}" for i in range(25)])
        first = [sample(lexicon, gen) for gen in [SeedStream(42).generator()] for _ in range(50)]
        second = [sample(lexicon, gen) for gen in [SeedStream(42).generator()] for _ in range(50)]
        assert first == second

    def test_empty_lexicon_is_an_error(self):
        lexicon = make_lexicon("br", LexiconKind.GIVEN_NAMES, [])
        with pytest.raises(LexiconError):
            sample(lexicon, SeedStream(1).generator())

    def test_draws_are_uniform_within_3_sigma(self):
        entries = [f"Name{i}" for i in range(10)]
        lexicon = make_lexicon("br", LexiconKind.GIVEN_NAMES, entries)
        gen = SeedStream(7).generator()
        draws = 100_000
        counts = {entry: 0 for entry in entries}
        for _ in range(draws):
            counts[sample(lexicon, gen)] += 1
        expected = draws / len(entries)
        sigma = math.sqrt(draws * 0.1 * 0.9)
        for entry, count in counts.items():
            assert abs(count - expected) <= 3 * sigma, (entry, count)

"""Per-language given-name and placename lists scraped from wiki categories.

Lists come from the MediaWiki `list=categorymembers` API with cmcontinue
pagination. Responses can be cached on disk so dataset builds stay
reproducible after category membership drifts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .errors import FetchError, LexiconError
from .seeds import choose

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://en.wiktionary.org/w/api.php"
MAX_ATTEMPTS = 3
PAGE_SIZE = 500

_NAMESPACE_PREFIX = re.compile(r"^[^\s:]+:")
_TRAILING_PAREN = re.compile(r"\s*\([^()]*\)\s*$")


class LexiconKind(Enum):
    GIVEN_NAMES = "given-names"
    PLACES = "places"


CATEGORY_TEMPLATES = {
    LexiconKind.GIVEN_NAMES: "{language} given names",
    LexiconKind.PLACES: "{language}:Places",
}


@dataclass(frozen=True)
class Lexicon:
    language: str
    kind: LexiconKind
    entries: tuple[str, ...]

    def __post_init__(self):
        if any(not e.strip() for e in self.entries):
            raise LexiconError("lexicon entries must be nonempty")
        if len(set(self.entries)) != len(self.entries):
            raise LexiconError("lexicon entries must be unique")

    def __len__(self) -> int:
        return len(self.entries)


def make_lexicon(language: str, kind: LexiconKind, raw_entries) -> Lexicon:
    """Normalize raw titles: strip, dedup, sort by code point for reproducible sampling."""
    cleaned = {e.strip() for e in raw_entries if e and e.strip()}
    return Lexicon(language, kind, tuple(sorted(cleaned)))


class RateLimiter:
    """Caps requests per second across threads; shared by all fetches to one endpoint."""

    def __init__(self, per_second: float = 5.0):
        self._interval = 1.0 / per_second
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self):
        with self._lock:
            now = time.monotonic()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self._interval
        if delay > 0:
            time.sleep(delay)


_default_limiter = RateLimiter()


def clean_title(title: str) -> str:
    """Drop a namespace prefix and a trailing parenthetical disambiguator."""
    title = _NAMESPACE_PREFIX.sub("", title, count=1)
    title = _TRAILING_PAREN.sub("", title)
    return title.strip()


def _cache_path(cache_dir: Path, endpoint: str, category: str, token: str) -> Path:
    key = hashlib.sha256(f"{endpoint}\x1f{category}\x1f{token}".encode()).hexdigest()[:24]
    return cache_dir / f"categorymembers-{key}.json"


def _request_page(session, endpoint: str, params: dict, retry_delay: float,
                  limiter: RateLimiter) -> dict:
    last_error = None
    for attempt in range(MAX_ATTEMPTS):
        if attempt:
            time.sleep(retry_delay * 2 ** (attempt - 1))
        limiter.wait()
        try:
            response = session.get(endpoint, params=params, timeout=30)
            if response.status_code >= 500:
                last_error = FetchError(f"server error {response.status_code} from {endpoint}")
                continue
            response.raise_for_status()
            return response.json()
        except (requests.RequestException, ValueError) as exc:
            last_error = FetchError(f"request to {endpoint} failed: {exc}")
    raise last_error


def fetch_category(language: str, kind: LexiconKind,
                   endpoint: str = DEFAULT_ENDPOINT,
                   page_limit: int = 100,
                   category: str | None = None,
                   language_name: str | None = None,
                   session=None,
                   cache_dir: str | Path | None = None,
                   retry_delay: float = 0.5,
                   limiter: RateLimiter | None = None) -> Lexicon:
    """Fetch every member title of a wiki category, following cmcontinue tokens.

    `category` overrides the per-kind template (which is filled with
    `language_name`, falling back to the ISO code). Titles in non-main
    namespaces are skipped; the rest are cleaned, deduplicated, and sorted.
    Network failures raise FetchError after bounded retries; an empty
    category yields an empty lexicon with a warning.
    """
    if category is None:
        category = CATEGORY_TEMPLATES[kind].format(language=language_name or language)
    session = session or requests.Session()
    cache = Path(cache_dir) if cache_dir else None
    if cache:
        cache.mkdir(parents=True, exist_ok=True)

    titles: list[str] = []
    token = ""
    for _ in range(page_limit):
        params = {
            "action": "query",
            "list": "categorymembers",
            "cmtitle": f"Category:{category}",
            "cmlimit": PAGE_SIZE,
            "format": "json",
        }
        if token:
            params["cmcontinue"] = token
        data = None
        cache_file = _cache_path(cache, endpoint, category, token) if cache else None
        if cache_file and cache_file.exists():
            data = json.loads(cache_file.read_text(encoding="utf-8"))["response"]
        if data is None:
            data = _request_page(session, endpoint, params, retry_delay,
                                 limiter or _default_limiter)
            if cache_file:
                cache_file.write_text(json.dumps({
                    "endpoint": endpoint,
                    "category": category,
                    "cmcontinue": token,
                    "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                    "response": data,
                }, ensure_ascii=False), encoding="utf-8")
        try:
            members = data["query"]["categorymembers"]
        except (KeyError, TypeError) as exc:
            raise FetchError(f"malformed API response for {category!r}: {exc}") from exc
        for member in members:
            if member.get("ns", 0) != 0:
                continue
            cleaned = clean_title(member["title"])
            if cleaned:
                titles.append(cleaned)
        token = data.get("continue", {}).get("cmcontinue", "")
        if not token:
            break
    if not titles:
        logger.warning("category %r on %s returned no usable titles", category, endpoint)
    return make_lexicon(language, kind, titles)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#lang={lexicon.language} kind={lexicon.kind.value}\n")
        for entry in lexicon.entries:
            fh.write(entry + "\n")


def load_lexicon(path: str | Path) -> Lexicon:
    """Read a saved lexicon; the header line is mandatory, blank lines are ignored."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        match = re.fullmatch(r"#lang=(\S+) kind=(\S+)", header)
        if not match:
            raise LexiconError(f"{path}: missing '#lang=<code> kind=<kind>' header")
        try:
            kind = LexiconKind(match.group(2))
        except ValueError as exc:
            raise LexiconError(f"{path}: unknown lexicon kind {match.group(2)!r}") from exc
        entries = [line.strip() for line in fh if line.strip()]
    return make_lexicon(match.group(1), kind, entries)


def sample(lexicon: Lexicon, gen) -> str:
    """Uniform draw; deterministic for a fixed generator state."""
    if not lexicon.entries:
        raise LexiconError(f"cannot sample from empty {lexicon.kind.value} lexicon")
    return choose(gen, list(lexicon.entries))

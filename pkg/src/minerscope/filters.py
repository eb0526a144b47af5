"""NoCoin-style filter list parsing and script matching.

Supported rule subset: '!' comments, '||host^' domain anchors, '/regex/'
regular expressions, and bare substrings. Hosts match case-insensitively;
substring and regex rules are case-sensitive unless matching is invoked
with the fold-case flag.
"""

import re
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urlsplit

RULE_COMMENT = "comment"
RULE_DOMAIN_ANCHOR = "domain_anchor"
RULE_REGEX = "regex"
RULE_SUBSTRING = "substring"


@dataclass(frozen=True)
class FilterRule:
    raw: str
    kind: str
    host: Optional[str] = None          # domain_anchor only
    pattern: Optional[re.Pattern] = None  # regex only; None when unusable
    label: str = ""
    error: Optional[str] = None

    @property
    def usable(self) -> bool:
        return self.kind not in (RULE_COMMENT,) and self.error is None


@dataclass(frozen=True)
class ScriptItem:
    position: int
    src: Optional[str] = None
    inline_code: Optional[str] = None


@dataclass(frozen=True)
class RuleHit:
    rule: FilterRule
    script: ScriptItem
    label: str


def _second_level_label(host: str) -> str:
    parts = host.lower().strip(".").split(".")
    if len(parts) >= 2:
        return parts[-2]
    return parts[0]


def parse_rule(line: str) -> Optional[FilterRule]:
    """Parse one filter-list line; returns None for blanks."""
    line = line.strip()
    if not line:
        return None
    if line.startswith("!"):
        return FilterRule(raw=line, kind=RULE_COMMENT)
    if line.startswith("||"):
        rest = line[2:]
        host = re.split(r"[\^/\$]", rest, maxsplit=1)[0].lower().strip(".")
        return FilterRule(raw=line, kind=RULE_DOMAIN_ANCHOR, host=host,
                          label=_second_level_label(host))
    if len(line) >= 2 and line.startswith("/") and line.endswith("/"):
        body = line[1:-1]
        try:
            return FilterRule(raw=line, kind=RULE_REGEX,
                              pattern=re.compile(body), label=line)
        except re.error as exc:
            return FilterRule(raw=line, kind=RULE_REGEX, pattern=None,
                              label=line, error=str(exc))
    return FilterRule(raw=line, kind=RULE_SUBSTRING, label=line)


def load_filter_list(text: str) -> list[FilterRule]:
    rules = []
    for line in text.splitlines():
        rule = parse_rule(line)
        if rule is not None:
            rules.append(rule)
    return rules


def url_host(url: str) -> str:
    if "//" not in url:
        url = "//" + url
    return (urlsplit(url).hostname or "").lower()


def host_matches(script_host: str, rule_host: str) -> bool:
    """Equality or subdomain-of, case-insensitive."""
    script_host = script_host.lower().strip(".")
    rule_host = rule_host.lower().strip(".")
    return script_host == rule_host or script_host.endswith("." + rule_host)


def _script_texts(script: ScriptItem) -> list[str]:
    texts = []
    if script.src:
        texts.append(script.src)
    if script.inline_code:
        texts.append(script.inline_code)
    return texts


def match_script(rule: FilterRule, script: ScriptItem,
                 fold_case: bool = False) -> bool:
    if not rule.usable:
        return False
    if rule.kind == RULE_DOMAIN_ANCHOR:
        if not script.src:
            return False
        host = url_host(script.src)
        return bool(host) and host_matches(host, rule.host)
    if rule.kind == RULE_REGEX:
        pattern = rule.pattern
        if fold_case:
            pattern = re.compile(pattern.pattern, pattern.flags | re.IGNORECASE)
        return any(pattern.search(t) for t in _script_texts(script))
    needle = rule.raw.lower() if fold_case else rule.raw
    for text in _script_texts(script):
        if fold_case:
            text = text.lower()
        if needle in text:
            return True
    return False


def match_page(scripts: list[ScriptItem], rules: list[FilterRule],
               fold_case: bool = False) -> list[RuleHit]:
    """Every (rule, script) hit on the page; page labels are the distinct
    labels of the hits."""
    hits = []
    for rule in rules:
        for script in scripts:
            if match_script(rule, script, fold_case=fold_case):
                hits.append(RuleHit(rule=rule, script=script, label=rule.label))
    return hits


def page_labels(hits: list[RuleHit]) -> list[str]:
    seen: dict[str, None] = {}
    for hit in hits:
        seen.setdefault(hit.label)
    return list(seen)

#!/usr/bin/env python3
"""Independent tallies over an mbox corpus, for freezing into test data.

Uses only the standard library's mailbox/email parsers plus brute-force
threading and pair counting, so it shares no code with the C++ library.

    fixture_oracle.py CORPUS.mbox [--list ID]            print JSON
    fixture_oracle.py CORPUS.mbox --check EXPECTED.json  exit 1 on mismatch
"""

import argparse
import datetime as dt
import email.header
import email.utils
import json
import mailbox
import re
import sys
import unicodedata

WINDOW = dt.timedelta(days=90)


def decode(value):
    if value is None:
        return ""
    parts = []
    for chunk, charset in email.header.decode_header(str(value)):
        if isinstance(chunk, bytes):
            chunk = chunk.decode(charset or "ascii", errors="replace")
        parts.append(chunk)
    return " ".join("".join(parts).split())


def ids(value):
    return re.findall(r"<([^<>]+)>", value or "")


def subject_key(subject):
    s = " ".join(subject.casefold().split())
    while True:
        before = s
        for prefix in ("re:", "fwd:", "fw:"):
            if s.startswith(prefix):
                s = s[len(prefix):].lstrip()
        m = re.match(r"^\[[^\]]*\]\s*", s)
        if m:
            s = s[m.end():]
        if s == before:
            return s


def fold_name(name):
    s = "".join(c for c in unicodedata.normalize("NFKD", name) if not unicodedata.combining(c))
    s = s.casefold()
    s = "".join(c if c.isalnum() else " " for c in s)
    return " ".join(sorted(s.split()))


def load(path, list_id):
    out = []
    for msg in mailbox.mbox(path):
        name, addr = email.utils.parseaddr(decode(msg["From"]))
        local, _, domain = addr.rpartition("@")
        sent = email.utils.parsedate_to_datetime(msg["Date"]).astimezone(dt.timezone.utc)
        out.append({
            "id": ids(msg["Message-ID"])[0],
            "list": list_id,
            "key": local.casefold() + "@" + domain.lower(),
            "domain": domain.lower(),
            "name": name,
            "sent": sent,
            "irt": (ids(msg["In-Reply-To"]) or [None])[0],
            "refs": ids(" ".join(str(msg.get("References", "")).split())),
            "skey": subject_key(decode(msg["Subject"])),
        })
    out.sort(key=lambda m: (m["sent"], m["id"]))
    return out


def resolve(messages):
    """Union-find over sender keys; merges keys sharing domain and folded name."""
    parent = {m["key"]: m["key"] for m in messages}

    def find(k):
        while parent[k] != k:
            k = parent[k]
        return k

    seen = {}
    for m in messages:
        if not m["name"] or "@" in m["name"]:
            continue
        bucket = (m["domain"], fold_name(m["name"]))
        if bucket in seen:
            a, b = find(seen[bucket]), find(m["key"])
            if a != b:
                parent[max(a, b)] = min(a, b)
        else:
            seen[bucket] = m["key"]
    groups = {}
    for k in parent:
        groups.setdefault(find(k), set()).add(k)
    return {k: min(g) for g in groups.values() for k in g}


def thread(messages):
    present = {m["id"] for m in messages}
    parent = {}
    for i, m in enumerate(messages):
        p = None
        if m["irt"] in present and m["irt"] != m["id"]:
            p = m["irt"]
        if p is None:
            for r in reversed(m["refs"]):
                if r in present and r != m["id"]:
                    p = r
                    break
        if p is None and m["skey"]:
            for e in messages[:i]:
                if (e["list"], e["skey"]) == (m["list"], m["skey"]) and e["sent"] >= m["sent"] - WINDOW:
                    p = e["id"]
                    break
        # Drop links that would close a cycle.
        up = p
        while up is not None and up != m["id"]:
            up = parent.get(up)
        parent[m["id"]] = p if up is None else None
    root = {}
    for m in messages:
        r = m["id"]
        while parent[r] is not None:
            r = parent[r]
        root[m["id"]] = r
    return parent, root


def ranked(counts):
    return [[k, v] for k, v in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def tallies(messages):
    person = resolve(messages)
    by_id = {m["id"]: m for m in messages}
    posts, domains, posters = {}, {}, {}
    for m in messages:
        p = person[m["key"]]
        posts[p] = posts.get(p, 0) + 1
        domains[m["domain"]] = domains.get(m["domain"], 0) + 1
        posters.setdefault(m["domain"], set()).add(p)
    parent, root = thread(messages)
    threads = {}
    for m in messages:
        threads.setdefault(root[m["id"]], []).append(m["id"])
    members = {r: {person[by_id[i]["key"]] for i in ids_} for r, ids_ in threads.items()}
    everyone = sorted(set(person.values()))
    edges = []
    for a in everyone:
        for b in everyone:
            if a < b:
                w = sum(1 for s in members.values() if a in s and b in s)
                if w:
                    edges.append([a, b, w])
    answering = {}
    for p in everyone:
        counts = {}
        for m in messages:
            if person[m["key"]] != p or parent[m["id"]] is None:
                continue
            q = person[by_id[parent[m["id"]]]["key"]]
            if q != p:
                counts[q] = counts.get(q, 0) + 1
        answering[p] = [[q, w] for q, w in sorted(counts.items())]
    return {
        "message_count": len(messages),
        "persons": {p: sorted(k for k, v in person.items() if v == p) for p in everyone},
        "posts_per_person": ranked(posts),
        "posts_per_domain": ranked(domains),
        "posters_per_domain": ranked({d: len(s) for d, s in posters.items()}),
        "threads": {r: ids_ for r, ids_ in sorted(threads.items())},
        "thread_sizes": sorted((len(v) for v in threads.values()), reverse=True),
        "social_edges": edges,
        "answering": answering,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("corpus")
    ap.add_argument("--list", default="xquery")
    ap.add_argument("--check")
    args = ap.parse_args()
    result = tallies(load(args.corpus, args.list))
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.check:
        with open(args.check, encoding="utf-8") as f:
            frozen = json.load(f)
        if frozen != result:
            sys.stderr.write("oracle output differs from " + args.check + "\n" + text)
            return 1
        return 0
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Convert third-party-web's entities JSON into the strict entities format.

Usage: gen_entities.py <entities-nostats.json> <out.json>

Output is a JSON array of {"name", "domains", "category"}. Wildcard domains
("*.example.com") become plain suffixes. Category strings are kept verbatim;
translation to classifier categories happens at load time.
"""
import json
import sys


def main():
    src = json.load(open(sys.argv[1], encoding="utf-8"))
    out = []
    for e in src:
        category = e.get("category") or (e.get("categories") or [None])[0]
        domains = []
        for d in e.get("domains", []):
            d = d[2:] if d.startswith("*.") else d
            d = d.lower()
            if d and d not in domains:
                domains.append(d)
        if not domains or category is None:
            continue
        out.append({"name": e["name"], "domains": domains, "category": category})
    with open(sys.argv[2], "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1, ensure_ascii=False)
        f.write("\n")
    print(len(out))


if __name__ == "__main__":
    main()

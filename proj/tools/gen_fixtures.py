#!/usr/bin/env python3
"""Generates the fixture bundles under fixtures/.

The bundles are synthetic but shaped so that running the audit reproduces the
target funnel, validation and analysis numbers exactly. Output is fully
deterministic (fixed seeds); rerun after changing this script and commit the
result.

    python3 tools/gen_fixtures.py [--out fixtures]
"""

import argparse
import hashlib
import json
import math
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
THRESHOLDS = json.loads((ROOT / "data" / "thresholds.json").read_text())

EARTH_RADIUS_KM = 6371.0088
MAX_SPEED = 4.0 / 9.0 * 299.792458  # km/ms

SOURCE_COUNTRIES = ["RO", "FI", "IT", "GR", "SK", "PL", "CZ", "ES", "HR", "HU",
                    "AT", "DE", "PT", "IE", "BG", "FR", "SE", "DK", "BE"]

# A few city coordinates per country; servers and probes are placed on them.
CITIES = {
    "US": [(40.71, -74.01), (34.05, -118.24), (41.88, -87.63), (47.61, -122.33), (38.95, -77.45), (32.78, -96.80)],
    "TR": [(41.01, 28.98), (39.93, 32.86), (38.42, 27.14)],
    "RU": [(55.76, 37.62), (59.93, 30.34), (55.03, 82.92), (56.84, 60.61)],
    "MX": [(19.43, -99.13), (20.67, -103.35), (25.69, -100.32)],
    "IN": [(19.08, 72.88), (28.61, 77.21), (13.08, 80.27)],
    "SG": [(1.35, 103.82)],
    "HK": [(22.32, 114.17)],
    "BR": [(-23.55, -46.63), (-22.91, -43.17), (-3.12, -60.02)],
    "AE": [(25.20, 55.27), (24.45, 54.38)],
    "AU": [(-33.87, 151.21), (-37.81, 144.96), (-31.95, 115.86)],
    "TH": [(13.76, 100.50), (9.78, 98.59)],
    "CN": [(39.90, 116.41), (31.23, 121.47), (23.13, 113.26)],
    "UA": [(50.45, 30.52), (46.48, 30.72)],
    "MY": [(3.14, 101.69)],
    "CA": [(45.50, -73.57), (43.65, -79.38)],
    "DE": [(50.11, 8.68), (52.52, 13.40)],
    "FR": [(48.86, 2.35)],
    "NL": [(52.37, 4.90)],
    "IE": [(53.35, -6.26)],
    "SE": [(59.33, 18.07)],
    "IT": [(45.46, 9.19)],
    "PK": [(24.86, 67.01)],
}

IATA = {
    "US": ["iad", "lax", "ord", "dfw", "sea", "atl", "jfk", "ewr", "sjc", "mia"],
    "TR": ["ist", "saw", "esb"],
    "RU": ["svo", "led", "dme"],
    "MX": ["mex", "gdl"],
    "IN": ["bom", "del"],
    "SG": ["sin"],
    "HK": ["hkg"],
    "BR": ["gru"],
    "AE": ["dxb"],
    "AU": ["syd"],
    "TH": ["bkk", "unn"],
}

CATEGORIES = ["Arts & Entertainment", "Computers Electronics and Technology", "Ecommerce & Shopping",
              "Sports", "Finance", "Travel and Tourism", "Games", "Lifestyle", "Health", "Science and Education"]
CATEGORY_WORDS = {
    "News & Media Publishers": "news", "Arts & Entertainment": "arts", "Computers Electronics and Technology": "tech",
    "Ecommerce & Shopping": "shop", "Sports": "sport", "Finance": "bank", "Travel and Tourism": "travel",
    "Games": "games", "Lifestyle": "style", "Health": "health", "Science and Education": "edu",
}

CCTLD = {c: c.lower() for c in SOURCE_COUNTRIES}
CCTLD["NL"] = "nl"


def haversine(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.atan2(math.sqrt(h), math.sqrt(1 - h))


def threshold_ms(cc):
    if cc in THRESHOLDS.get("latam_overrides", {}):
        avg = THRESHOLDS["latam_overrides"][cc]
    else:
        avg = THRESHOLDS["averages"][THRESHOLDS["country_region"][cc]]
    return THRESHOLDS["fraction"] * avg


def iso(ts):
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def r3(x):
    return round(x, 3)


def write_lines(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines))


def write_csv(path, header, rows):
    write_lines(path, [header] + [",".join(str(v) for v in r) for r in rows])


def dumps(obj):
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


class IpPool:
    """Hands out addresses from per-ASN /16 prefixes."""

    def __init__(self):
        self.next_prefix = 0
        self.prefixes = {}  # asn -> (a, b, next host)

    def prefix(self, asn):
        if asn not in self.prefixes:
            k = self.next_prefix
            self.next_prefix += 1
            self.prefixes[asn] = [23 + k // 200, k % 200 + 10, 0]
        a, b, _ = self.prefixes[asn]
        return f"{a}.{b}.0.0/16"

    def take(self, asn):
        self.prefix(asn)
        p = self.prefixes[asn]
        n = p[2]
        p[2] += 1
        return f"{p[0]}.{p[1]}.{n // 250}.{n % 250 + 2}"


# ---------------------------------------------------------------------------
# Traceroute construction


def hops_for(rng, dst_ip, eff, basis, router_seed, outcome="ok"):
    """Builds hops whose extracted latency is exactly `eff` on `basis`.

    basis: "diff" (last - first), "last" (first hop untimed), "fgl" (first > last).
    outcome "unresponsive" ends the trace at a router.
    """
    r1 = f"10.{router_seed % 250}.{(router_seed // 250) % 250}.1"
    r2 = f"172.16.{router_seed % 250}.{rng.randint(1, 250)}"
    if basis == "diff":
        first = r3(rng.uniform(0.3, 3.0))
        last = r3(first + eff)
    elif basis == "last":
        first = None
        last = r3(eff)
    else:  # fgl: first exceeds last, effective is the last hop
        last = r3(eff)
        first = r3(last + rng.uniform(0.5, 5.0))
    hop1 = {"hop": 1, "replies": [{"from": "*"}] * 3 if first is None else
            [{"from": r1, "rtt": first}, {"from": r1, "rtt": r3(first + 0.2)}, {"from": r1, "rtt": r3(first + 0.4)}]}
    mid = r3((first or 0.5) + max(eff, 1.0) / 2)
    hop2 = {"hop": 2, "replies": [{"from": r2, "rtt": mid}]}
    if outcome == "unresponsive":
        hop3 = {"hop": 3, "replies": [{"from": "*"}, {"from": "*"}, {"from": "*"}]}
        return [hop1, hop2, hop3]
    hop3 = {"hop": 3, "replies": [{"from": dst_ip, "rtt": r3(last + 0.8)}, {"from": dst_ip, "rtt": last},
                                  {"from": dst_ip, "rtt": r3(last + 0.3)}]}
    return [hop1, hop2, hop3]


def extracted(hops, dst_ip):
    """Mirror of the library's extraction, used to self-check generated traces."""
    best = {}
    for h in hops:
        timed = [r["rtt"] for r in h["replies"] if r.get("from", "*") != "*" and "rtt" in r]
        froms = [r["from"] for r in h["replies"] if r.get("from", "*") != "*"]
        if froms:
            best[h["hop"]] = (froms[0], min(timed) if timed else None)
    if not best:
        return None
    last_idx = max(best)
    frm, last = best[last_idx]
    if frm != dst_ip or last is None:
        return None
    first = best.get(1, (None, None))[1] if 1 in best else None
    if first is None:
        return ("last", last)
    if first > last:
        return ("fgl", last)
    return ("diff", r3(last - first))


def trace_line(msm, ascp, target, dst_ip, stage, ts, hops, probe=None):
    doc = {"msm_id": msm, "src_asn": ascp[0], "src_country": ascp[1]}
    if probe is not None:
        doc["probe_lat"] = probe[0]
        doc["probe_lon"] = probe[1]
    doc.update({"target": target, "dst_ip": dst_ip, "stage": stage, "timestamp": iso(ts), "hops": hops})
    return dumps(doc)


# ---------------------------------------------------------------------------
# Campaign bundle


def gen_campaign(out):
    rng = random.Random(20220915)
    pool = IpPool()
    t0 = datetime(2022, 8, 20, 8, 0, 0, tzinfo=timezone.utc)

    # Source vantage points: four ASCPs per audited country plus one NL ASCP.
    ascps = []
    org_rows, asmap_rows = [], []
    for ci, cc in enumerate(SOURCE_COUNTRIES):
        for k in range(4):
            asn = 50000 + ci * 10 + k
            ascps.append((asn, cc))
            org_rows.append((asn, f"ORG-ACCESS-{cc}{k}"))
    nl_ascp = (50990, "NL")
    org_rows.append((nl_ascp[0], "ORG-ACCESS-NL0"))
    by_country = {cc: [a for a in ascps if a[1] == cc] for cc in SOURCE_COUNTRIES}

    # Sites: 32 per country, categories assigned so the tracker-loading pool works out.
    sites = {cc: [] for cc in SOURCE_COUNTRIES}
    site_category = {}
    news_needed = 120
    n = 0
    for cc in SOURCE_COUNTRIES:
        for i in range(32):
            if i < 8:
                cat = "News & Media Publishers"
            else:
                cat = CATEGORIES[(i + SOURCE_COUNTRIES.index(cc)) % len(CATEGORIES)]
            name = f"{CATEGORY_WORDS[cat]}{i}{cc.lower()}.{CCTLD[cc]}"
            sites[cc].append(name)
            site_category[name] = cat
            n += 1
    all_sites = [s for cc in SOURCE_COUNTRIES for s in sites[cc]]

    # Tracker-loading pool: 120 news sites + 119 others; 4 pool sites stay uncategorized.
    news_sites = [s for s in all_sites if site_category[s] == "News & Media Publishers"]
    other_sites = [s for s in all_sites if site_category[s] != "News & Media Publishers"]
    rng.shuffle(news_sites)
    rng.shuffle(other_sites)
    by_cat = {}
    for s in other_sites:
        by_cat.setdefault(site_category[s], []).append(s)
    pool_other = []
    for cat, want in [("Arts & Entertainment", 25), ("Computers Electronics and Technology", 22),
                      ("Ecommerce & Shopping", 21)]:
        pool_other += by_cat[cat][:want]
    rest = [s for s in other_sites if s not in set(pool_other)]
    rest = [s for s in rest if site_category[s] not in
            ("Arts & Entertainment", "Computers Electronics and Technology", "Ecommerce & Shopping")]
    pool_other += rest[:119 - len(pool_other)]
    tracker_pool = news_sites[:news_needed] + pool_other
    assert len(tracker_pool) == 239 and len(set(tracker_pool)) == 239
    uncategorized = set(pool_other[-4:])
    tracker_pool_set = set(tracker_pool)

    # Site hosting: EU providers (adequate), one per country.
    resolutions = []
    geodb = {}
    for ci, cc in enumerate(SOURCE_COUNTRIES):
        asn = 40000 + ci
        org_rows.append((asn, f"ORG-HOST-{cc}"))
        asmap_rows.append((pool.prefix(asn), asn))
        host_cc = cc
        for s in sites[cc]:
            ip = pool.take(asn)
            resolutions.append((s, ip))
            geodb[ip] = (host_cc, CITIES.get(host_cc, CITIES["DE"])[0] if host_cc in CITIES else (50.0, 10.0), "city")
    nl_sites = [f"nieuws{i}.nl" for i in range(5)]
    org_rows.append((40099, "ORG-HOST-NL"))
    asmap_rows.append((pool.prefix(40099), 40099))
    for s in nl_sites:
        ip = pool.take(40099)
        resolutions.append((s, ip))
        geodb[ip] = ("NL", CITIES["NL"][0], "city")

    # Adequate third-party CDNs loaded by many sites.
    cdn_domains = []
    for j, cc in enumerate(["DE", "FR", "IE", "SE", "CA"]):
        asn = 41000 + j
        org_rows.append((asn, f"ORG-CDN-{cc}"))
        asmap_rows.append((pool.prefix(asn), asn))
        for k in range(6):
            d = f"edge{k}.eucdn{j}.com"
            ip = pool.take(asn)
            cdn_domains.append(d)
            resolutions.append((d, ip))
            geodb[ip] = (cc, CITIES[cc][0], "city")
    # Domains whose addresses are missing from the geolocation source.
    unknown_domains = []
    org_rows.append((42000, "ORG-UNKNOWN"))
    asmap_rows.append((pool.prefix(42000), 42000))
    for k in range(12):
        d = f"node{k}.unmapped-net.com"
        resolutions.append((d, pool.take(42000)))
        unknown_domains.append(d)

    # Destination providers: two ASNs per non-adequate country, AWS and Google.
    dest_countries = ["US", "TR", "RU", "MX", "IN", "SG", "HK", "BR", "AE", "AU", "TH", "CN", "UA", "MY"]
    providers = {}
    for di, cc in enumerate(dest_countries):
        providers[cc] = []
        for j in range(2):
            asn = 60000 + di * 10 + j
            providers[cc].append(asn)
            org_rows.append((asn, f"ORG-HOSTING-{cc}{j}"))
            asmap_rows.append((pool.prefix(asn), asn))
    AWS, GOOGLE = 16509, 15169
    org_rows += [(AWS, "ORG-AMAZON"), (GOOGLE, "ORG-GOOGLE")]
    asmap_rows += [(pool.prefix(AWS), AWS), (pool.prefix(GOOGLE), GOOGLE)]

    servers = []  # dicts: ip, domain, country, group, rdns, measured, ...
    domain_counter = [0]

    def new_server(cc, group, asn=None, tracker=None):
        asn = asn or rng.choice(providers[cc])
        ip = pool.take(asn)
        domain_counter[0] += 1
        n = domain_counter[0]
        domain = tracker.format(n=n) if tracker else f"cdn{n}.prov{asn}.com"
        s = {"ip": ip, "domain": domain, "country": cc, "group": group, "asn": asn, "n": n,
             "city": rng.randrange(len(CITIES[cc])), "gran": "city", "rdns": None, "chains": [],
             "tracker": tracker is not None}
        servers.append(s)
        resolutions.append((domain, ip))
        return s

    # Tracker domains: listed in easylist, hosts list, or the manual list.
    easylist_trackers = [f"adsmetrics{k}.com" for k in range(30)]
    hosts_trackers = [f"trackpixel{k}.net" for k in range(30)]
    manual_trackers = ["24media.gr", "almatalent.fi", "cdn-expressen.se", "mailchimp.com", "amlimg.com"]
    tracker_templates = ([f"px{{n}}.{d}" for d in easylist_trackers] + [f"t{{n}}.{d}" for d in hosts_trackers] +
                         [f"s{{n}}.{d}" for d in manual_trackers])

    # --- Final sample: 247 IPs (149 measured twice, 98 once) -----------------
    # (rdns outcome, doubles, singles)
    final_plan = [("confirm_us", 103, 0), ("confirm_other", 24, 1), ("reassign", 6, 1),
                  ("nohost", 8, 29), ("nogeo", 8, 67)]
    other_confirm_cc = ["TR", "RU", "MX", "IN", "SG", "HK", "BR", "AE", "AU", "TH"]
    final_servers = []
    ti = 0
    for outcome, doubles, singles in final_plan:
        for m in [2] * doubles + [1] * singles:
            if outcome == "confirm_us":
                cc = "US"
            elif outcome == "confirm_other":
                cc = other_confirm_cc[len([s for s in final_servers if s["outcome"] == outcome]) % len(other_confirm_cc)]
            elif outcome == "reassign":
                cc = ["US", "RU", "US", "TR", "US", "RU", "US"][len([s for s in final_servers if s["outcome"] == outcome])]
            else:
                cc = rng.choice(["US", "US", "US", "TR", "RU", "MX", "IN"])
            tracker = None
            # Every fourth final server is a tracker (about 62 IPs).
            if len(final_servers) % 4 == 1:
                tracker = tracker_templates[ti % len(tracker_templates)]
                ti += 1
            asn = AWS if (outcome == "confirm_us" and len(final_servers) % 5 == 0) else None
            s = new_server(cc, "final", asn=asn, tracker=tracker)
            s["outcome"] = outcome
            s["measurements"] = m
            final_servers.append(s)

    # rDNS hostnames for final servers.
    reassign_to = {"US": "MX", "RU": "TR", "TR": "RU"}
    for s in final_servers:
        dashed = s["ip"].replace(".", "-")
        o = s["outcome"]
        if o == "confirm_us":
            if s["asn"] == AWS:
                s["rdns"] = f"ec2-{dashed}.compute-1.amazonaws.com"
            else:
                s["rdns"] = f"ae{s['n'] % 9 + 1}.cr1.{rng.choice(IATA['US'])}{rng.randint(1, 9)}.transit{s['asn']}.net"
        elif o == "confirm_other":
            code = rng.choice(IATA[s["country"]])
            s["rdns"] = (f"unn-{dashed}.datapacket.com" if code == "unn"
                         else f"xe-0-{s['n'] % 4}.{code}{rng.randint(1, 4)}.transit{s['asn']}.net")
        elif o == "reassign":
            target = reassign_to[s["country"]]
            s["reassigned"] = target
            s["rdns"] = f"be{s['n'] % 7 + 1}.{IATA[target][0]}{rng.randint(1, 3)}.transit{s['asn']}.net"
        elif o == "nohost":
            s["rdns"] = "" if s["n"] % 2 else None  # empty row or no row at all
        else:
            s["rdns"] = f"host{s['n']}.static.{dashed}.clients.hoster{s['asn']}.com"

    # --- DX: 202 IPs measured once and excluded at destination or rDNS ------
    dx = []
    for group, count in [("dx_unresp", 19), ("dx_gran", 57), ("dx_sol", 89), ("dx_adequate", 37)]:
        for k in range(count):
            if group == "dx_sol":
                cc = ["US", "RU", "BR", "AU", "IN", "CN"][k % 6]
            elif group == "dx_adequate":
                cc = "US" if k < 31 else ["RU", "TR"][k % 2]
            else:
                cc = rng.choice(["US", "US", "TR", "RU", "UA", "CN", "MY", "SG"])
            asn = AWS if (group == "dx_adequate" and k < 31) else None
            s = new_server(cc, group, asn=asn)
            s["measurements"] = 1
            dashed = s["ip"].replace(".", "-")
            if group == "dx_adequate":
                s["rdns"] = (f"ec2-{dashed}.ca-central-1.compute.amazonaws.com" if k < 31
                             else f"xe-1-0-{k}.fra{k % 3 + 1}.carrier{s['asn']}.net")
            elif group == "dx_gran" and k < 50:
                s["gran"] = "country"
            elif k % 3 == 0:
                s["rdns"] = f"host{s['n']}.static.{dashed}.clients.hoster{s['asn']}.com"
            dx.append(s)

    # --- UM: 149 source survivors never measured from the destination --------
    um = [new_server(rng.choice(["US", "US", "TR", "RU", "IN", "BR"]), "um") for _ in range(149)]
    for s in um:
        s["measurements"] = 0
    # --- SX: excluded by the source-based gate only ---------------------------
    sx = [new_server(rng.choice(["US", "US", "US", "TR", "RU", "IN", "SG", "BR", "MX", "AE", "UA"]), "sx")
          for _ in range(1500)]
    for s in sx:
        s["measurements"] = 0

    # Geolocation rows for every server.
    for s in servers:
        point = CITIES[s["country"]][s["city"]]
        if s["gran"] == "country":
            geodb[s["ip"]] = (s["country"], None, "country")
        else:
            geodb[s["ip"]] = (s["country"], point, "city")

    # --- Source traceroutes (9,905 lines) ------------------------------------
    # Chains: each destination measurement keys (ip, source ASN). Each needs a
    # passing source trace from that ASCP.
    source = []  # (ascp, server, kind) kind in pass/below/zero/unresp/fgl
    measured = [s for s in servers if s["measurements"] > 0]
    for s in measured:
        chosen = rng.sample(ascps, s["measurements"])
        s["chains"] = chosen
        for a in chosen:
            source.append((a, s, "pass"))
    for s in um:
        source.append((rng.choice(ascps), s, "pass"))
    # 512 extra passing traces: repeats on final chains and non-chain ASCPs.
    finals_chains = [(a, s) for s in final_servers for a in s["chains"]]
    for k in range(300):
        a, s = rng.choice(finals_chains)
        source.append((a, s, "pass"))
    survivors = final_servers + dx + um
    for k in range(212):
        s = rng.choice(survivors)
        chain_asns = {a[0] for a in s["chains"]}
        a = rng.choice([x for x in ascps if x[0] not in chain_asns])
        source.append((a, s, "pass"))
    assert len(source) == 1259
    # Every SX server gets at least one failing trace.
    fails = []
    for s in sx:
        fails.append(s)
    while len(fails) < 8488 + 158:
        fails.append(rng.choice(servers))
    rng.shuffle(fails)
    kinds = ["unresp"] * 28 + ["fgl"] * 130 + ["zero"] * 40 + ["below"] * (8488 - 40)
    for s, kind in zip(fails, kinds):
        source.append((rng.choice(ascps), s, kind))
    assert len(source) == 9905
    rng.shuffle(source)

    # Basis: 451 of the usable traces use the last hop only.
    usable_idx = [i for i, (_, _, k) in enumerate(source) if k in ("pass", "below", "zero")]
    last_only = set(rng.sample([i for i in usable_idx if source[i][2] != "zero"], 451))

    ip_literal_targets = set(rng.sample([i for i, (_, s, _) in enumerate(source) if s["group"] == "sx"], 60))
    src_lines = []
    counts = {"pass": 0, "below": 0, "unresp": 0, "fgl": 0, "diff": 0, "last": 0}
    for i, (a, s, kind) in enumerate(source):
        thr = threshold_ms(s["country"])
        if kind == "pass":
            eff = rng.uniform(1.1 * thr, 1.1 * thr + 120)
        elif kind == "below":
            eff = rng.uniform(0.05 * thr, 0.9 * thr)
        elif kind == "zero":
            eff = 0.0
        else:
            eff = rng.uniform(0.05 * thr, 2 * thr)
        basis = "last" if i in last_only else ("fgl" if kind == "fgl" else "diff")
        if kind == "unresp":
            basis = "diff"
        hops = hops_for(rng, s["ip"], eff, basis, i, "unresponsive" if kind == "unresp" else "ok")
        x = extracted(hops, s["ip"])
        if kind == "unresp":
            assert x is None
            counts["unresp"] += 1
        elif kind == "fgl":
            assert x[0] == "fgl"
            counts["fgl"] += 1
        else:
            assert x[0] == basis
            ok = x[1] > 0 and x[1] >= thr
            assert ok == (kind == "pass"), (kind, x, thr)
            counts["pass" if ok else "below"] += 1
            counts[basis] += 1
        target = s["ip"] if i in ip_literal_targets else s["domain"]
        ts = t0 + timedelta(seconds=37 * i)
        src_lines.append(trace_line(f"s{i + 1:05d}", a, target, s["ip"], "source", ts, hops))
    assert counts == {"pass": 1259, "below": 8488, "unresp": 28, "fgl": 130, "diff": 9296, "last": 451}, counts

    # --- Destination traceroutes ---------------------------------------------
    meas = []  # (server, source ascp)
    for s in measured:
        for a in s["chains"]:
            meas.append((s, a))
    assert len(meas) == 598
    sol_reaching = [k for k, (s, _) in enumerate(meas) if s["group"] in ("final", "dx_sol", "dx_adequate")]
    assert len(sol_reaching) == 522
    fgl_set = set(rng.sample(sol_reaching, 130))
    last_set = set(rng.sample([k for k in sol_reaching if k not in fgl_set], 7))
    gran_probe_missing = [k for k, (s, _) in enumerate(meas) if s["group"] == "dx_gran" and s["gran"] == "city"]
    assert len(gran_probe_missing) == 7
    t1 = datetime(2022, 9, 5, 8, 0, 0, tzinfo=timezone.utc)
    dst_lines = []
    dcount = {"unresp": 0, "gran": 0, "sol": 0, "pass": 0, "diff": 0, "last": 0}
    for k, (s, a) in enumerate(meas):
        server_pt = CITIES[s["country"]][s["city"]]
        cities = CITIES[s["country"]]
        if s["group"] == "dx_sol":
            far = max(range(len(cities)), key=lambda c: haversine(cities[c], server_pt))
            probe_pt = cities[far]
            d = haversine(probe_pt, server_pt)
            assert d > 500, (s["country"], d)
            eff = max(0.2, 2 * d / MAX_SPEED * rng.uniform(0.3, 0.7))
        else:
            probe_pt = rng.choice(cities)
            d = haversine(probe_pt, server_pt)
            eff = 2 * d / MAX_SPEED * 1.3 + rng.uniform(1.0, 40.0)
        basis = "fgl" if k in fgl_set else ("last" if k in last_set else "diff")
        outcome = "unresponsive" if s["group"] == "dx_unresp" else "ok"
        hops = hops_for(rng, s["ip"], eff, basis, 100000 + k, outcome)
        probe = None if k in gran_probe_missing else (probe_pt[0], probe_pt[1])
        # Probe ASCP: the source AS, located in the inferred destination country.
        ascp = (a[0], s["country"])
        x = extracted(hops, s["ip"])
        if outcome == "unresponsive":
            dcount["unresp"] += 1
        elif s["group"] == "dx_gran":
            dcount["gran"] += 1
        else:
            speed = 2 * d / x[1]
            feasible = speed <= MAX_SPEED
            assert feasible == (s["group"] != "dx_sol"), (s["group"], speed)
            dcount["pass" if feasible else "sol"] += 1
            dcount["last" if x[0] in ("last", "fgl") else "diff"] += 1
        ts = t1 + timedelta(seconds=53 * k)
        dst_lines.append(trace_line(f"d{k + 1:04d}", ascp, s["domain"], s["ip"], "destination", ts, hops, probe))
    assert dcount == {"unresp": 19, "gran": 57, "sol": 89, "pass": 433, "diff": 385, "last": 137}, dcount
    # Later re-measurements of the same keys (earliest wins) and untargeted traces.
    for j in range(10):
        s, a = meas[j * 37]
        hops = hops_for(rng, s["ip"], 1.0, "diff", 200000 + j, "unresponsive")
        ts = t1 + timedelta(days=3, seconds=j)
        dst_lines.append(trace_line(f"d9{j:03d}", (a[0], s["country"]), s["domain"], s["ip"], "destination", ts,
                                    hops, CITIES[s["country"]][0]))
    for j in range(5):
        s = sx[j]
        hops = hops_for(rng, s["ip"], 50.0, "diff", 300000 + j)
        dst_lines.append(trace_line(f"d8{j:03d}", (ascps[j][0], s["country"]), s["domain"], s["ip"],
                                    "destination", t1 + timedelta(days=4, seconds=j), hops,
                                    CITIES[s["country"]][0]))

    # --- Crawls ------------------------------------------------------------------
    crawl_dns = {}  # (site, ascp) -> list of domains
    for cc in SOURCE_COUNTRIES:
        for site in sites[cc]:
            for a in by_country[cc]:
                dns = [f"www.{site}", site]
                dns += rng.sample(cdn_domains, 3)
                if rng.random() < 0.05:
                    dns.append(rng.choice(unknown_domains))
                crawl_dns[(site, a)] = dns
    pool_crawls = [(s, a) for (s, a) in crawl_dns if s in tracker_pool_set]
    nonpool_crawls = [(s, a) for (s, a) in crawl_dns if s not in tracker_pool_set]

    # Instances: 245 final IPs appear in five crawls, two in four (1,233 total).
    tracker_finals = [s for s in final_servers if s["tracker"]]
    plain_finals = [s for s in final_servers if not s["tracker"]]
    k_of = {}
    for idx, s in enumerate(final_servers):
        k_of[s["ip"]] = 4 if idx in (5, 6) else 5
    # Tracker finals cover every pool site at least once.
    pool_sites_order = list(tracker_pool)
    rng.shuffle(pool_sites_order)
    slots = []
    for s in tracker_finals:
        slots += [s] * k_of[s["ip"]]
    assert len(slots) >= len(pool_sites_order)
    assignments = {s["ip"]: set() for s in final_servers}
    for site, s in zip(pool_sites_order, slots):
        a = rng.choice(by_country[site_country(site, sites)])
        assignments[s["ip"]].add((site, a))
    for s in tracker_finals:
        while len(assignments[s["ip"]]) < k_of[s["ip"]]:
            assignments[s["ip"]].add(rng.choice(pool_crawls))
    for s in plain_finals:
        while len(assignments[s["ip"]]) < k_of[s["ip"]]:
            assignments[s["ip"]].add(rng.choice(pool_crawls + nonpool_crawls))
    assert sum(len(v) for v in assignments.values()) == 1233
    by_ip = {s["ip"]: s for s in servers}
    for ip, crawls in assignments.items():
        for key in crawls:
            crawl_dns[key].append(by_ip[ip]["domain"])
    # Non-final servers also appear in crawls; trackers among them stay on non-pool sites.
    for s in dx + um + sx[:400]:
        for _ in range(rng.randint(1, 3)):
            crawl_dns[rng.choice(nonpool_crawls if s["tracker"] else list(crawl_dns))].append(s["domain"])

    crawl_lines = []
    for (site, a), dns in crawl_dns.items():
        seen, ordered = set(), []
        for d in dns:
            if d not in seen:
                seen.add(d)
                ordered.append(d)
        attempt = 1 if rng.random() < 0.9 else rng.randint(2, 4)
        url = ["https://www.", "http://www.", "https://", "http://"][attempt - 1] + site
        crawl_lines.append(dumps({"asn": a[0], "country": a[1], "initial_url": url, "status": "ok",
                                  "attempt": attempt, "dns": ordered, "cookies": []}))
    # Failed crawls, Google-owned targets, the excluded NL vantage point and the
    # first-party tracker case.
    for k in range(10):
        a = ascps[k * 7]
        crawl_lines.append(dumps({"asn": a[0], "country": a[1], "initial_url": f"https://unreachable{k}.{CCTLD[a[1]]}",
                                  "status": "failed", "attempt": 4, "dns": [], "cookies": []}))
    for k, cc in enumerate(["RO", "BG", "GR", "DE"]):
        a = by_country[cc][0]
        g = "google.com" if cc == "DE" else f"google.{CCTLD[cc]}"
        crawl_lines.append(dumps({"asn": a[0], "country": cc, "initial_url": f"https://www.{g}", "status": "ok",
                                  "attempt": 1, "dns": [f"www.{g}", g, final_servers[0]["domain"]], "cookies": []}))
        resolutions.append((g, pool.take(GOOGLE)))
    for site in nl_sites:
        crawl_lines.append(dumps({"asn": nl_ascp[0], "country": "NL", "initial_url": f"https://www.{site}",
                                  "status": "ok", "attempt": 1,
                                  "dns": [f"www.{site}", site, final_servers[1]["domain"]], "cookies": []}))
    topky_ip, ajax_ip = pool.take(GOOGLE), pool.take(GOOGLE)
    resolutions += [("topky.sk", topky_ip), ("ajax.googleapis.com", ajax_ip)]
    geodb[topky_ip] = ("US", CITIES["US"][0], "city")
    geodb[ajax_ip] = ("US", CITIES["US"][0], "city")
    a = by_country["SK"][0]
    crawl_lines.append(dumps({"asn": a[0], "country": "SK", "initial_url": "https://www.topky.sk", "status": "ok",
                              "attempt": 1, "dns": ["www.topky.sk", "topky.sk", "ajax.googleapis.com"],
                              "cookies": []}))
    rng.shuffle(crawl_lines)

    # --- Files ---------------------------------------------------------------------
    d = out / "campaign"
    write_lines(d / "traceroutes_source.jsonl", src_lines)
    write_lines(d / "traceroutes_destination.jsonl", dst_lines)
    write_lines(d / "crawls.jsonl", crawl_lines)
    geo_rows = []
    for ip in sorted(geodb, key=ip_key):
        cc, pt, gran = geodb[ip]
        geo_rows.append((ip, cc, pt[0] if pt else "", pt[1] if pt else "", gran))
    write_csv(d / "geodb.csv", "ip,country,lat,lon,granularity", geo_rows)
    rdns_rows = []
    for s in sorted(servers, key=lambda s: ip_key(s["ip"])):
        if s["rdns"] is not None:
            rdns_rows.append((s["ip"], s["rdns"]))
    write_csv(d / "rdns.csv", "ip,hostname", rdns_rows)
    write_csv(d / "asmap.csv", "prefix,asn", asmap_rows)
    write_csv(d / "as2org.csv", "asn,org", sorted(set(org_rows)))
    write_csv(d / "resolutions.csv", "domain,ip", sorted(set(resolutions)))
    write_lines(d / "easylist.txt", ["[Adblock Plus 2.0]", "! Title: fixture list"] +
                [f"||{t}^" for t in easylist_trackers] +
                ["||adsmetrics0.com/path/pixel.gif", "@@||eucdn0.com^", "##.banner-ad"])
    write_lines(d / "hosts.txt", ["# fixture hosts list", "127.0.0.1 localhost"] +
                [f"0.0.0.0 {t}" for t in hosts_trackers] + ["0.0.0.0 googleapis.com"])
    cat_rows = [(s, site_category[s]) for s in all_sites if s not in uncategorized]
    write_csv(d / "categories.csv", "site,category", [(s, quote(c)) for s, c in cat_rows])
    manifest = {
        "audit_date": "2022-09-15",
        "inputs": {
            "crawls": "crawls.jsonl",
            "traceroutes_source": "traceroutes_source.jsonl",
            "traceroutes_destination": "traceroutes_destination.jsonl",
            "geodb": "geodb.csv",
            "rdns": "rdns.csv",
            "asmap": "asmap.csv",
            "as2org": "as2org.csv",
            "resolutions": "resolutions.csv",
            "easylist": "easylist.txt",
            "hosts_list": "hosts.txt",
            "categories": "categories.csv",
        },
        "exclude_source_countries": ["NL"],
        "top_k": 10,
        "output_dir": "out",
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return src_lines


def site_country(site, sites):
    for cc, lst in sites.items():
        if site in lst:
            return cc
    raise KeyError(site)


def quote(v):
    return f'"{v}"' if "," in v else v


def ip_key(ip):
    return tuple(int(p) for p in ip.split("."))


# ---------------------------------------------------------------------------
# Validation bundles


def validation_bundle(out, name, plan, truth_country, seed):
    """plan: list of (source_cc, server_cc or None, kind, rdns) per DSCP."""
    rng = random.Random(seed)
    pool = IpPool()
    t0 = datetime(2022, 9, 20, 8, 0, 0, tzinfo=timezone.utc)
    ascp_of = {cc: (51000 + i, cc) for i, cc in enumerate(["FR", "PL", "DE", "IE", "ES"])}
    src_lines, dst_lines, geo_rows, rdns_rows, truth_rows, asmap_rows = [], [], [], [], [], []
    provider = 16509
    asmap_rows.append((pool.prefix(provider), provider))
    for i, (src_cc, server_cc, kind, host) in enumerate(plan):
        ip = pool.take(provider)
        truth_rows.append((ip, src_cc, truth_country(i)))
        if server_cc is None:
            continue
        point = CITIES[server_cc][i % len(CITIES[server_cc])]
        geo_rows.append((ip, server_cc, point[0], point[1], "city"))
        if kind == "nogeo":
            continue
        a = ascp_of[src_cc]
        thr = threshold_ms(server_cc)
        if kind == "unresp":
            hops = hops_for(rng, ip, 30.0, "diff", i, "unresponsive")
        elif kind == "below":
            hops = hops_for(rng, ip, rng.uniform(0.1 * thr, 0.8 * thr), "diff", i)
        else:
            hops = hops_for(rng, ip, rng.uniform(1.2 * thr, 1.2 * thr + 60), "diff", i)
        src_lines.append(trace_line(f"v{i + 1:04d}", a, ip, ip, "source", t0 + timedelta(seconds=i), hops))
        if kind in ("pass", "sol"):
            cities = CITIES[server_cc]
            if kind == "sol":
                probe = max(cities, key=lambda c: haversine(c, point))
                eff = 2 * haversine(probe, point) / MAX_SPEED * 0.5
            else:
                probe = point
                eff = rng.uniform(1.0, 10.0)
            hops = hops_for(rng, ip, eff, "diff", 5000 + i)
            dst_lines.append(trace_line(f"w{i + 1:04d}", (a[0], server_cc), ip, ip, "destination",
                                        t0 + timedelta(hours=6, seconds=i), hops, probe))
        if host:
            rdns_rows.append((ip, host.format(dashed=ip.replace(".", "-"))))
    d = out / name
    write_lines(d / "traceroutes_source.jsonl", src_lines)
    write_lines(d / "traceroutes_destination.jsonl", dst_lines)
    write_lines(d / "crawls.jsonl", [])
    write_csv(d / "geodb.csv", "ip,country,lat,lon,granularity", geo_rows)
    write_csv(d / "rdns.csv", "ip,hostname", rdns_rows)
    write_csv(d / "asmap.csv", "prefix,asn", asmap_rows)
    write_csv(d / "as2org.csv", "asn,org", [(provider, "ORG-AMAZON")])
    write_csv(d / "truth.csv", "ip,source_country,true_country", truth_rows)
    manifest = {
        "audit_date": "2022-09-15",
        "inputs": {
            "crawls": "crawls.jsonl",
            "traceroutes_source": "traceroutes_source.jsonl",
            "traceroutes_destination": "traceroutes_destination.jsonl",
            "geodb": "geodb.csv",
            "rdns": "rdns.csv",
            "asmap": "asmap.csv",
            "as2org": "as2org.csv",
        },
        "output_dir": "out",
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def gen_validation(out):
    rng = random.Random(4)
    countries = ["FR", "PL", "DE", "IE", "ES"]
    # US testbed: 200 DSCPs; 3 lack a country, 5 unresponsive, 20 below the
    # gate, 2 fail the speed-of-light check, 99 of the 170 survivors have no
    # hostname, the others carry a US airport code.
    kinds = ["nogeo"] * 3 + ["unresp"] * 5 + ["below"] * 20 + ["sol"] * 2 + ["pass"] * 170
    rng.shuffle(kinds)
    hosts_left = [None] * 99 + ["confirm"] * 71
    rng.shuffle(hosts_left)
    plan = []
    for i, kind in enumerate(kinds):
        host = None
        if kind == "pass":
            if hosts_left.pop() == "confirm":
                host = f"server-{{dashed}}.{IATA['US'][i % 10]}{i % 50 + 1}.r.cloudfront-like.net"
        plan.append((countries[i % 5], None if kind == "nogeo" else "US", kind, host))
    validation_bundle(out, "validation_us", plan, lambda i: "US", 11)

    # AWS EU regions: 1,000 DSCPs truly in the EU. 36 lack a country, 694 are
    # geolocated in the EU and 270 elsewhere; the latter are all discarded.
    eu_truth = ["DE", "IE", "FR", "SE", "IT"]
    kinds = ["nogeo"] * 36 + ["eu"] * 694 + ["unresp"] * 240 + ["below"] * 30
    rng.shuffle(kinds)
    plan = []
    na_count = 0
    for i, kind in enumerate(kinds):
        if kind == "nogeo":
            plan.append((countries[i % 5], None, kind, None))
        elif kind == "eu":
            plan.append((countries[i % 5], eu_truth[i % 5], "below", None))
        else:
            server = "PK" if na_count == 0 else "US"
            na_count += 1
            plan.append((countries[i % 5], server, kind, None))
    validation_bundle(out, "validation_aws", plan, lambda i: eu_truth[i % 5], 12)


# ---------------------------------------------------------------------------
# Statistics bundles

TABLE2 = [("RO", 6.6, 2.8, 1.4), ("FI", 4.3, 4.3, 1.1), ("IT", 0.7, 3.8, 4.0), ("GR", 1.4, 4.2, 2.9),
          ("SK", 0.8, 3.7, 3.7), ("PL", 0.8, 4.6, 2.4), ("CZ", 0.3, 3.5, 0.8), ("ES", 0.4, 2.3, 1.6),
          ("HR", 0.9, 1.7, 1.6), ("HU", 0.4, 1.8, 2.0), ("AT", 0.6, 1.7, 1.2), ("DE", 0.6, 2.1, 0.5),
          ("PT", 0.4, 1.2, 1.3), ("IE", 0.9, 1.4, 0.5), ("BG", 0.2, 1.1, 1.4), ("FR", 0.4, 1.3, 0.4),
          ("SE", 0.3, 1.3, 0.4), ("DK", 0.1, 0.2, 0.0), ("BE", 0.1, 0.1, 0.0)]

TABLE3_SOURCES = ["RO", "FI", "GR", "HR", "IE", "PL", "SK", "IT", "AT", "DE", "PT", "FR", "ES", "HU", "CZ", "SE",
                  "BG", "BE", "DK"]
TABLE3 = {
    "US": [3, 3, 16, 29, 34, 85, 46, 47, 43, 41, 5, 12, 58, 13, 17, 16, 7, 0, 0],
    "TR": [308, 2, 0, 2, 11, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 11, 1, 0, 1],
    "RU": [0, 147, 2, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 7, 0, 2, 0, 2],
    "MX": [0, 0, 0, 0, 0, 35, 0, 2, 0, 0, 1, 1, 0, 1, 0, 0, 0, 0, 0],
    "IN": [1, 1, 4, 1, 4, 4, 2, 5, 4, 1, 2, 0, 3, 0, 1, 0, 1, 0, 0],
    "SG": [0, 0, 6, 0, 0, 1, 0, 0, 2, 1, 0, 1, 1, 0, 2, 0, 0, 0, 0],
    "HK": [1, 0, 7, 1, 1, 0, 0, 1, 0, 5, 1, 0, 1, 1, 1, 0, 0, 0, 0],
    "BR": [2, 0, 0, 0, 0, 0, 1, 5, 0, 0, 0, 1, 1, 0, 2, 0, 2, 2, 0],
    "AE": [0, 0, 0, 0, 0, 0, 0, 3, 1, 0, 0, 1, 1, 0, 4, 0, 1, 0, 0],
    "AU": [0, 0, 0, 0, 0, 1, 0, 1, 0, 2, 0, 0, 1, 0, 1, 0, 0, 0, 0],
}
# Destinations outside the top 10; each has fewer traces than the 10th.
TABLE3_TAIL = [("TH", "RO", 5), ("TH", "GR", 1), ("UA", "FI", 4), ("UA", "PL", 1), ("MY", "SK", 3),
               ("MY", "IT", 1), ("CN", "DE", 3), ("CN", "HU", 1), ("IL", "AT", 2), ("ZA", "ES", 2),
               ("KR", "CZ", 1), ("AR", "PT", 1), ("QA", "BG", 1)]


def gen_stats(out):
    d = out / "stats"
    write_csv(d / "table2_rates.csv", "country,pct_traceroutes,pct_ips,pct_tracker_ips",
              [(c, f"{a:.1f}", f"{b:.1f}", f"{t:.1f}") for c, a, b, t in TABLE2])
    rows = []
    for dst, counts in TABLE3.items():
        for src, n in zip(TABLE3_SOURCES, counts):
            rows += [(src, dst)] * n
    for dst, src, n in TABLE3_TAIL:
        rows += [(src, dst)] * n
    assert len(rows) == 1140, len(rows)
    write_csv(d / "table3_flows.csv", "source_country,destination_country", rows)


# ---------------------------------------------------------------------------
# Cookie bundle

COOKIE_PLAN = [("_ga", 480, 146), ("_gid", 443, 135), ("__gfp_64b", 234, 84), ("_fbp", 223, 63)]


def gen_cookies(out):
    rng = random.Random(7)
    sites = [f"portal{k}.{SOURCE_COUNTRIES[k % 19].lower()}" for k in range(236)]
    ascps = [(50000 + ci * 10 + k, cc) for ci, cc in enumerate(SOURCE_COUNTRIES) for k in range(4)]
    cookies = {}  # (site, ascp) -> list of cookies
    for name, total, nsites in COOKIE_PLAN:
        chosen = rng.sample(sites, nsites)
        per = [1] * nsites
        for _ in range(total - nsites):
            per[rng.randrange(nsites)] += 1
        for site, k in zip(chosen, per):
            cc = site.rsplit(".", 1)[1].upper()
            vantage = [a for a in ascps if a[1] == cc]
            for j in range(k):
                a = vantage[j % len(vantage)]
                value = f"GA1.2.{rng.randrange(10**9)}.{1660000000 + rng.randrange(10**6)}"
                cookies.setdefault((site, a), []).append({"name": name, "value": value, "site": f".{site}"})
    # Noise: cookies matched by no rule, consent cookies, and exact repeats of an
    # already-seen cookie (same site, name and value) that must not be recounted.
    for k, site in enumerate(sites[:40]):
        cc = site.rsplit(".", 1)[1].upper()
        a = [x for x in ascps if x[1] == cc][0]
        cookies.setdefault((site, a), []).append({"name": "lang", "value": "en", "site": site})
        if k % 4 == 0:
            cookies[(site, a)].append({"name": "OptanonConsent", "value": f"isIABGlobal=false&v{k}", "site": site})
    dup_keys = [k for k in cookies if any(c["name"] == "_ga" for c in cookies[k])][:10]
    lines = []
    for (site, a), cs in sorted(cookies.items()):
        lines.append(dumps({"asn": a[0], "country": a[1], "initial_url": f"https://www.{site}", "status": "ok",
                            "attempt": 1, "dns": [f"www.{site}", site], "cookies": cs}))
    for key in dup_keys:
        site, _ = key
        a = [x for x in ascps if x[1] == key[1][1] and x != key[1]][0]
        ga = [c for c in cookies[key] if c["name"] == "_ga"][0]
        lines.append(dumps({"asn": a[0], "country": a[1], "initial_url": f"https://{site}", "status": "ok",
                            "attempt": 3, "dns": [site], "cookies": [ga]}))
    write_lines(out / "cookies" / "crawls.jsonl", lines)


# ---------------------------------------------------------------------------
# Replay bundle


def replay_id(spec):
    canonical = dumps(spec)
    return "replay-" + hashlib.sha256(canonical.encode()).hexdigest()[:16]


def gen_replay(out, src_lines):
    lines = src_lines[:20]
    docs = [json.loads(line) for line in lines]
    targets = [doc["target"] for doc in docs[:3]]
    spec = {
        "targets": targets,
        "probes": [{"id": 1000 + i, "asn": 50000 + i, "country": "RO"} for i in range(3)],
        "packets": 3,
        "timeout_ms": 4000,
        "protocol": "ICMP",
        "stage": "source",
    }
    mid = replay_id(spec)
    d = out / "replay"
    write_lines(d / f"{mid}.jsonl", lines)
    (d / "spec.json").write_text(json.dumps({"id": mid, "spec": spec}, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "fixtures"))
    args = ap.parse_args()
    out = Path(args.out)
    src_lines = gen_campaign(out)
    gen_validation(out)
    gen_stats(out)
    gen_cookies(out)
    gen_replay(out, src_lines)


if __name__ == "__main__":
    main()

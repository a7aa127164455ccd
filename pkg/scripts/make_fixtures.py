#!/usr/bin/env python3
"""Regenerate the bundled demo corpus under fixtures/ (seeded, deterministic).

Produces, for the fictional meeting app "meetly":
  features.jsonl            50 release-note features, 2024-01..2024-10
  reviews.jsonl             500 reviews spanning the same window
  labeled_reviews.jsonl     privacy/not_privacy training set for the classifiers
  issue_annotations.jsonl   500 review->issue annotations
  issue_annotations_mini.jsonl  50-annotation test slice
  config.json               run config wired to the files above

The banks below are vocabulary-aligned on purpose: complaint texts ground the
issue phrases' trigger tokens, and the stub simulator's templates reuse the
same privacy nouns, so an end-to-end stub run produces overlapping ledgers.
"""

from __future__ import annotations

import json
import random
from datetime import date, timedelta
from pathlib import Path

APP = "meetly"
SEED = 20240809
FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

EXISTING_MONTHS = ["2024-01", "2024-02", "2024-03", "2024-04", "2024-05", "2024-06"]
CANDIDATE_MONTHS = ["2024-07", "2024-08", "2024-09", "2024-10"]
FEATURES_PER_MONTH = 5
REVIEW_TOTAL = 500

# topic -> (feature blurbs, privacy complaints, issue phrases)
# Complaints deliberately contain every token of their issue phrases so the
# trained trigger tables stay grounded.
TOPICS: dict[str, dict[str, list[str]]] = {
    "camera": {
        "features": [
            "Users can apply virtual background filters during calls. The camera preview shows the selected filter before joining.",
            "Hosts can spotlight a participant's camera feed for everyone. A new toolbar makes switching the spotlight quick.",
        ],
        "complaints": [
            "The camera access prompt is constant now and totally unnecessary. Why does a chat screen want my camera?",
            "Unnecessary camera access everywhere since the filters update. Let me deny camera access without breaking calls.",
            "It keeps grabbing camera access in the background. Unnecessary and creepy.",
        ],
        "issues": ["unnecessary camera access"],
    },
    "microphone": {
        "features": [
            "Noise suppression now adapts to the room. Users can pick between low and high suppression from the microphone menu.",
            "Push-to-talk gets a configurable shortcut so the microphone stays muted until pressed.",
        ],
        "complaints": [
            "My microphone access indicator lights up when I am not in any call. Big microphone concern for me.",
            "The app requests microphone access at startup for no reason. That concern alone made me drop a star.",
            "Why is microphone access needed while idle? Serious concern about being listened to.",
        ],
        "issues": ["microphone access concern"],
    },
    "location": {
        "features": [
            "Meeting rooms can be suggested based on office location. The picker sorts nearby rooms first.",
            "Time-zone detection helps schedule across regions by reading the device location once.",
        ],
        "complaints": [
            "Background location tracking started after the rooms update. Tracking my location in the background is not okay.",
            "I found background location tracking enabled by default. Turn location tracking off!",
            "The app does location tracking even in the background when closed. Why?",
        ],
        "issues": ["background location tracking"],
    },
    "contacts": {
        "features": [
            "Users can invite teammates faster by syncing the device address book. Matched contacts appear with one-tap invites.",
            "Frequent collaborators get pinned automatically based on past meetings.",
        ],
        "complaints": [
            "It wants full access to my contacts just to invite one person. Contacts access is a real concern.",
            "The invite screen demands contacts access. My concern is where those contacts end up.",
            "Why does it read all my contacts? Give me single contact access instead. Huge concern.",
        ],
        "issues": ["contacts access concern"],
    },
    "data_collection": {
        "features": [
            "A redesigned onboarding asks for workspace preferences to personalise the home screen.",
            "Smart summaries condense long meetings into highlights using usage signals.",
        ],
        "complaints": [
            "The amount of data collection after the onboarding update is excessive. I never agreed to this data collection.",
            "Excessive data collection everywhere: every click seems logged. Stop the excessive collection of my data.",
            "Data collection got excessive with the new summaries. Opt me out.",
        ],
        "issues": ["excessive data collection"],
    },
    "usage_sharing": {
        "features": [
            "Admins can view aggregated usage dashboards for their workspace. Charts break down meeting minutes per team.",
            "A quality panel reports call statistics to help diagnose network problems.",
        ],
        "complaints": [
            "Caught the app sharing usage data with advertisers. Usage data sharing was never disclosed.",
            "My usage data sharing setting reset itself and targeted ads exploded. Sharing usage data by default is wrong.",
            "They keep sharing my usage data with partners. The targeted ads prove it.",
        ],
        "issues": ["usage data sharing", "targeted ads concern"],
    },
    "recordings": {
        "features": [
            "Cloud recordings get automatic chapters. Users can jump to decisions and action items.",
            "Hosts can trim cloud recordings in the browser before sharing them.",
        ],
        "complaints": [
            "My cloud recordings stay in the cloud forever; deleting recordings does nothing. Serious concern.",
            "Cloud recordings concern: who else can open my recordings stored in the cloud?",
            "The cloud keeps recordings of meetings I never asked to record. Concern about who is watching.",
        ],
        "issues": ["cloud recordings concern"],
    },
    "profile": {
        "features": [
            "Profile cards show pronouns, role, and local time. Users control which fields are visible.",
            "Avatars can be generated from a selfie with the new portrait mode.",
        ],
        "complaints": [
            "The profile setup requests excessive personal information: photos, phone, birthday. An excessive personal information request for a meetings app.",
            "Why the excessive personal information request at signup? My personal information is not the product.",
            "Signup demands personal information it does not need. Excessive request, instant uninstall.",
        ],
        "issues": ["excessive personal information request"],
    },
    "messages": {
        "features": [
            "Chat threads can be summarised after a meeting ends. Members see the summary in their inbox.",
            "Scheduled messages let users queue follow-ups during a call.",
        ],
        "complaints": [
            "Message history scanning is real: it summarised a private thread I never opted into. Stop scanning my message history.",
            "Found out the app does message history scanning to build summaries. My message history should be off limits.",
            "It scans message history for 'insights'. That scanning never asked for consent.",
        ],
        "issues": ["message history scanning"],
    },
    "permissions": {
        "features": [
            "A permissions checkup screen lists what the app can access and when it was last used.",
            "Guest mode lets people join meetings without creating an account.",
        ],
        "complaints": [
            "Excessive permissions after every update: storage, bluetooth, sensors. Why these excessive permissions?",
            "The permissions list keeps growing. Excessive permissions for a video call app.",
            "Fresh install asks for excessive permissions up front before showing anything.",
        ],
        "issues": ["excessive permissions"],
    },
    "analytics": {
        "features": [
            "A what's-new feed highlights recently shipped features with short demos.",
            "In-app search now covers settings, contacts, and help articles.",
        ],
        "complaints": [
            "The new feed does browsing history collection to rank items. Collecting my browsing history was never disclosed.",
            "Browsing history collection for 'personalisation'? My browsing history is none of their business.",
            "Analytics quietly collect browsing history inside the app. Disable that collection.",
        ],
        "issues": ["browsing history collection"],
    },
    "exposure": {
        "features": [
            "Participant lists display verified work emails for cross-company calls.",
            "Calendar integration attaches dial-in details to every invite.",
        ],
        "complaints": [
            "Personal data exposure: my email and phone number were visible to a whole webinar. Unacceptable data exposure.",
            "The participant panel leaks personal data. Email exposure to strangers is a dealbreaker.",
            "My personal data shows up in meetings with externals. Exposure like this needs a setting.",
        ],
        "issues": ["personal data exposure"],
    },
}

# Concerns users raise that are not tied to any shipped feature: the simulator
# never produces these, so they surface as baseline-unique issues.
REVIEW_ONLY_TOPICS: dict[str, dict[str, list[str]]] = {
    "account_security": {
        "features": [],
        "complaints": [
            "Someone logged into my account from another country. Account security concern that support ignored.",
            "Account security concern: password reset emails I never requested keep coming.",
            "My account got hijacked for a week. Security here is a joke.",
        ],
        "issues": ["account security concern"],
    },
    "billing": {
        "features": [],
        "complaints": [
            "Unexpected premium charges hit my card after the free trial. Charges I never approved.",
            "Got unexpected premium charges twice this month. Refund was denied.",
            "Premium charges appeared out of nowhere. Unexpected and shady.",
        ],
        "issues": ["unexpected premium charges"],
    },
    "spam": {
        "features": [],
        "complaints": [
            "Spam webinar invitations flooded my inbox after one public call. Where did they get my address?",
            "I get spam invitations daily now. The spam started right after signup.",
            "Endless spam invitations from bots. Block this already.",
        ],
        "issues": ["spam webinar invitations"],
    },
}

GENERIC_FEATURES = [
    "Meeting load times improve thanks to a lighter startup path. Users on older phones should notice the difference.",
    "A refreshed dark theme lands across every screen with higher contrast options.",
    "Reactions gain six new emoji and a quick-access bar during calls.",
    "Captions support three more languages and better punctuation.",
    "Whiteboards get infinite canvas and smoother pen strokes.",
    "Breakout rooms can be reshuffled with one tap between sessions.",
    "Waiting-room music can be customised by the host.",
    "Polls support images and multiple correct answers.",
    "The scheduler suggests free slots across invitees automatically.",
    "File sharing previews documents inline without downloading.",
]

GENERIC_REVIEWS = [
    "Love the new update, everything feels faster.",
    "Crashes every time I try to join from the lock screen. Please fix.",
    "Dark theme finally! Looks fantastic.",
    "Audio cuts out on bluetooth headsets since last week.",
    "Whiteboard is smooth and the pens feel great.",
    "Five stars, meetings start quicker than before.",
    "The scheduler keeps suggesting slots at 3am, not helpful.",
    "Polls are fun, my class uses them every session.",
    "Battery drain is noticeable on long calls.",
    "Captions are surprisingly accurate now.",
    "Breakout rooms shuffle is a time saver.",
    "UI feels cluttered after the redesign.",
    "Works fine on my tablet, solid app.",
    "Screen share lag got worse this month.",
    "Reactions bar is cute, kids love it.",
    # benign mentions of privacy nouns keep the classifiers honest
    "Camera quality in calls got noticeably sharper, nice work.",
    "Recording a meeting is one tap now, love it.",
    "The permissions checkup screen is actually handy.",
    "Sharing my screen to the whiteboard works first try.",
    "Location based room suggestions saved me this morning.",
]

PREFIXES = ["", "Honestly, ", "Long-time user here. ", "After the latest update, ", "Not happy: "]
SUFFIXES = ["", " Please fix this.", " Considering switching apps.", " Two stars until resolved.", " Do better."]


def _month_days(month: str) -> list[str]:
    year, mon = (int(p) for p in month.split("-"))
    start = date(year, mon, 1)
    days = []
    current = start
    while current.month == mon:
        days.append(current.isoformat())
        current += timedelta(days=1)
    return days


def build_features(rng: random.Random) -> list[dict[str, object]]:
    topic_names = sorted(TOPICS)
    records = []
    serial = 0
    for month in EXISTING_MONTHS + CANDIDATE_MONTHS:
        for slot in range(FEATURES_PER_MONTH):
            serial += 1
            if slot < 3:  # three privacy-adjacent features per month
                topic = TOPICS[topic_names[(serial + slot) % len(topic_names)]]
                blurb = rng.choice(topic["features"])
            else:
                blurb = rng.choice(GENERIC_FEATURES)
            records.append(
                {
                    "id": f"feat-{serial:03d}",
                    "app": APP,
                    "description": blurb,
                    "release_month": month,
                }
            )
    return records


def privacy_complaint(rng: random.Random) -> str:
    # roughly one in four complaints is about a non-feature concern
    pool = REVIEW_ONLY_TOPICS if rng.random() < 0.25 else TOPICS
    topic = pool[rng.choice(sorted(pool))]
    core = rng.choice(topic["complaints"])
    return f"{rng.choice(PREFIXES)}{core}{rng.choice(SUFFIXES)}".strip()


def build_reviews(rng: random.Random) -> list[dict[str, object]]:
    records = []
    serial = 0
    per_month = REVIEW_TOTAL // len(EXISTING_MONTHS + CANDIDATE_MONTHS)
    for month in EXISTING_MONTHS + CANDIDATE_MONTHS:
        days = _month_days(month)
        for _ in range(per_month):
            serial += 1
            is_privacy = rng.random() < 0.28
            text = privacy_complaint(rng) if is_privacy else rng.choice(GENERIC_REVIEWS)
            records.append(
                {
                    "id": f"rev-{serial:04d}",
                    "app": APP,
                    "text": text,
                    "timestamp": rng.choice(days),
                    "rating": rng.choice([1, 1, 2] if is_privacy else [1, 2, 3, 4, 5, 5]),
                }
            )
    return records


def build_labeled(rng: random.Random, n_each: int = 120) -> list[dict[str, str]]:
    rows = []
    for _ in range(n_each):
        rows.append({"text": privacy_complaint(rng), "label": "privacy"})
        generic = f"{rng.choice(PREFIXES)}{rng.choice(GENERIC_REVIEWS)}{rng.choice(SUFFIXES)}".strip()
        rows.append({"text": generic, "label": "not_privacy"})
    rng.shuffle(rows)
    return rows


def build_annotations(rng: random.Random, count: int = 500) -> list[dict[str, object]]:
    rows = []
    all_topics = {**TOPICS, **REVIEW_ONLY_TOPICS}
    topic_names = sorted(all_topics)
    for i in range(count):
        topic = all_topics[topic_names[i % len(topic_names)]]
        core = rng.choice(topic["complaints"])
        text = f"{rng.choice(PREFIXES)}{core}{rng.choice(SUFFIXES)}".strip()
        rows.append({"review_text": text, "issues": list(topic["issues"])})
    rng.shuffle(rows)
    return rows


def check_simulator_coverage(annotations: list[dict[str, object]]) -> None:
    """Every stub-simulator template must trigger at least one feature-linked
    issue phrase and no review-only phrase."""
    from prereview.issues import (
        IssueAnnotation,
        IssueGenConfig,
        KeywordIssueBackend,
        generate_issues,
    )
    from prereview.simulate import _TEMPLATES

    model = KeywordIssueBackend().finetune(
        [IssueAnnotation(str(r["review_text"]), tuple(r["issues"])) for r in annotations],  # type: ignore[arg-type]
        IssueGenConfig(),
    )
    review_only = {phrase for topic in REVIEW_ONLY_TOPICS.values() for phrase in topic["issues"]}
    for template in _TEMPLATES:
        text = template.format(kw="gizmo", kw2="widget")
        phrases = set(generate_issues(model, text))
        if not phrases - review_only:
            raise SystemExit(f"simulator template fires no issue phrase:\n  {text}")
        if phrases & review_only:
            raise SystemExit(
                f"simulator template fires a review-only phrase {phrases & review_only}:\n  {text}"
            )


def write_jsonl(path: Path, rows: list[dict[str, object]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    features = build_features(rng)
    reviews = build_reviews(rng)
    labeled = build_labeled(rng)
    annotations = build_annotations(rng)
    check_simulator_coverage(annotations)

    write_jsonl(FIXTURES / "features.jsonl", features)
    write_jsonl(FIXTURES / "reviews.jsonl", reviews)
    write_jsonl(FIXTURES / "labeled_reviews.jsonl", labeled)
    write_jsonl(FIXTURES / "issue_annotations.jsonl", annotations)
    write_jsonl(FIXTURES / "issue_annotations_mini.jsonl", annotations[:50])

    config = {
        "app": APP,
        "features_path": "features.jsonl",
        "reviews_path": "reviews.jsonl",
        "annotations_path": "issue_annotations.jsonl",
        "labeled_reviews_path": "labeled_reviews.jsonl",
        "cutoff": "2024-06",
        "mapper_k": 10,
        "embedding_dimension": 64,
        "matcher_mode": "exact",
        "seed": 7,
        "simulator": {"reviews_per_feature": 10, "epochs": 5},
        "backends": {
            "classifier": "stub",
            "embedding": "stub",
            "generator": "stub",
            "issue_model": "stub",
        },
    }
    (FIXTURES / "config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"wrote {len(features)} features, {len(reviews)} reviews, "
        f"{len(labeled)} labeled rows, {len(annotations)} annotations"
    )


if __name__ == "__main__":
    main()

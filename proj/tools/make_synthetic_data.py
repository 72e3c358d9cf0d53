#!/usr/bin/env python3
"""Regenerates data/synthetic: a 20-example infographic/chart set with mock fixtures."""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic"
rng = random.Random(7)

TOPICS = [
    ("Instagram", "users"), ("Coffee", "cups"), ("Cycling", "riders"), ("Recycling", "tonnes"),
    ("Streaming", "subscribers"), ("Tourism", "visitors"), ("Solar", "panels"), ("Libraries", "loans"),
    ("Marathons", "runners"), ("Podcasts", "listeners"), ("Gardening", "plots"), ("Museums", "tickets"),
]
REGIONS = ["North", "South", "East", "West", "Central", "Coastal", "Urban", "Rural", "Highland", "Island",
           "Lakeside", "Valley", "Harbor", "Metro", "Border", "Delta", "Plains", "Forest", "Desert", "Bay",
           "Canyon", "Summit", "Prairie", "Tundra", "Riverside", "Midland", "Frontier", "Capital", "Old Town",
           "New Town", "Airport", "Suburbs"]


def infographic(i, topic, noun):
    height = rng.choice([1800, 2000, 2200, 2400])
    width = 800
    n_lines = (height - 80) // 70
    regions = rng.sample(REGIONS, n_lines - 1)
    lines = [f"{topic} around the country in 2023"]
    values = []
    for r in regions:
        v = rng.randint(11, 98)
        values.append(v)
        lines.append(f"{r} region: {v}% of {noun} said yes")
    boxes = [{"text": t, "x0": 40, "y0": 40 + 70 * k, "x1": 760, "y1": 80 + 70 * k} for k, t in enumerate(lines)]
    pick = rng.randrange(len(regions))
    q = f"What percentage of {noun} in the {regions[pick]} region said yes?"
    ex_id = f"info-{i:02d}"
    example = {
        "example_id": ex_id,
        "image": {"id": ex_id, "height": height, "width": width, "source_uri": f"images/{ex_id}.png"},
        "question": q,
        "gold_answers": [f"{values[pick]}%"],
        "ocr_text": "\n".join(lines),
        "ocr_boxes": boxes,
    }
    return example, f"{values[pick]}%"


def chart(i, subset):
    categories = rng.sample(["Apples", "Pears", "Plums", "Grapes", "Limes", "Kiwis", "Figs", "Dates"], 4)
    rows = [["Fruit", "2021", "2022"]]
    for c in categories:
        rows.append([c, str(rng.randint(10, 90)), str(rng.randint(10, 90))])
    a, b = rows[1], rows[2]
    kind = i % 4
    if kind == 0:
        q = f"What is the difference between {a[0]} in 2022 and 2021?"
        gold = str(abs(int(a[2]) - int(a[1])))
        if int(a[2]) < int(a[1]):
            q = f"By how much did {a[0]} fall from 2021 to 2022?"
    elif kind == 1:
        q = f"What is the total of {a[0]} and {b[0]} in 2021?"
        gold = str(int(a[1]) + int(b[1]))
    elif kind == 2:
        q = f"Is {a[0]} in 2021 greater than {b[0]} in 2021?"
        gold = "Yes" if int(a[1]) > int(b[1]) else "No"
    else:
        q = f"What was the value of {b[0]} in 2022?"
        gold = b[2]
    ex_id = f"{subset}-{i:02d}"
    width, height = 800, 600
    boxes = [{"text": " ".join(r), "x0": 20 + 150 * k, "y0": 100 + 90 * k, "x1": 160 + 150 * k,
              "y1": 130 + 90 * k} for k, r in enumerate(rows)]
    example = {
        "example_id": ex_id,
        "image": {"id": ex_id, "height": height, "width": width, "source_uri": f"images/{ex_id}.png"},
        "question": q,
        "gold_answers": [gold],
        "structured_table": rows,
    }
    return example, gold, boxes


def main():
    fixtures = {"ocr": {}, "summarizer": {}, "programmer": {}, "plot_to_table": {}, "verifier": {"answer_key": {}}}

    info = []
    for i, (topic, noun) in enumerate(TOPICS):
        ex, gold = infographic(i, topic, noun)
        info.append(ex)
        fixtures["verifier"]["answer_key"][ex["example_id"]] = gold

    # The teaser example: a social media infographic whose evidence names Instagram.
    platforms = [("Instagram", 72), ("Snapchat", 69), ("Facebook", 51), ("Twitter", 32), ("Reddit", 18)]
    lines = ["Most used social media platforms in 2019", "Share of teens using each platform"]
    lines += [f"{name}: {share}% of teens" for name, share in platforms]
    lines += ["Survey of 1,200 teens aged 13 to 17", "Source: national youth survey"]
    insta = info[0]
    insta["question"] = "Which social media platform is most used in 2019?"
    insta["gold_answers"] = ["Instagram"]
    insta["ocr_text"] = "\n".join(lines)
    insta["ocr_boxes"] = [{"text": t, "x0": 40, "y0": 60 + 200 * k, "x1": 760, "y1": 110 + 200 * k}
                          for k, t in enumerate(lines)]
    fixtures["verifier"]["answer_key"][insta["example_id"]] = "Instagram"
    fixtures["summarizer"][insta["example_id"]] = (
        "Most used social media platforms in 2019: Instagram: 72% of teens, ahead of Snapchat: 69% of teens")

    charts = {"chartqa-human": [], "chartqa-augmented": []}
    k = 0
    for subset in charts:
        for _ in range(4):
            ex, gold, boxes = chart(k, subset)
            k += 1
            charts[subset].append(ex)
            fixtures["verifier"]["answer_key"][ex["example_id"]] = gold
            fixtures["ocr"][ex["example_id"]] = {"boxes": boxes}
            fixtures["plot_to_table"][ex["example_id"]] = ex["structured_table"]

    # One chart whose programmer never produces a parseable program.
    bad = charts["chartqa-augmented"][1]["example_id"]
    fixtures["programmer"][bad] = ["Foo(1)", "Foo(1)", "Foo(1)"]

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "infovqa.jsonl", "w") as f:
        for ex in info:
            f.write(json.dumps(ex) + "\n")
    for subset, rows in charts.items():
        with open(OUT / f"{subset}.jsonl", "w") as f:
            for ex in rows:
                f.write(json.dumps(ex) + "\n")
    with open(OUT / "fixtures.json", "w") as f:
        json.dump(fixtures, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()

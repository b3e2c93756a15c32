"""Writes the 20-record fixture corpus under fixtures/corpus.

Seventeen records satisfy the acceptance rules; the last three each break
exactly one (too few sentences, no L1 sentence, no L2/L3 sentence).
Images are small hand-drawn charts made with Pillow.
"""

import json
import os
import sys

from PIL import Image, ImageDraw

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures", "corpus")

TAGS = """L1:title
L1:chart_type
L1:axis
L1:legend
L1:encoding
L1:color
trend
statistics
comparison
outlier
"""

# (chart_type, summary markup)
RECORDS = [
    ("line", "This <chart_type>line chart</chart_type> shows <axis>monthly rainfall in millimetres</axis>. "
             "<trend>Rainfall peaks in July and falls sharply afterwards</trend>. "
             "<statistics>The wettest month receives about twice the average</statistics>."),
    ("bar", "A <chart_type>bar chart</chart_type> titled <title>Sales by region</title>. "
            "The <axis>vertical axis measures revenue in dollars</axis>. "
            "<comparison>The north region outsells the south by a wide margin</comparison>. "
            "<outlier>The west region is unusually low</outlier>."),
    ("area", "This <chart_type>area chart</chart_type> plots <axis>energy use over ten years</axis>. "
             "The area is filled in <color>green</color>. "
             "<trend>Energy use grows slowly at first and then quickly</trend>."),
    ("scatter", "The <chart_type>scatter plot</chart_type> relates <axis>height to weight</axis>. "
                "Each point is <encoding>one participant</encoding>. "
                "<trend>Taller participants tend to weigh more</trend>. "
                "<outlier>One point lies far above the rest</outlier>. "
                "<statistics>The correlation is strong</statistics>."),
    ("multivariate", "This <chart_type>combined bar and line chart</chart_type> has a <legend>legend at the top</legend>. "
                     "<comparison>Bars for 2020 exceed bars for 2019 in every quarter</comparison>. "
                     "<trend>The line for profit rises across the year</trend>."),
    ("panel", "The figure is a <chart_type>panel of four small charts</chart_type>. "
              "Each panel shares the <axis>same time axis</axis>. "
              "<comparison>The first panel varies more than the others</comparison>."),
    ("pie", "A <chart_type>pie chart</chart_type> shows <title>market share by vendor</title>. "
            "<statistics>The largest vendor holds almost half of the market</statistics>. "
            "<comparison>The two smallest vendors together hold less than a tenth</comparison>."),
    ("box", "This <chart_type>box plot</chart_type> summarises <axis>test scores per class</axis>. "
            "<statistics>Class B has the highest median</statistics>. "
            "<outlier>Class D contains several low outliers</outlier>. "
            "<comparison>The spread of class A is narrow</comparison>."),
    ("line", "Two lines are drawn in <color>red and blue</color>. "
             "The <axis>horizontal axis shows weeks</axis>. "
             "<trend>Both series decline over the period</trend>. "
             "<comparison>The red series stays above the blue one</comparison>."),
    ("bar", "The <chart_type>horizontal bar chart</chart_type> lists <axis>countries by population</axis>. "
            "<statistics>The top country has over one billion people</statistics>. "
            "<trend>Values drop quickly after the first two bars</trend>."),
    ("scatter", "A <chart_type>scatter chart</chart_type> with <encoding>point size showing city area</encoding>. "
                "<trend>Larger cities tend to have higher rents</trend>. "
                "<outlier>A small city has the highest rent</outlier>."),
    ("area", "This <chart_type>stacked area chart</chart_type> has a <legend>legend listing three sources</legend>. "
             "The <title>title reads Energy mix</title>. "
             "<trend>Solar grows steadily while coal shrinks</trend>. "
             "<statistics>By the end solar supplies a third of demand</statistics>."),
    ("line", "The <chart_type>line chart</chart_type> tracks <axis>daily temperature</axis>. "
             "<trend>Temperatures rise through spring</trend>. "
             "<statistics>The maximum is reached in late June</statistics>. "
             "<outlier>One cold day in May stands out</outlier>."),
    ("pie", "A <chart_type>donut chart</chart_type> uses <color>shades of orange</color>. "
            "Labels give <encoding>percentages for each slice</encoding>. "
            "<comparison>Housing takes the biggest share of spending</comparison>."),
    ("bar", "This <chart_type>grouped bar chart</chart_type> compares <axis>two years across five products</axis>. "
            "<comparison>Four of five products sold more in the second year</comparison>. "
            "<outlier>Product E fell by half</outlier>."),
    ("box", "The <chart_type>box plot</chart_type> shows <axis>delivery times per carrier</axis>. "
            "The <legend>legend names each carrier</legend>. "
            "<statistics>Carrier C is fastest on average</statistics>. "
            "<comparison>Carrier A varies the most</comparison>."),
    ("multivariate", "A <chart_type>chart with bars and a line</chart_type> shares <axis>one month axis</axis>. "
                     "<trend>Visitors increase every month</trend>. "
                     "<comparison>Revenue grows faster than visitors</comparison>."),
    # too few sentences
    ("line", "A <chart_type>line chart</chart_type> of <axis>stock prices</axis>. "
             "<trend>Prices climb steadily</trend>."),
    # no L1 sentence
    ("bar", "<trend>Sales rise in every quarter</trend>. "
            "<statistics>The last quarter is the best</statistics>. "
            "<comparison>Online sales overtake store sales</comparison>."),
    # no L2/L3 sentence
    ("scatter", "This is a <chart_type>scatter plot</chart_type>. "
                "The <axis>axes show age and income</axis>. "
                "Points are drawn in <color>blue</color>."),
]

PALETTE = [(200, 40, 40), (40, 70, 200), (30, 150, 60), (230, 130, 20), (130, 50, 170)]


def draw(kind, i):
    img = Image.new("RGB", (96, 96), (250, 250, 245))
    d = ImageDraw.Draw(img)
    color = PALETTE[i % len(PALETTE)]
    d.line([(12, 84), (90, 84)], fill=(40, 40, 40), width=2)
    d.line([(12, 10), (12, 84)], fill=(40, 40, 40), width=2)
    d.rectangle([8, 2, 48, 6], fill=(60, 60, 60))
    vals = [20 + ((i * 7 + k * 13) % 50) for k in range(6)]
    xs = [18 + k * 13 for k in range(6)]
    if kind in ("line", "panel"):
        d.line([(x, 84 - v) for x, v in zip(xs, vals)], fill=color, width=3)
    elif kind == "area":
        d.polygon([(18, 84)] + [(x, 84 - v) for x, v in zip(xs, vals)] + [(xs[-1], 84)], fill=color)
    elif kind in ("bar", "multivariate"):
        for x, v in zip(xs, vals):
            d.rectangle([x - 4, 84 - v, x + 4, 84], fill=color)
        if kind == "multivariate":
            d.line([(x, 84 - v // 2) for x, v in zip(xs, vals)], fill=(20, 20, 20), width=2)
    elif kind == "scatter":
        for x, v in zip(xs, vals):
            d.ellipse([x - 3, 84 - v - 3, x + 3, 84 - v + 3], fill=color)
    elif kind == "pie":
        d.pieslice([22, 18, 82, 78], 0, 130 + i * 5, fill=color)
        d.pieslice([22, 18, 82, 78], 130 + i * 5, 360, fill=(180, 180, 180))
    elif kind == "box":
        for x, v in zip(xs, vals):
            d.rectangle([x - 4, 84 - v, x + 4, 84 - v // 2], fill=color)
            d.line([(x, 84 - v - 6), (x, 84 - v)], fill=(40, 40, 40))
    return img


def main():
    os.makedirs(os.path.join(ROOT, "images"), exist_ok=True)
    with open(os.path.join(ROOT, "tags.txt"), "w") as f:
        f.write(TAGS)
    lines = []
    for i, (kind, markup) in enumerate(RECORDS):
        rid = f"fx-{i + 1:02d}"
        rel = f"images/{rid}.png"
        draw(kind, i).save(os.path.join(ROOT, rel))
        lines.append(json.dumps({
            "id": rid,
            "doi": f"10.5555/fixture.{i // 2 + 1}",
            "figure_number": i % 2 + 1,
            "image_path": rel,
            "caption": f"Figure {i % 2 + 1}.",
            "summary_markup": markup,
            "chart_type": kind,
            "split": "unassigned",
        }, sort_keys=True))
    with open(os.path.join(ROOT, "index.jsonl"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} records to {os.path.normpath(ROOT)}", file=sys.stderr)


if __name__ == "__main__":
    main()

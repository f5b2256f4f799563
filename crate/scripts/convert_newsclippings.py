#!/usr/bin/env python3
"""Convert a NewsCLIPpings split into the benchmark's JSONL dataset format.

Inputs are the public exports, which are not bundled here:

  * a split annotation file, e.g. news_clippings/data/merged_balanced/test.json,
    holding {"annotations": [{"id", "image_id", "falsified", ...}, ...]}
  * the VisualNews metadata file (origin/data.json), a list of
    {"id", "caption", "image_path", ...}

Each annotation pairs the caption of VisualNews item `id` with the image of
item `image_id`. Output lines are {"id", "image_path", "caption", "ooc"}, with
image paths resolved against --image-root and `ooc` equal to `falsified`.

    python3 scripts/convert_newsclippings.py \\
        --annotations merged_balanced/test.json \\
        --visualnews origin/data.json \\
        --image-root /data/visual_news/origin \\
        --out test.jsonl
"""

import argparse
import json
import os
import sys


def load_visualnews(path):
    with open(path, encoding="utf-8") as f:
        items = json.load(f)
    return {item["id"]: item for item in items}


def convert(annotations, visualnews, image_root, check_images):
    seen = set()
    skipped = 0
    for n, ann in enumerate(annotations):
        caption_item = visualnews.get(ann["id"])
        image_item = visualnews.get(ann["image_id"])
        if caption_item is None or image_item is None:
            skipped += 1
            continue
        record_id = "%s-%s" % (ann["id"], ann["image_id"])
        if record_id in seen:
            record_id = "%s-%d" % (record_id, n)
        seen.add(record_id)
        image_path = os.path.normpath(os.path.join(image_root, image_item["image_path"]))
        if check_images and not os.path.isfile(image_path):
            skipped += 1
            continue
        yield {
            "id": record_id,
            "image_path": image_path,
            "caption": caption_item["caption"].strip(),
            "ooc": bool(ann["falsified"]),
        }
    if skipped:
        print("skipped %d annotations with missing items or images" % skipped, file=sys.stderr)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--annotations", required=True, help="NewsCLIPpings split JSON")
    parser.add_argument("--visualnews", required=True, help="VisualNews data.json")
    parser.add_argument("--image-root", required=True, help="directory VisualNews image paths are relative to")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--limit", type=int, help="keep only the first N records")
    parser.add_argument("--no-check-images", action="store_true", help="keep records whose image file is missing")
    args = parser.parse_args(argv)

    with open(args.annotations, encoding="utf-8") as f:
        annotations = json.load(f)["annotations"]
    visualnews = load_visualnews(args.visualnews)

    written = 0
    counts = {True: 0, False: 0}
    tmp = args.out + ".tmp"
    with open(tmp, "w", encoding="utf-8") as out:
        for record in convert(annotations, visualnews, args.image_root, not args.no_check_images):
            if args.limit is not None and written >= args.limit:
                break
            out.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            counts[record["ooc"]] += 1
            written += 1
    os.replace(tmp, args.out)
    print("wrote %d records (%d ooc, %d nooc) to %s" % (written, counts[True], counts[False], args.out))


if __name__ == "__main__":
    main()

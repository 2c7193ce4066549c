"""Smoke test for the uht extension module: encode, decode, score."""

import sys

import uht


def main() -> int:
    word = [(20.0, 30.0), (80.0, 30.0), (140.0, 30.0), (140.0, 54.0), (80.0, 54.0), (20.0, 54.0)]
    heatmap, dont_care, diags = uht.render_groundtruth([word], 180, 90)
    assert heatmap.max_value() == 1.0, heatmap
    assert dont_care.max_value() == 0.0 and not diags

    dets = uht.decode(heatmap)
    assert len(dets) == 1, dets
    iou = uht.polygon_iou(dets[0].polygon, word)
    assert iou >= 0.5, iou

    again = uht.Heatmap.from_bytes(heatmap.to_bytes())
    assert again.values() == heatmap.values()

    assert uht.loss_total(heatmap, heatmap)["total"] == 0.0
    assert uht.kernel_size(15000) == 28
    assert len(uht.subdivide(word, 3)) == 7

    strict = uht.decode(heatmap, preset="msra-td500")
    assert len(strict) == 1

    scores = uht.evaluate([[word]], [[d.polygon for d in dets]])
    assert scores["fmeasure"] == 1.0, scores

    corpus = uht.synth_corpus(5, seed=3, width=256, height=256)
    found = total = 0
    for image in corpus:
        h, _, _ = uht.render_groundtruth(image["polygons"], image["width"], image["height"])
        found += len(uht.decode(h))
        total += len(image["polygons"])
    assert found == total, (found, total)

    print(f"uht smoke test ok: IoU {iou:.3f}, {total} synthetic words recovered")
    return 0


if __name__ == "__main__":
    sys.exit(main())

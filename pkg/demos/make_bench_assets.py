"""Generate the optional in-painting benchmark assets.

Writes a standard 100x100 grayscale test image (scikit-image's cameraman,
resized) and a smooth unit-norm filter bank, then prints the environment
variables that enable the optional acceptance criterion:

    python3 demos/make_bench_assets.py bench/
    LRD_BENCH_IMAGE=bench/cameraman100.pgm \
    LRD_BENCH_FILTERS=bench/filters.lrd \
    python3 -m pytest tests/test_acceptance.py -k anchor -s
"""

import sys
from pathlib import Path

from lrdec.io import write_dictionary, write_image
from lrdec.synth import make_filters


def main(out_dir):
    try:
        from skimage import data
        from skimage.transform import resize
    except ImportError:
        sys.exit("scikit-image is required to produce the test image "
                 "(pip install scikit-image)")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    image = resize(data.camera().astype(float) / 255.0, (100, 100),
                   anti_aliasing=True)
    write_image(out / "cameraman100.pgm", image)
    write_dictionary(out / "filters.lrd",
                     make_filters((5, 5), 15, seed=78, style="smooth"))
    print(f"LRD_BENCH_IMAGE={out / 'cameraman100.pgm'}")
    print(f"LRD_BENCH_FILTERS={out / 'filters.lrd'}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "bench")

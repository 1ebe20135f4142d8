"""Max-normalized Radon cumulative distribution transform (mNR-CDT).

Affine-invariant features for planar measures and grayscale images, with
nearest-neighbour and linear SVM classifiers on top. The hot loops run in a
compiled extension when available (see :data:`nrcdt.kernels.BACKEND`).
"""

__version__ = "0.1.0"

from .cdt import (
    CdtCurve,
    MnrcdtCurve,
    NrcdtField,
    QuantileGrid,
    RcdtField,
    cdt,
    curve_distance,
    max_normalized,
    mnrcdt,
    normalize,
    nrcdt_curve,
    rcdt,
    sliced_wasserstein2,
    wasserstein2,
)
from .classify import (
    CvReport,
    FeatureConfig,
    FeatureVector,
    LinearModel,
    LinearSvm,
    NearestNeighbor,
    cross_validate,
    featurize,
    featurize_many,
    nn_classify,
    svm_train,
)
from .datasets import (
    AffineSamplerConfig,
    LabeledDataset,
    LabeledItem,
    generate_academic,
    load_images,
    load_manifest,
    make_template,
    sample_affine,
    save_dataset,
)
from .errors import *  # noqa: F401,F403
from .kernels import BACKEND
from .measures import (
    DiscreteMeasure1D,
    DiscreteMeasure2D,
    Direction,
    make_measure_1d,
    make_measure_2d,
    measure_from_image,
    quantile,
)
from .radon import AffineMap, AngleGrid, apply_affine, remap_direction, slice_measure, closed_form_remap

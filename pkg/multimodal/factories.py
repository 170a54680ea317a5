"""
Factory pattern implementation for synthetic datasets.

Generators produce a MultimodalDataset from a SyntheticSpec. Every view
draws its own class centroids, so views share class structure but not
feature geometry.
"""

import logging

import numpy as np

from core.design_patterns.factory import BaseFactory
from hashing.models import ViewMatrix
from .models import MultimodalDataset, SyntheticSpec
from .services import label_view


logger = logging.getLogger(__name__)


class GaussianCentroidGenerator:
    """
    Class-major Gaussian blobs.

    Per view: n_classes centroids from N(0, 1) in d dimensions, then
    n_per_class samples per class at centroid + N(0, noise_sigma^2).
    Values are rounded to float32 so file round trips are exact.
    """

    kind = 'gaussian'

    def generate(self, spec: SyntheticSpec) -> MultimodalDataset:
        rng = np.random.default_rng(spec.seed)
        classes = np.repeat(np.arange(spec.n_classes), spec.n_per_class)
        views = []
        for index, d in enumerate(spec.dims):
            centroids = rng.normal(0.0, 1.0, size=(spec.n_classes, d))
            noise = rng.normal(0.0, 1.0, size=(classes.size, d)) * spec.noise_sigma
            data = (centroids[classes] + noise).astype(np.float32).astype(np.float64)
            views.append(ViewMatrix(data, view_id=f'view{index}'))

        labels = np.zeros((classes.size, spec.n_classes), dtype=np.uint8)
        labels[np.arange(classes.size), classes] = 1
        views.append(label_view(labels))

        logger.info(
            "Generated synthetic dataset: %d classes x %d samples, dims=%s, noise=%g, seed=%d",
            spec.n_classes, spec.n_per_class, list(spec.dims), spec.noise_sigma, spec.seed,
        )
        return MultimodalDataset(views, labels, provenance={'synthetic': spec.to_dict()})


class SyntheticDatasetFactory(BaseFactory):
    """
    Factory for synthetic dataset generators.
    """

    def __init__(self):
        super().__init__()
        self.register_product(GaussianCentroidGenerator.kind, GaussianCentroidGenerator)

    def generate(self, spec: SyntheticSpec, kind: str = GaussianCentroidGenerator.kind) -> MultimodalDataset:
        return self.create(kind).generate(spec)


# Singleton instance
synthetic_factory = SyntheticDatasetFactory()


def generate_synthetic(spec: SyntheticSpec) -> MultimodalDataset:
    """Generate the default Gaussian-centroid dataset for a spec."""
    return synthetic_factory.generate(spec)

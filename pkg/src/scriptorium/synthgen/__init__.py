"""Synthetic font-rendered word images with a randomized augmentation chain."""
from .dataset import (
    DatasetManifest,
    FontSquare,
    generate_dataset,
    load_backgrounds,
    load_image,
    read_index,
    write_dataset,
)
from .fonts import (
    FontAsset,
    WordLexicon,
    default_vocabulary_path,
    load_font_pool,
    read_vocabulary,
    sample_lexicon,
)
from .recipe import GeneratorConfig, RenderRecipe, derive_seed, sample_recipe
from .render import (
    SyntheticSample,
    color_jitter,
    composite_background,
    generate_sample,
    grayscale_dilation,
    ink_fraction,
    render_word,
)
from .tps import ThinPlateSpline, apply_tps, control_grid

__all__ = [
    "DatasetManifest", "FontAsset", "FontSquare", "GeneratorConfig", "RenderRecipe",
    "SyntheticSample", "ThinPlateSpline", "WordLexicon", "apply_tps", "color_jitter",
    "composite_background", "control_grid", "default_vocabulary_path", "derive_seed",
    "generate_dataset", "generate_sample", "grayscale_dilation", "ink_fraction",
    "load_backgrounds", "load_font_pool", "load_image", "read_index", "read_vocabulary",
    "render_word", "sample_lexicon", "sample_recipe", "write_dataset",
]

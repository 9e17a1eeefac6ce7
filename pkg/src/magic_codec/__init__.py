"""Domain-adaptive triangulation image codec with learned dictionaries."""
from .acquisition import (AcquisitionParams, KnowledgePackage, acquire, load_package,
                          save_package)
from .codec import EncodedImage, EncodeParams, Roi, decode, encode, parse, smooth
from .imageio import load_image, save_image, to_gray

__all__ = [
    "AcquisitionParams", "KnowledgePackage", "acquire", "load_package", "save_package",
    "EncodedImage", "EncodeParams", "Roi", "decode", "encode", "parse", "smooth",
    "load_image", "save_image", "to_gray",
]
__version__ = "0.1.0"

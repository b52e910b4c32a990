"""Applications built on the extended allocation API."""
from .bounds import checked_free, checked_memcpy_auto, checked_memcpy_opt, is_oob
from .meta import meta_alloc, meta_get, meta_global_register, meta_stack_alloc
from .tree234 import Tree234
from .typed import (ext_tag_get, ext_tag_set, ext_untag, tag_get, tag_set, type_index, untag)
from .vector import FatVector, LowFatVectorType

__all__ = [
    "is_oob", "checked_memcpy_auto", "checked_memcpy_opt", "checked_free",
    "meta_alloc", "meta_get", "meta_stack_alloc", "meta_global_register",
    "type_index", "tag_set", "tag_get", "untag", "ext_tag_set", "ext_tag_get", "ext_untag",
    "LowFatVectorType", "FatVector", "Tree234",
]

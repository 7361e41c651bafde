#include "isoforge/errors.hpp"

// Error classes are header-only; this translation unit anchors the vtable.
namespace isoforge {}

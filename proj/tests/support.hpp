#pragma once

// Instance generators shared by the test binaries.

#include "brwskel/harness/instances.hpp"

namespace testsupport {

using brwskel::harness::lca;
using brwskel::harness::matrix_from_heights;
using brwskel::harness::random_heights;
using brwskel::harness::random_path_family;
using brwskel::harness::random_shape;

}  // namespace testsupport

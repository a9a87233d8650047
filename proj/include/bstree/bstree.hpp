#pragma once

// Umbrella header for the BSTree stream-indexing library.

#include "bstree/bench.hpp"
#include "bstree/errors.hpp"
#include "bstree/prune.hpp"
#include "bstree/query.hpp"
#include "bstree/rng.hpp"
#include "bstree/sax.hpp"
#include "bstree/stream.hpp"
#include "bstree/tree.hpp"

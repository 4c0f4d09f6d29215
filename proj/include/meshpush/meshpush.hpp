// meshpush.hpp — convenience umbrella over the full library.
#pragma once

#include "meshpush/core.hpp"
#include "meshpush/fit.hpp"
#include "meshpush/geometry.hpp"
#include "meshpush/intersect.hpp"
#include "meshpush/lp.hpp"
#include "meshpush/mesh.hpp"
#include "meshpush/obj_io.hpp"
#include "meshpush/pushing.hpp"
#include "meshpush/regularizers.hpp"
#include "meshpush/rng.hpp"
#include "meshpush/sampling.hpp"
#include "meshpush/version.hpp"

#pragma once

#include "eitmono/error.hpp"
#include "eitmono/forward.hpp"
#include "eitmono/geometry.hpp"
#include "eitmono/inversion.hpp"
#include "eitmono/io.hpp"
#include "eitmono/monotonicity.hpp"
#include "eitmono/protocol.hpp"
#include "eitmono/sensitivity.hpp"

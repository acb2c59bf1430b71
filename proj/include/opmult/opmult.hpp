#pragma once

#include "opmult/compactness.hpp"
#include "opmult/errors.hpp"
#include "opmult/io.hpp"
#include "opmult/linalg.hpp"
#include "opmult/norms.hpp"
#include "opmult/saar.hpp"
#include "opmult/schur.hpp"
#include "opmult/sdp.hpp"
#include "opmult/tensorrep.hpp"

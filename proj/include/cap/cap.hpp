#pragma once

// Umbrella header.

#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/seqspace.hpp"
#include "cap/radii.hpp"
#include "cap/linalg.hpp"
#include "cap/taylor_fourier.hpp"
#include "cap/equilibria.hpp"
#include "cap/manifold.hpp"
#include "cap/classical.hpp"
#include "cap/fundamental.hpp"
#include "cap/integrator.hpp"
#include "cap/trapping.hpp"
#include "cap/pipeline.hpp"
#include "cap/io.hpp"
#include "cap/audit.hpp"

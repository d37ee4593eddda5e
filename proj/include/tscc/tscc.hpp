#pragma once

#include "tscc/affinity.hpp"
#include "tscc/common.hpp"
#include "tscc/curvature.hpp"
#include "tscc/diagnostics.hpp"
#include "tscc/incidence.hpp"
#include "tscc/modelgen.hpp"
#include "tscc/partition.hpp"
#include "tscc/spectral.hpp"

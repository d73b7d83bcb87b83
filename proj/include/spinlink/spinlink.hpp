#pragma once

// Umbrella header for the spin-wave entanglement simulator.

#include "spinlink/analysis.hpp"
#include "spinlink/campaign.hpp"
#include "spinlink/campaign_analysis.hpp"
#include "spinlink/config.hpp"
#include "spinlink/detection.hpp"
#include "spinlink/errors.hpp"
#include "spinlink/events.hpp"
#include "spinlink/matrix.hpp"
#include "spinlink/memory.hpp"
#include "spinlink/qcore.hpp"
#include "spinlink/rng.hpp"
#include "spinlink/source.hpp"
#include "spinlink/summary.hpp"
#include "spinlink/tomography.hpp"

#pragma once

#include "react/core.hpp"
#include "react/random.hpp"
#include "react/geometry.hpp"
#include "react/assignment.hpp"
#include "react/fusion.hpp"
#include "react/tracking.hpp"
#include "react/trace.hpp"
#include "react/simworld.hpp"
#include "react/netem.hpp"
#include "react/server.hpp"
#include "react/scenario.hpp"
#include "react/pipeline.hpp"
#include "react/eval.hpp"
#include "react/config.hpp"
#include "react/experiment.hpp"
#include "react/service.hpp"

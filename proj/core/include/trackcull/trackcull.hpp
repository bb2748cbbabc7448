#pragma once

#include "trackcull/candidate.hpp"
#include "trackcull/classifier.hpp"
#include "trackcull/dataset.hpp"
#include "trackcull/ert.hpp"
#include "trackcull/error.hpp"
#include "trackcull/event.hpp"
#include "trackcull/event_io.hpp"
#include "trackcull/geometry.hpp"
#include "trackcull/metrics.hpp"
#include "trackcull/mlp.hpp"
#include "trackcull/model_io.hpp"
#include "trackcull/pipeline.hpp"
#include "trackcull/random.hpp"
#include "trackcull/simgen.hpp"
#include "trackcull/version.hpp"

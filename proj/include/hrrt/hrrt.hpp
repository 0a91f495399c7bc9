#pragma once

#include "hrrt/dataset.hpp"
#include "hrrt/errors.hpp"
#include "hrrt/evaluation.hpp"
#include "hrrt/gridworld.hpp"
#include "hrrt/image.hpp"
#include "hrrt/parallel.hpp"
#include "hrrt/planners.hpp"
#include "hrrt/random.hpp"
#include "hrrt/sampling.hpp"
#include "hrrt/tree.hpp"

#pragma once

#include "holdpp/linalg.hpp"
#include "holdpp/dynamics.hpp"
#include "holdpp/spectral.hpp"
#include "holdpp/sde.hpp"
#include "holdpp/score.hpp"
#include "holdpp/data.hpp"
#include "holdpp/metrics.hpp"
#include "holdpp/svg.hpp"
#include "holdpp/verify.hpp"
